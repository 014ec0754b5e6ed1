#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "flowcast/models/forecaster.hpp"

namespace flowcast::evaluation {

/// Percentage metrics are in percent. A metric with no usable terms is NaN.
struct MetricReport {
    double mae = 0.0;
    double rmse = 0.0;
    double mape = 0.0;
    double smape = 0.0;
    double mdape = 0.0;
    double gmrae = 0.0;
    std::size_t n = 0;
    std::size_t mape_skipped = 0;   ///< zero actuals left out of MAPE and MDAPE
    std::size_t gmrae_skipped = 0;  ///< terms whose naive error is zero
};

struct MetricOptions {
    /// Per-point weights for MAE, normalised to sum to one. Empty means uniform.
    std::vector<double> weights;
    /// Actual value preceding the first point; the naive forecast for index 0.
    /// Without it the first point is left out of GMRAE (not counted as skipped).
    std::optional<double> previous_actual;
};

MetricReport point_metrics(std::span<const double> actual, std::span<const double> predicted,
                           const MetricOptions& options = {});

/// (#(x > y) - #(x < y)) / (|l1| |l2|).
double cliffs_delta(std::span<const double> l1, std::span<const double> l2);

/// |delta| below this is a small effect.
inline constexpr double kSmallEffect = 0.147;

struct Treatment {
    std::string name;
    std::vector<double> samples;
};

struct RankGroup {
    int rank = 0;  ///< 1 = lowest mean
    std::vector<std::string> members;
    std::vector<std::vector<double>> samples;  ///< parallel to members
};

/**
 * Scott-Knott clustering of treatments. Treatments are sorted by mean; a list
 * is cut where the between-part variance of the means is largest, and the cut
 * is kept only when the pooled halves differ by |delta| >= kSmallEffect.
 * Every treatment needs at least two samples.
 */
std::vector<RankGroup> scott_knott(std::vector<Treatment> treatments);

/// Byte length of the canonical serialization. Throws unfitted.
std::size_t model_size(const models::Forecaster& model);

struct MetricRow {
    std::string label;
    MetricReport report;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);

/// Columns: rank,treatment,mean,n.
void write_ranks_csv(std::ostream& out, const std::vector<RankGroup>& groups);

}  // namespace flowcast::evaluation
