#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace flowcast::analysis {

/**
 * @brief Additive classical decomposition.
 *
 * trend and residual hold NaN outside [first_defined, end_defined), the
 * half-window margins of the centred moving average. seasonal is defined
 * everywhere.
 */
struct Decomposition {
    std::vector<double> observed;
    std::vector<double> trend;
    std::vector<double> seasonal;
    std::vector<double> residual;
    std::size_t period = 0;
    std::size_t first_defined = 0;
    std::size_t end_defined = 0;
};

Decomposition decompose(std::span<const double> series, std::size_t period);

/// Columns: index,observed,trend,seasonal,residual (empty cell where undefined).
void write_csv(std::ostream& out, const Decomposition& d);

struct AdfResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t lags_used = 0;
    std::size_t nobs = 0;
    std::map<double, double> critical;  ///< level -> critical value at nobs
    std::map<double, bool> reject_at;   ///< level -> p_value < level
};

/// Schwert rule: floor(12 * (n / 100)^(1/4)).
std::size_t schwert_max_lag(std::size_t n);

/**
 * Augmented Dickey-Fuller test with a constant and no trend. The lag order is
 * the AIC minimiser over 0..max_lag on a common sample; the reported regression
 * is then refitted on every usable observation.
 */
AdfResult adf_test(std::span<const double> series, std::optional<std::size_t> max_lag = std::nullopt);

/// MacKinnon (1994) approximate p-value for the constant-only case.
double mackinnon_p_value(double statistic);

std::vector<double> smooth_ma(std::span<const double> series, std::ptrdiff_t window);

std::vector<double> smooth_ses(std::span<const double> series, double alpha);

struct DesResult {
    std::vector<double> level;
    std::vector<double> trend;

    double forecast(std::size_t h) const { return level.back() + static_cast<double>(h) * trend.back(); }
};

DesResult smooth_des(std::span<const double> series, double alpha, double beta);

/// Parameters for damped additive Holt-Winters. Validated on construction.
class SmoothingParams {
public:
    SmoothingParams(double alpha, double beta, double gamma, double phi, std::size_t season_length,
                    std::size_t horizon);

    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    double gamma() const noexcept { return gamma_; }
    double phi() const noexcept { return phi_; }
    std::size_t season_length() const noexcept { return season_length_; }
    std::size_t horizon() const noexcept { return horizon_; }

private:
    double alpha_, beta_, gamma_, phi_;
    std::size_t season_length_, horizon_;
};

enum class SeasonalMode {
    additive,
    none,  ///< seasonal channel held at zero; initialised like double smoothing
};

/// Holt-Winters state after the last observation.
struct HwState {
    double level = 0.0;
    double trend = 0.0;
    std::vector<double> season;  ///< indexed by phase t mod L
    std::size_t last_index = 0;

    double forecast(std::size_t m, double phi) const;
};

struct HwResult {
    std::vector<double> fitted;  ///< one-step-ahead values; fitted[0] = X_0
    std::vector<double> level;
    std::vector<double> trend;
    std::vector<double> forecast;  ///< horizon values after the last observation
    HwState state;
};

HwResult smooth_hw(std::span<const double> series, const SmoothingParams& params,
                   SeasonalMode mode = SeasonalMode::additive);

/// First difference, x[t] - x[t-1].
std::vector<double> difference(std::span<const double> series);

}  // namespace flowcast::analysis
