#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flowcast/error.hpp"
#include "flowcast/models/forecaster.hpp"
#include "flowcast/runstore.hpp"
#include "flowcast/timeseries.hpp"
#include "flowcast/tuning.hpp"

namespace flowcast::experiment {

namespace fs = std::filesystem;

/// Flat `section.key -> value` view of a config file.
using FlatConfig = std::map<std::string, std::string>;

/**
 * Reads the TOML subset used by experiment files: `key = value` lines,
 * `[section]` and `[section.sub]` headers, `#` comments, quoted strings and
 * one-line arrays (joined with commas).
 */
FlatConfig parse_config_text(std::istream& in);

struct ExperimentConfig {
    fs::path dataset;                     ///< series CSV, or an access log to ingest
    std::optional<std::int64_t> interval;  ///< seconds; defaults to the CSV spacing or 3600
    std::optional<ts::StratumKind> stratum;
    std::uint64_t seed = 0;  ///< master seed
    std::string smoothing = "none";  ///< none, ma, ses, des
    std::ptrdiff_t smoothing_window = 3;
    double smoothing_alpha = 0.5;
    double smoothing_beta = 0.5;
    std::vector<std::string> models{"var", "hw", "rrp", "bdt"};
    std::map<std::string, models::ParamMap> model_params;
    std::string tune_strategy = "none";  ///< none, grid, random
    std::size_t tune_budget = 20;
    std::map<std::string, std::vector<tuning::Dimension>> tune_spaces;
    std::size_t repeats = 10;
    double train_fraction = 0.8;
    std::size_t capacity_bits = std::size_t{1} << 20;
    std::optional<unsigned> label_bits;  ///< defaults to ceil(log2(n_labels))
    std::size_t jobs = 1;
    fs::path runs_root = "runs";

    FlatConfig raw;  ///< every knob as read, recorded verbatim in the manifest

    /// Validates ranges and that the dataset exists. Unknown keys raise bad_parameter.
    static ExperimentConfig from_flat(const FlatConfig& flat);
};

/// Failure inside a named pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& inner) : Error(inner), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct ExperimentResult {
    std::string run_id;
    fs::path run_dir;
    runstore::RunManifest manifest;
};

/// Loads the configured dataset as a series.
ts::TimeSeries load_dataset(const ExperimentConfig& config);

/**
 * Runs every repeat (seeds derived from the master seed), fits and scores each
 * model with rolling one-step forecasts, ranks models per channel and writes
 * the report artifacts. On failure the manifest records the failing stage and
 * the StageError is rethrown.
 */
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Count and bytes columns of a series.
models::SeriesMatrix series_matrix(const ts::TimeSeries& series);

/// One-step forecasts for rows [from, to) of `data`, each made from all rows before it.
models::SeriesMatrix rolling_one_step(const models::Forecaster& model, const models::SeriesMatrix& data,
                                      std::size_t from, std::size_t to);

/**
 * Tuning objective: fits `kind` on the first `cut` rows and returns the mean
 * over channels of the rolling one-step MAE on the remaining rows, each scaled
 * by that channel's range over the fitting rows.
 */
double holdout_score(const std::string& kind, const models::ParamMap& params, const models::SeriesMatrix& data,
                     std::size_t cut);

/// Renders a model kind the way the report tables do (VAR, HW, RRP, BDT).
std::string display_name(const std::string& kind);

}  // namespace flowcast::experiment
