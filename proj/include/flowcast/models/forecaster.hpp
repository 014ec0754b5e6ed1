#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flowcast/analysis.hpp"
#include "flowcast/models/bdt.hpp"
#include "flowcast/models/rrp.hpp"
#include "flowcast/models/serialize.hpp"
#include "flowcast/models/var.hpp"

namespace flowcast::models {

/// Observations by row, channels by column (count, bytes for traffic series).
using SeriesMatrix = Eigen::MatrixXd;

/**
 * @brief Common contract for every forecaster.
 *
 * fit() consumes a training matrix; forecast() continues an arbitrary history
 * (which must have at least min_history() rows) for `steps` rows. Calling
 * forecast() or serialize() before fit() raises ErrorCode::unfitted.
 */
class Forecaster {
public:
    virtual ~Forecaster() = default;

    virtual ModelKind kind() const = 0;
    virtual void fit(const SeriesMatrix& train) = 0;
    virtual bool fitted() const = 0;
    virtual std::size_t min_history() const = 0;
    virtual SeriesMatrix forecast(const SeriesMatrix& history, std::size_t steps) const = 0;

    /// Canonical binary form; its length is the reported model size.
    virtual std::vector<std::uint8_t> serialize() const = 0;

    std::size_t size_bytes() const { return serialize().size(); }
};

using ParamMap = std::map<std::string, std::string>;

class VarForecaster final : public Forecaster {
public:
    struct Config {
        std::size_t maxlags = 7;
        InfoCriterion ic = InfoCriterion::hqic;
    };

    VarForecaster() : VarForecaster(Config{}) {}
    explicit VarForecaster(Config config) : config_(config) {}
    explicit VarForecaster(VarModel model);

    ModelKind kind() const override { return ModelKind::var; }
    void fit(const SeriesMatrix& train) override;
    bool fitted() const override { return model_.p > 0; }
    std::size_t min_history() const override { return fitted() ? model_.p : config_.maxlags; }
    SeriesMatrix forecast(const SeriesMatrix& history, std::size_t steps) const override;
    std::vector<std::uint8_t> serialize() const override;

    const VarModel& model() const { return model_; }

private:
    Config config_;
    VarModel model_;
};

class HoltWintersForecaster final : public Forecaster {
public:
    struct Config {
        double alpha = 0.3;
        double beta = 0.05;
        double gamma = 0.2;
        double phi = 0.98;
        std::size_t season_length = 24;
    };

    HoltWintersForecaster() : HoltWintersForecaster(Config{}) {}
    explicit HoltWintersForecaster(Config config);

    ModelKind kind() const override { return ModelKind::holt_winters; }
    void fit(const SeriesMatrix& train) override;
    bool fitted() const override { return !states_.empty(); }
    std::size_t min_history() const override { return 2 * config_.season_length; }
    SeriesMatrix forecast(const SeriesMatrix& history, std::size_t steps) const override;
    std::vector<std::uint8_t> serialize() const override;

    static HoltWintersForecaster deserialize(ByteReader& r);
    const Config& config() const { return config_; }

private:
    Config config_;
    std::vector<analysis::HwState> states_;  ///< per channel, end of training
};

/// Lagged feature rows: [ch0 lag1..lagL, ch1 lag1..lagL, ...] for rows t = lags..T-1.
Rows lag_features(const SeriesMatrix& series, std::size_t lags);

class RrpForecaster final : public Forecaster {
public:
    struct Config {
        std::size_t lags = 7;
        std::size_t stop_depth = 8;
        std::uint64_t seed = 0;
    };

    RrpForecaster() : RrpForecaster(Config{}) {}
    explicit RrpForecaster(Config config) : config_(config) {}

    ModelKind kind() const override { return ModelKind::rrp; }
    void fit(const SeriesMatrix& train) override;
    bool fitted() const override { return !trees_.empty(); }
    std::size_t min_history() const override { return config_.lags; }
    SeriesMatrix forecast(const SeriesMatrix& history, std::size_t steps) const override;
    std::vector<std::uint8_t> serialize() const override;

    static RrpForecaster deserialize(ByteReader& r);
    const std::vector<RrpTree>& trees() const { return trees_; }

private:
    Config config_;
    std::vector<RrpTree> trees_;  ///< one per channel; the target is the last column
};

class BdtForecaster final : public Forecaster {
public:
    struct Config {
        std::size_t lags = 3;
        unsigned bits_per_lag = 2;
        BdtParams tree{6, 2, 8};
    };

    BdtForecaster() : BdtForecaster(Config{}) {}
    explicit BdtForecaster(Config config);

    ModelKind kind() const override { return ModelKind::bdt; }
    void fit(const SeriesMatrix& train) override;
    bool fitted() const override { return !trees_.empty(); }
    std::size_t min_history() const override { return config_.lags; }
    SeriesMatrix forecast(const SeriesMatrix& history, std::size_t steps) const override;
    std::vector<std::uint8_t> serialize() const override;

    static BdtForecaster deserialize(ByteReader& r);

    unsigned key_width() const;
    /// Field names and widths of the packed key, most significant first.
    std::vector<std::pair<std::string, unsigned>> key_fields() const;
    /// Packs the most recent `lags` rows of `history` into a key.
    BitKey encode(const SeriesMatrix& history) const;
    const std::vector<BitDecisionTree>& trees() const { return trees_; }

private:
    std::uint64_t code(std::size_t channel, double value) const;

    Config config_;
    std::vector<std::vector<double>> edges_;  ///< per channel quantisation cut points
    std::vector<BitDecisionTree> trees_;      ///< one per channel
};

/// Builds a forecaster from `kind` (var, hw, rrp, bdt) and string parameters.
/// Unknown parameter names raise bad_parameter.
std::unique_ptr<Forecaster> make_forecaster(std::string_view kind, const ParamMap& params);

std::unique_ptr<Forecaster> deserialize_forecaster(std::span<const std::uint8_t> bytes);

}  // namespace flowcast::models
