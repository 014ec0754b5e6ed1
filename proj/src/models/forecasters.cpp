#include "flowcast/models/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "flowcast/error.hpp"
#include "flowcast/random.hpp"

namespace flowcast::models {
namespace {

void require_fitted(const Forecaster& f) {
    if (!f.fitted()) throw Error(ErrorCode::unfitted, to_string(f.kind()) + " forecaster used before fit");
}

void require_history(const Forecaster& f, const SeriesMatrix& history, std::size_t channels) {
    if (channels != 0 && static_cast<std::size_t>(history.cols()) != channels) {
        throw Error(ErrorCode::bad_dimension, "history has " + std::to_string(history.cols()) + " channels, model has " +
                                                  std::to_string(channels));
    }
    if (static_cast<std::size_t>(history.rows()) < f.min_history()) {
        throw Error(ErrorCode::insufficient_history, "need " + std::to_string(f.min_history()) + " rows of history");
    }
}

std::vector<double> column(const SeriesMatrix& m, Eigen::Index c) {
    std::vector<double> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = m(r, c);
    return out;
}

// Feature row built from the last `lags` rows of `window`.
std::vector<double> latest_features(const SeriesMatrix& window, std::size_t lags) {
    std::vector<double> row;
    row.reserve(lags * static_cast<std::size_t>(window.cols()));
    const auto last = window.rows() - 1;
    for (Eigen::Index c = 0; c < window.cols(); ++c) {
        for (std::size_t j = 0; j < lags; ++j) row.push_back(window(last - static_cast<Eigen::Index>(j), c));
    }
    return row;
}

SeriesMatrix append_row(const SeriesMatrix& m, const Eigen::RowVectorXd& row) {
    SeriesMatrix out(m.rows() + 1, m.cols());
    out.topRows(m.rows()) = m;
    out.row(m.rows()) = row;
    return out;
}

class Params {
public:
    explicit Params(const ParamMap& params) : params_(params) {}

    template <typename T>
    T get(const std::string& name, T fallback) {
        seen_.insert(name);
        auto it = params_.find(name);
        if (it == params_.end()) return fallback;
        try {
            std::size_t used = 0;
            T value{};
            if constexpr (std::is_same_v<T, double>) {
                value = std::stod(it->second, &used);
            } else {
                if (!it->second.empty() && it->second.front() == '-') throw std::invalid_argument("negative");
                value = static_cast<T>(std::stoull(it->second, &used));
            }
            if (used != it->second.size()) throw std::invalid_argument("trailing");
            return value;
        } catch (const std::logic_error&) {
            throw Error(ErrorCode::bad_parameter, "parameter " + name + ": cannot parse '" + it->second + "'");
        }
    }

    std::string get(const std::string& name, const char* fallback) {
        seen_.insert(name);
        auto it = params_.find(name);
        return it == params_.end() ? fallback : it->second;
    }

    void finish(std::string_view kind) const {
        for (const auto& [name, value] : params_) {
            if (!seen_.count(name)) {
                throw Error(ErrorCode::bad_parameter, "unknown parameter '" + name + "' for " + std::string(kind));
            }
        }
    }

private:
    const ParamMap& params_;
    std::set<std::string> seen_;
};

}  // namespace

// --- VAR --------------------------------------------------------------------

VarForecaster::VarForecaster(VarModel model) : model_(std::move(model)) {}

void VarForecaster::fit(const SeriesMatrix& train) { model_ = var_fit(train, config_.maxlags, config_.ic); }

SeriesMatrix VarForecaster::forecast(const SeriesMatrix& history, std::size_t steps) const {
    require_fitted(*this);
    return var_forecast(model_, history, steps);
}

std::vector<std::uint8_t> VarForecaster::serialize() const {
    require_fitted(*this);
    ByteWriter w;
    write_header(w, kind());
    model_.write(w);
    return w.take();
}

// --- Holt-Winters -----------------------------------------------------------

HoltWintersForecaster::HoltWintersForecaster(Config config) : config_(config) {
    // Validates the ranges up front.
    analysis::SmoothingParams(config.alpha, config.beta, config.gamma, config.phi, config.season_length, 0);
}

void HoltWintersForecaster::fit(const SeriesMatrix& train) {
    const analysis::SmoothingParams params(config_.alpha, config_.beta, config_.gamma, config_.phi,
                                           config_.season_length, 0);
    std::vector<analysis::HwState> states;
    for (Eigen::Index c = 0; c < train.cols(); ++c) {
        states.push_back(analysis::smooth_hw(column(train, c), params).state);
    }
    states_ = std::move(states);
}

SeriesMatrix HoltWintersForecaster::forecast(const SeriesMatrix& history, std::size_t steps) const {
    require_fitted(*this);
    require_history(*this, history, states_.size());
    const analysis::SmoothingParams params(config_.alpha, config_.beta, config_.gamma, config_.phi,
                                           config_.season_length, steps);
    SeriesMatrix out(static_cast<Eigen::Index>(steps), history.cols());
    for (Eigen::Index c = 0; c < history.cols(); ++c) {
        const auto result = analysis::smooth_hw(column(history, c), params);
        for (std::size_t s = 0; s < steps; ++s) out(static_cast<Eigen::Index>(s), c) = result.forecast[s];
    }
    return out;
}

std::vector<std::uint8_t> HoltWintersForecaster::serialize() const {
    require_fitted(*this);
    ByteWriter w;
    write_header(w, kind());
    w.begin_section(tag("HWCF"));
    w.f64(config_.alpha);
    w.f64(config_.beta);
    w.f64(config_.gamma);
    w.f64(config_.phi);
    w.u64(config_.season_length);
    w.end_section();
    w.begin_section(tag("HWST"));
    w.u64(states_.size());
    for (const auto& s : states_) {
        w.f64(s.level);
        w.f64(s.trend);
        w.f64s(s.season);
        w.u64(s.last_index);
    }
    w.end_section();
    return w.take();
}

HoltWintersForecaster HoltWintersForecaster::deserialize(ByteReader& r) {
    auto cf = r.section(tag("HWCF"));
    Config config;
    config.alpha = cf.f64();
    config.beta = cf.f64();
    config.gamma = cf.f64();
    config.phi = cf.f64();
    config.season_length = cf.u64();
    HoltWintersForecaster f(config);
    auto st = r.section(tag("HWST"));
    const auto n = st.u64();
    for (std::uint64_t i = 0; i < n; ++i) {
        analysis::HwState s;
        s.level = st.f64();
        s.trend = st.f64();
        s.season = st.f64s();
        s.last_index = st.u64();
        f.states_.push_back(std::move(s));
    }
    return f;
}

// --- RRP --------------------------------------------------------------------

Rows lag_features(const SeriesMatrix& series, std::size_t lags) {
    Rows rows;
    const auto t_total = static_cast<std::size_t>(series.rows());
    for (std::size_t t = lags; t < t_total; ++t) {
        rows.push_back(latest_features(series.topRows(static_cast<Eigen::Index>(t)), lags));
    }
    return rows;
}

void RrpForecaster::fit(const SeriesMatrix& train) {
    if (config_.lags < 1) throw Error(ErrorCode::bad_parameter, "lags must be at least 1");
    if (static_cast<std::size_t>(train.rows()) <= config_.lags) {
        throw Error(ErrorCode::insufficient_data, "rrp needs more rows than lags");
    }
    const auto features = lag_features(train, config_.lags);
    std::vector<RrpTree> trees;
    for (Eigen::Index c = 0; c < train.cols(); ++c) {
        Rows rows = features;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            rows[i].push_back(train(static_cast<Eigen::Index>(config_.lags + i), c));
        }
        const auto target = rows.front().size() - 1;
        trees.push_back(rrp_fit(rows, config_.stop_depth, target, derive_seed(config_.seed, static_cast<std::uint64_t>(c))));
    }
    trees_ = std::move(trees);
}

SeriesMatrix RrpForecaster::forecast(const SeriesMatrix& history, std::size_t steps) const {
    require_fitted(*this);
    require_history(*this, history, trees_.size());
    SeriesMatrix window = history.bottomRows(static_cast<Eigen::Index>(config_.lags));
    SeriesMatrix out(static_cast<Eigen::Index>(steps), history.cols());
    for (std::size_t s = 0; s < steps; ++s) {
        const auto features = latest_features(window, config_.lags);
        Eigen::RowVectorXd next(history.cols());
        for (Eigen::Index c = 0; c < history.cols(); ++c) {
            auto row = features;
            // The target column is unknown at query time; the latest value stands in.
            row.push_back(window(window.rows() - 1, c));
            next(c) = rrp_predict(trees_[static_cast<std::size_t>(c)], row);
        }
        out.row(static_cast<Eigen::Index>(s)) = next;
        window = append_row(window, next).bottomRows(static_cast<Eigen::Index>(config_.lags));
    }
    return out;
}

std::vector<std::uint8_t> RrpForecaster::serialize() const {
    require_fitted(*this);
    ByteWriter w;
    write_header(w, kind());
    w.begin_section(tag("RRPC"));
    w.u64(config_.lags);
    w.u64(config_.stop_depth);
    w.u64(config_.seed);
    w.u64(trees_.size());
    w.end_section();
    for (const auto& t : trees_) t.write(w);
    return w.take();
}

RrpForecaster RrpForecaster::deserialize(ByteReader& r) {
    auto cf = r.section(tag("RRPC"));
    Config config;
    config.lags = cf.u64();
    config.stop_depth = cf.u64();
    config.seed = cf.u64();
    const auto n = cf.u64();
    RrpForecaster f(config);
    for (std::uint64_t i = 0; i < n; ++i) f.trees_.push_back(RrpTree::read(r));
    return f;
}

// --- BDT --------------------------------------------------------------------

BdtForecaster::BdtForecaster(Config config) : config_(config) {
    if (config.lags < 1 || config.bits_per_lag < 1) {
        throw Error(ErrorCode::bad_parameter, "lags and bits_per_lag must be positive");
    }
}

unsigned BdtForecaster::key_width() const {
    const auto channels = edges_.empty() ? 2 : edges_.size();
    return static_cast<unsigned>(channels * config_.lags * config_.bits_per_lag);
}

std::vector<std::pair<std::string, unsigned>> BdtForecaster::key_fields() const {
    static const char* names[] = {"count", "bytes"};
    std::vector<std::pair<std::string, unsigned>> fields;
    const auto channels = edges_.empty() ? 2 : edges_.size();
    for (std::size_t c = 0; c < channels; ++c) {
        const std::string base = c < 2 ? names[c] : "ch" + std::to_string(c);
        for (std::size_t j = 1; j <= config_.lags; ++j) {
            fields.emplace_back(base + "_lag" + std::to_string(j), config_.bits_per_lag);
        }
    }
    return fields;
}

std::uint64_t BdtForecaster::code(std::size_t channel, double value) const {
    const auto& e = edges_[channel];
    return static_cast<std::uint64_t>(std::upper_bound(e.begin(), e.end(), value) - e.begin());
}

BitKey BdtForecaster::encode(const SeriesMatrix& history) const {
    const auto features = latest_features(history, config_.lags);
    BitKey key{0, key_width()};
    for (std::size_t i = 0; i < features.size(); ++i) {
        key.bits = (key.bits << config_.bits_per_lag) | code(i / config_.lags, features[i]);
    }
    return key;
}

void BdtForecaster::fit(const SeriesMatrix& train) {
    const auto width = static_cast<std::size_t>(train.cols()) * config_.lags * config_.bits_per_lag;
    if (width > 64) throw Error(ErrorCode::bad_parameter, "key wider than 64 bits");
    if (static_cast<std::size_t>(train.rows()) <= config_.lags) {
        throw Error(ErrorCode::insufficient_data, "bdt needs more rows than lags");
    }
    const std::size_t levels = std::size_t{1} << config_.bits_per_lag;
    edges_.clear();
    for (Eigen::Index c = 0; c < train.cols(); ++c) {
        auto values = column(train, c);
        std::sort(values.begin(), values.end());
        std::vector<double> e;
        for (std::size_t j = 1; j < levels; ++j) {
            const double pos = static_cast<double>(j) / static_cast<double>(levels) * static_cast<double>(values.size() - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const auto hi = std::min(lo + 1, values.size() - 1);
            e.push_back(values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]));
        }
        edges_.push_back(std::move(e));
    }

    std::vector<std::uint64_t> keys;
    for (auto t = static_cast<Eigen::Index>(config_.lags); t < train.rows(); ++t) {
        keys.push_back(encode(train.topRows(t)).bits);
    }
    std::vector<BitDecisionTree> trees;
    for (Eigen::Index c = 0; c < train.cols(); ++c) {
        std::vector<double> targets;
        for (auto t = static_cast<Eigen::Index>(config_.lags); t < train.rows(); ++t) targets.push_back(train(t, c));
        trees.push_back(bdt_fit(keys, targets, key_width(), config_.tree));
    }
    trees_ = std::move(trees);
}

SeriesMatrix BdtForecaster::forecast(const SeriesMatrix& history, std::size_t steps) const {
    require_fitted(*this);
    require_history(*this, history, trees_.size());
    SeriesMatrix window = history.bottomRows(static_cast<Eigen::Index>(config_.lags));
    SeriesMatrix out(static_cast<Eigen::Index>(steps), history.cols());
    for (std::size_t s = 0; s < steps; ++s) {
        const auto key = encode(window);
        Eigen::RowVectorXd next(history.cols());
        for (Eigen::Index c = 0; c < history.cols(); ++c) {
            const auto& tree = trees_[static_cast<std::size_t>(c)];
            next(c) = tree.label_values[bdt_predict(tree, key)];
        }
        out.row(static_cast<Eigen::Index>(s)) = next;
        window = append_row(window, next).bottomRows(static_cast<Eigen::Index>(config_.lags));
    }
    return out;
}

std::vector<std::uint8_t> BdtForecaster::serialize() const {
    require_fitted(*this);
    ByteWriter w;
    write_header(w, kind());
    w.begin_section(tag("BDTC"));
    w.u64(config_.lags);
    w.u32(config_.bits_per_lag);
    w.u64(config_.tree.max_depth);
    w.u64(config_.tree.min_leaf);
    w.u64(config_.tree.n_labels);
    w.u64(edges_.size());
    for (const auto& e : edges_) w.f64s(e);
    w.end_section();
    for (const auto& t : trees_) t.write(w);
    return w.take();
}

BdtForecaster BdtForecaster::deserialize(ByteReader& r) {
    auto cf = r.section(tag("BDTC"));
    Config config;
    config.lags = cf.u64();
    config.bits_per_lag = cf.u32();
    config.tree.max_depth = cf.u64();
    config.tree.min_leaf = cf.u64();
    config.tree.n_labels = cf.u64();
    BdtForecaster f(config);
    const auto channels = cf.u64();
    for (std::uint64_t c = 0; c < channels; ++c) f.edges_.push_back(cf.f64s());
    for (std::uint64_t c = 0; c < channels; ++c) f.trees_.push_back(BitDecisionTree::read(r));
    return f;
}

// --- factory ----------------------------------------------------------------

std::unique_ptr<Forecaster> make_forecaster(std::string_view kind, const ParamMap& params) {
    Params p(params);
    std::unique_ptr<Forecaster> out;
    if (kind == "var") {
        VarForecaster::Config c;
        c.maxlags = p.get<std::size_t>("maxlags", c.maxlags);
        c.ic = parse_criterion(p.get("ic", "hqic"));
        out = std::make_unique<VarForecaster>(c);
    } else if (kind == "hw") {
        HoltWintersForecaster::Config c;
        c.alpha = p.get<double>("alpha", c.alpha);
        c.beta = p.get<double>("beta", c.beta);
        c.gamma = p.get<double>("gamma", c.gamma);
        c.phi = p.get<double>("phi", c.phi);
        c.season_length = p.get<std::size_t>("season_length", c.season_length);
        out = std::make_unique<HoltWintersForecaster>(c);
    } else if (kind == "rrp") {
        RrpForecaster::Config c;
        c.lags = p.get<std::size_t>("lags", c.lags);
        c.stop_depth = p.get<std::size_t>("stop_depth", c.stop_depth);
        c.seed = p.get<std::uint64_t>("seed", c.seed);
        out = std::make_unique<RrpForecaster>(c);
    } else if (kind == "bdt") {
        BdtForecaster::Config c;
        c.lags = p.get<std::size_t>("lags", c.lags);
        c.bits_per_lag = static_cast<unsigned>(p.get<std::size_t>("bits_per_lag", c.bits_per_lag));
        c.tree.max_depth = p.get<std::size_t>("max_depth", c.tree.max_depth);
        c.tree.min_leaf = p.get<std::size_t>("min_leaf", c.tree.min_leaf);
        c.tree.n_labels = p.get<std::size_t>("n_labels", c.tree.n_labels);
        out = std::make_unique<BdtForecaster>(c);
    } else {
        throw Error(ErrorCode::bad_parameter, "unknown model kind '" + std::string(kind) + "'");
    }
    p.finish(kind);
    return out;
}

std::unique_ptr<Forecaster> deserialize_forecaster(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const auto kind = read_header(r);
    std::unique_ptr<Forecaster> out;
    switch (kind) {
        case ModelKind::var: out = std::make_unique<VarForecaster>(VarModel::read(r)); break;
        case ModelKind::holt_winters:
            out = std::make_unique<HoltWintersForecaster>(HoltWintersForecaster::deserialize(r));
            break;
        case ModelKind::rrp: out = std::make_unique<RrpForecaster>(RrpForecaster::deserialize(r)); break;
        case ModelKind::bdt: out = std::make_unique<BdtForecaster>(BdtForecaster::deserialize(r)); break;
    }
    if (!r.done()) throw Error(ErrorCode::bad_format, "trailing bytes after model");
    return out;
}

}  // namespace flowcast::models
