#include "flowcast/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "flowcast/analysis.hpp"
#include "flowcast/evaluation.hpp"
#include "flowcast/ingest.hpp"
#include "flowcast/p4c.hpp"
#include "flowcast/random.hpp"

namespace flowcast::experiment {
namespace {

using models::Forecaster;
using models::ParamMap;
using models::SeriesMatrix;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const char* const kChannels[] = {"count", "bytes"};
const std::set<std::string> kKinds{"var", "hw", "rrp", "bdt"};

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

Error config_error(const std::string& what) { return Error(ErrorCode::bad_parameter, "config: " + what); }

// Removes a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& raw, std::size_t line_no) {
    const auto v = trim(raw);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] == '\\' && i + 2 < v.size()) ++i;
            out += v[i];
        }
        return out;
    }
    if (!v.empty() && (v.front() == '"' || v.back() == '"')) {
        throw Error(ErrorCode::bad_format, "config line " + std::to_string(line_no) + ": unbalanced quote");
    }
    return v;
}

std::string parse_value(const std::string& raw, std::size_t line_no) {
    const auto v = trim(raw);
    if (v.empty()) throw Error(ErrorCode::bad_format, "config line " + std::to_string(line_no) + ": missing value");
    if (v.front() != '[') return unquote(v, line_no);
    if (v.back() != ']') throw Error(ErrorCode::bad_format, "config line " + std::to_string(line_no) + ": unterminated array");
    std::string out;
    std::stringstream items(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(items, item, ',')) {
        if (trim(item).empty()) continue;
        if (!out.empty()) out += ',';
        out += unquote(item, line_no);
    }
    return out;
}

template <typename T>
T number(const FlatConfig& flat, const std::string& key, T fallback) {
    auto it = flat.find(key);
    if (it == flat.end()) return fallback;
    try {
        std::size_t used = 0;
        T v{};
        if constexpr (std::is_floating_point_v<T>) {
            v = static_cast<T>(std::stod(it->second, &used));
        } else if constexpr (std::is_signed_v<T>) {
            v = static_cast<T>(std::stoll(it->second, &used));
        } else {
            if (!it->second.empty() && it->second.front() == '-') throw std::invalid_argument("negative");
            v = static_cast<T>(std::stoull(it->second, &used));
        }
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::logic_error&) {
        throw config_error(key + ": cannot parse '" + it->second + "'");
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    std::size_t n = 0;
    for (double x : v) {
        if (std::isnan(x)) continue;
        s += x;
        ++n;
    }
    return n == 0 ? kNaN : s / static_cast<double>(n);
}

template <typename F>
auto in_stage(const std::string& name, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    }
}

SeriesMatrix to_matrix(const std::vector<double>& counts, const std::vector<double>& bytes) {
    SeriesMatrix m(static_cast<Eigen::Index>(counts.size()), 2);
    for (std::size_t i = 0; i < counts.size(); ++i) {
        m(static_cast<Eigen::Index>(i), 0) = counts[i];
        m(static_cast<Eigen::Index>(i), 1) = bytes[i];
    }
    return m;
}

std::vector<double> smooth(const ExperimentConfig& c, const std::vector<double>& x) {
    if (c.smoothing == "ma") return analysis::smooth_ma(x, c.smoothing_window);
    if (c.smoothing == "ses") return analysis::smooth_ses(x, c.smoothing_alpha);
    if (c.smoothing == "des") return analysis::smooth_des(x, c.smoothing_alpha, c.smoothing_beta).level;
    return x;
}

std::vector<double> col(const SeriesMatrix& m, Eigen::Index c, std::size_t from = 0) {
    std::vector<double> v;
    for (auto r = static_cast<Eigen::Index>(from); r < m.rows(); ++r) v.push_back(m(r, c));
    return v;
}

double channel_range(const SeriesMatrix& m, Eigen::Index c, std::size_t rows) {
    const auto block = m.col(c).head(static_cast<Eigen::Index>(rows));
    return block.maxCoeff() - block.minCoeff();
}

struct Row {
    std::size_t repeat = 0;
    std::string model;
    std::string channel;
    evaluation::MetricReport report;
    double nmae = kNaN;
    double train_mae = kNaN;
    std::size_t size_bytes = 0;
};

struct AdfRow {
    std::size_t repeat = 0;
    std::string channel;
    std::string status;
    analysis::AdfResult result;
};

struct BdtReport {
    std::string layout;
    std::vector<std::string> tree_text, table_text;
    std::string verify, capacity;
    std::vector<std::size_t> rules;
    std::vector<bool> equivalent;
    std::vector<bool> fits;
};

struct RepeatOutput {
    std::vector<Row> rows;
    std::vector<AdfRow> adf;
    std::map<std::string, std::string> tune_csv;  ///< model -> trial log
    std::map<std::string, ParamMap> chosen;       ///< model -> tuned params
    std::optional<BdtReport> bdt;
};

std::uint64_t repeat_seed(const ExperimentConfig& c, std::size_t r) { return derive_seed(c.seed, r); }
std::uint64_t rrp_seed(std::uint64_t repeat) { return derive_seed(repeat, 1); }
std::uint64_t tune_seed(std::uint64_t repeat) { return derive_seed(repeat, 2); }

ParamMap params_for(const ExperimentConfig& c, const std::string& kind, std::uint64_t seed_r) {
    ParamMap p;
    if (auto it = c.model_params.find(kind); it != c.model_params.end()) p = it->second;
    if (kind == "rrp" && !p.count("seed")) p["seed"] = std::to_string(rrp_seed(seed_r));
    return p;
}

ParamMap tune(const ExperimentConfig& c, const std::string& kind, ParamMap base, const SeriesMatrix& train,
              std::uint64_t seed_r, std::string& log) {
    const auto it = c.tune_spaces.find(kind);
    if (c.tune_strategy == "none" || it == c.tune_spaces.end()) return base;
    tuning::ParamSpace space;
    for (const auto& d : it->second) space.add(d.name, d.domain);
    const auto cut = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(train.rows())));

    auto objective = [&](const tuning::Assignment& a) {
        ParamMap p = base;
        for (const auto& [k, v] : a) p[k] = v;
        return holdout_score(kind, p, train, cut);
    };
    const auto result = c.tune_strategy == "grid" ? tuning::grid_search(space, objective)
                                                  : tuning::random_search(space, c.tune_budget, tune_seed(seed_r), objective);
    std::ostringstream out;
    tuning::write_trials_csv(out, space, result.trials);
    log = out.str();
    if (result.best.failed) throw Error(ErrorCode::insufficient_data, "every tuning trial for " + kind + " failed");
    for (const auto& [k, v] : result.best.params) base[k] = v;
    return base;
}

BdtReport bdt_report(const ExperimentConfig& c, const models::BdtForecaster& bdt, std::uint64_t seed_r) {
    BdtReport rep;
    std::ostringstream layout;
    layout << "field,width\n";
    for (const auto& [name, width] : bdt.key_fields()) layout << name << ',' << width << '\n';
    rep.layout = layout.str();
    std::ostringstream verify, capacity;
    capacity << "channel,entries,entry_bits,total_bits,capacity_bits,fits\n";
    verify << "channel,mode,keys_checked,mismatches,equivalent\n";
    for (std::size_t ch = 0; ch < bdt.trees().size(); ++ch) {
        const auto& tree = bdt.trees()[ch];
        const auto table = p4c::compile(tree);
        std::ostringstream tree_text, table_text;
        models::write_tree_text(tree_text, tree);
        p4c::write_table(table_text, table);
        rep.tree_text.push_back(tree_text.str());
        rep.table_text.push_back(table_text.str());

        const bool exhaustive = tree.key_width <= p4c::kMaxExhaustiveWidth;
        const auto mode = exhaustive ? p4c::VerifyMode::all_keys() : p4c::VerifyMode::sampled(derive_seed(seed_r, 3), 100000);
        const auto v = p4c::verify_equivalence(tree, table, mode);
        verify << kChannels[ch] << ',' << (exhaustive ? "exhaustive" : "sampled") << ',' << v.keys_checked << ','
               << v.mismatches << ',' << (v.equivalent ? "true" : "false") << '\n';

        unsigned bits = c.label_bits.value_or(0);
        if (!c.label_bits) {
            while ((std::size_t{1} << bits) < std::max<std::size_t>(tree.n_labels, 2)) ++bits;
        }
        const auto cap = p4c::check_constraints(table, c.capacity_bits, bits);
        capacity << kChannels[ch] << ',' << cap.entries << ',' << cap.entry_bits << ',' << cap.total_bits << ','
                 << cap.capacity_bits << ',' << (cap.fits ? "true" : "false") << '\n';
        rep.rules.push_back(table.rules().size());
        rep.equivalent.push_back(v.equivalent);
        rep.fits.push_back(cap.fits);
    }
    rep.verify = verify.str();
    rep.capacity = capacity.str();
    return rep;
}

RepeatOutput run_repeat(const ExperimentConfig& c, const ts::TimeSeries& series, std::size_t r) {
    RepeatOutput out;
    const auto seed_r = repeat_seed(c, r);

    const auto sample = in_stage("sample", [&] {
        return c.stratum ? ts::stratified_sample(series, ts::Stratum{*c.stratum, seed_r}) : series;
    });
    const auto data = in_stage("smooth", [&] {
        return to_matrix(smooth(c, sample.count_values()), smooth(c, sample.byte_values()));
    });
    const auto n = static_cast<std::size_t>(data.rows());
    const auto split = in_stage("split", [&] {
        const auto parts = ts::train_test_split(sample, c.train_fraction);
        return parts.first.size();
    });
    const SeriesMatrix train = data.topRows(static_cast<Eigen::Index>(split));

    // The unit-root verdict is informational; a series the test cannot handle is recorded, not fatal.
    for (Eigen::Index ch = 0; ch < 2; ++ch) {
        AdfRow row{r, kChannels[ch], "ok", {}};
        try {
            row.result = analysis::adf_test(col(train, ch));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::degenerate_series && e.code() != ErrorCode::insufficient_data) {
                throw StageError("adf", e);
            }
            row.status = std::string(to_string(e.code()));
        }
        out.adf.push_back(row);
    }

    for (const auto& kind : c.models) {
        auto params = in_stage("tune:" + kind, [&] {
            std::string log;
            auto p = tune(c, kind, params_for(c, kind, seed_r), train, seed_r, log);
            if (!log.empty()) out.tune_csv[kind] = log;
            return p;
        });
        out.chosen[kind] = params;
        auto model = in_stage("fit:" + kind, [&] {
            auto f = models::make_forecaster(kind, params);
            f->fit(train);
            return f;
        });
        in_stage("evaluate:" + kind, [&] {
            const auto pred = rolling_one_step(*model, data, split, n);
            const auto test_len = n - split;
            const auto train_from = std::max(model->min_history(), split > test_len ? split - test_len : 0);
            std::optional<SeriesMatrix> train_pred;
            if (train_from < split) train_pred = rolling_one_step(*model, data, train_from, split);
            const auto size = evaluation::model_size(*model);
            for (Eigen::Index ch = 0; ch < 2; ++ch) {
                Row row;
                row.repeat = r;
                row.model = kind;
                row.channel = kChannels[ch];
                evaluation::MetricOptions opts;
                opts.previous_actual = data(static_cast<Eigen::Index>(split) - 1, ch);
                row.report = evaluation::point_metrics(col(data, ch, split), col(pred, ch), opts);
                const double range = channel_range(data, ch, split);
                row.nmae = range > 0 ? row.report.mae / range : kNaN;
                if (train_pred) {
                    const auto actual = col(data.topRows(static_cast<Eigen::Index>(split)), ch, train_from);
                    row.train_mae = evaluation::point_metrics(actual, col(*train_pred, ch)).mae;
                }
                row.size_bytes = size;
                out.rows.push_back(row);
            }
            return 0;
        });
        if (kind == "bdt" && r == 0) {
            out.bdt = in_stage("compile:bdt", [&] {
                return bdt_report(c, dynamic_cast<const models::BdtForecaster&>(*model), seed_r);
            });
        }
    }
    return out;
}

std::string metrics_csv(const std::vector<RepeatOutput>& outs) {
    std::ostringstream o;
    o << "repeat,model,channel,n,mae,rmse,mape,smape,mdape,gmrae,mape_skipped,gmrae_skipped,nmae,train_mae,size_bytes\n";
    for (const auto& out : outs) {
        for (const auto& row : out.rows) {
            const auto& m = row.report;
            o << row.repeat << ',' << row.model << ',' << row.channel << ',' << m.n << ',' << tuning::format_real(m.mae)
              << ',' << tuning::format_real(m.rmse) << ',' << (std::isnan(m.mape) ? "" : tuning::format_real(m.mape))
              << ',' << tuning::format_real(m.smape) << ',' << (std::isnan(m.mdape) ? "" : tuning::format_real(m.mdape))
              << ',' << (std::isnan(m.gmrae) ? "" : tuning::format_real(m.gmrae)) << ',' << m.mape_skipped << ','
              << m.gmrae_skipped << ',' << (std::isnan(row.nmae) ? "" : tuning::format_real(row.nmae)) << ','
              << (std::isnan(row.train_mae) ? "" : tuning::format_real(row.train_mae)) << ',' << row.size_bytes
              << '\n';
        }
    }
    return o.str();
}

std::string adf_csv(const std::vector<RepeatOutput>& outs) {
    std::ostringstream o;
    o << "repeat,channel,status,statistic,p_value,lags_used,reject_5pct\n";
    for (const auto& out : outs) {
        for (const auto& a : out.adf) {
            o << a.repeat << ',' << a.channel << ',' << a.status << ',';
            if (a.status == "ok") {
                o << tuning::format_real(a.result.statistic) << ',' << tuning::format_real(a.result.p_value) << ','
                  << a.result.lags_used << ',' << (a.result.reject_at.at(0.05) ? "true" : "false");
            } else {
                o << ",,,";
            }
            o << '\n';
        }
    }
    return o.str();
}

std::string params_csv(const std::vector<RepeatOutput>& outs) {
    std::ostringstream o;
    o << "repeat,model,param,value\n";
    for (std::size_t r = 0; r < outs.size(); ++r) {
        for (const auto& [kind, params] : outs[r].chosen) {
            for (const auto& [k, v] : params) o << r << ',' << kind << ',' << k << ',' << v << '\n';
        }
    }
    return o.str();
}

}  // namespace

SeriesMatrix series_matrix(const ts::TimeSeries& series) { return to_matrix(series.count_values(), series.byte_values()); }

SeriesMatrix rolling_one_step(const Forecaster& f, const SeriesMatrix& data, std::size_t from, std::size_t to) {
    SeriesMatrix out(static_cast<Eigen::Index>(to - from), data.cols());
    for (std::size_t i = from; i < to; ++i) {
        out.row(static_cast<Eigen::Index>(i - from)) = f.forecast(data.topRows(static_cast<Eigen::Index>(i)), 1).row(0);
    }
    return out;
}

double holdout_score(const std::string& kind, const ParamMap& params, const SeriesMatrix& data, std::size_t cut) {
    const auto rows = static_cast<std::size_t>(data.rows());
    auto f = models::make_forecaster(kind, params);
    f->fit(data.topRows(static_cast<Eigen::Index>(cut)));
    const auto from = std::max(cut, f->min_history());
    if (from >= rows) throw Error(ErrorCode::insufficient_data, "no validation rows");
    const auto pred = rolling_one_step(*f, data, from, rows);
    double score = 0;
    for (Eigen::Index ch = 0; ch < data.cols(); ++ch) {
        const auto r = evaluation::point_metrics(col(data, ch, from), col(pred, ch));
        const double range = channel_range(data, ch, cut);
        score += range > 0 ? r.mae / range : r.mae;
    }
    return score / static_cast<double>(data.cols());
}

std::string display_name(const std::string& kind) {
    if (kind == "hw") return "HW";
    std::string s = kind;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    return s;
}

FlatConfig parse_config_text(std::istream& in) {
    FlatConfig flat;
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw Error(ErrorCode::bad_format, "config line " + std::to_string(line_no) + ": bad section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::bad_format, "config line " + std::to_string(line_no) + ": expected key = value");
        }
        auto key = trim(line.substr(0, eq));
        if (key.empty()) throw Error(ErrorCode::bad_format, "config line " + std::to_string(line_no) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        if (!flat.emplace(key, parse_value(line.substr(eq + 1), line_no)).second) {
            throw Error(ErrorCode::bad_format, "config line " + std::to_string(line_no) + ": duplicate key " + key);
        }
    }
    return flat;
}

ExperimentConfig ExperimentConfig::from_flat(const FlatConfig& flat) {
    ExperimentConfig c;
    c.raw = flat;
    static const std::set<std::string> top{"dataset",  "interval",       "stratum",       "seed",       "smoothing",
                                           "models",   "repeats",        "train_fraction", "capacity_bits",
                                           "label_bits", "jobs",         "runs_root",     "smoothing.window",
                                           "smoothing.alpha", "smoothing.beta", "tune.strategy", "tune.budget"};
    for (const auto& [key, value] : flat) {
        if (top.count(key)) continue;
        const auto dot = key.find('.');
        const auto head = key.substr(0, dot);
        if (dot != std::string::npos && kKinds.count(head)) {
            c.model_params[head][key.substr(dot + 1)] = value;
            continue;
        }
        if (head == "tune" && dot != std::string::npos) {
            const auto rest = key.substr(dot + 1);
            const auto dot2 = rest.find('.');
            if (dot2 != std::string::npos && kKinds.count(rest.substr(0, dot2))) {
                c.tune_spaces[rest.substr(0, dot2)].push_back(tuning::parse_dimension(rest.substr(dot2 + 1) + "=" + value));
                continue;
            }
        }
        throw config_error("unknown key '" + key + "'");
    }

    auto get = [&](const std::string& k) -> std::optional<std::string> {
        auto it = flat.find(k);
        return it == flat.end() ? std::nullopt : std::optional(it->second);
    };
    if (auto v = get("dataset")) c.dataset = *v;
    if (c.dataset.empty()) throw config_error("dataset is required");
    std::error_code ec;
    if (!fs::is_regular_file(c.dataset, ec)) {
        throw Error(ErrorCode::io, "config: dataset " + c.dataset.string() + " does not exist");
    }
    if (get("interval")) {
        c.interval = number<std::int64_t>(flat, "interval", 0);
        if (*c.interval <= 0) throw config_error("interval must be positive");
    }
    if (auto v = get("stratum"); v && *v != "none") {
        try {
            c.stratum = ts::parse_stratum(*v);
        } catch (const Error&) {
            throw config_error("stratum must be none, day, week or month");
        }
    }
    c.seed = number<std::uint64_t>(flat, "seed", c.seed);
    if (auto v = get("smoothing")) c.smoothing = *v;
    if (c.smoothing != "none" && c.smoothing != "ma" && c.smoothing != "ses" && c.smoothing != "des") {
        throw config_error("smoothing must be none, ma, ses or des");
    }
    c.smoothing_window = number<std::ptrdiff_t>(flat, "smoothing.window", c.smoothing_window);
    c.smoothing_alpha = number<double>(flat, "smoothing.alpha", c.smoothing_alpha);
    c.smoothing_beta = number<double>(flat, "smoothing.beta", c.smoothing_beta);
    if (c.smoothing == "ma" && c.smoothing_window < 1) throw config_error("smoothing.window must be at least 1");
    if ((c.smoothing == "ses" || c.smoothing == "des") && !(c.smoothing_alpha > 0 && c.smoothing_alpha < 1)) {
        throw config_error("smoothing.alpha must lie in (0, 1)");
    }
    if (c.smoothing == "des" && !(c.smoothing_beta > 0 && c.smoothing_beta < 1)) {
        throw config_error("smoothing.beta must lie in (0, 1)");
    }
    if (auto v = get("models")) {
        c.models = split_list(*v);
        if (c.models.empty()) throw config_error("models is empty");
        std::set<std::string> seen;
        for (const auto& m : c.models) {
            if (!kKinds.count(m)) throw config_error("unknown model '" + m + "'");
            if (!seen.insert(m).second) throw config_error("model '" + m + "' listed twice");
        }
    }
    c.repeats = number<std::size_t>(flat, "repeats", c.repeats);
    if (c.repeats < 1) throw config_error("repeats must be at least 1");
    c.train_fraction = number<double>(flat, "train_fraction", c.train_fraction);
    if (!(c.train_fraction > 0 && c.train_fraction < 1)) throw config_error("train_fraction must lie in (0, 1)");
    c.capacity_bits = number<std::size_t>(flat, "capacity_bits", c.capacity_bits);
    if (c.capacity_bits == 0) throw config_error("capacity_bits must be positive");
    if (get("label_bits")) c.label_bits = number<unsigned>(flat, "label_bits", 0);
    c.jobs = number<std::size_t>(flat, "jobs", c.jobs);
    if (c.jobs < 1) throw config_error("jobs must be at least 1");
    if (auto v = get("runs_root")) c.runs_root = *v;
    if (auto v = get("tune.strategy")) c.tune_strategy = *v;
    if (c.tune_strategy != "none" && c.tune_strategy != "grid" && c.tune_strategy != "random") {
        throw config_error("tune.strategy must be none, grid or random");
    }
    c.tune_budget = number<std::size_t>(flat, "tune.budget", c.tune_budget);
    if (c.tune_budget < 1) throw config_error("tune.budget must be at least 1");

    // Building each model once checks parameter names and ranges up front.
    for (const auto& [kind, params] : c.model_params) {
        if (std::find(c.models.begin(), c.models.end(), kind) == c.models.end()) continue;
        models::make_forecaster(kind, params);
    }
    return c;
}

ts::TimeSeries load_dataset(const ExperimentConfig& config) {
    std::ifstream in(config.dataset, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + config.dataset.string());
    if (config.dataset.extension() == ".csv") {
        auto series = ts::read_csv(in, config.interval.value_or(3600));
        if (config.interval && *config.interval != series.interval) {
            throw Error(ErrorCode::bad_parameter, "dataset spacing is " + std::to_string(series.interval) +
                                                      " s but interval is " + std::to_string(*config.interval));
        }
        return series;
    }
    ts::SeriesBuilder builder(config.interval.value_or(3600));
    ingest::ingest_file(in, [&](const ingest::TraceRecord& rec) { builder.add(rec); });
    return builder.build();
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    std::map<std::string, std::string> params(config.raw.begin(), config.raw.end());
    params["seed"] = std::to_string(config.seed);
    for (std::size_t r = 0; r < config.repeats; ++r) {
        const auto seed_r = repeat_seed(config, r);
        const auto prefix = "repeat." + std::to_string(r) + ".";
        params[prefix + "seed"] = std::to_string(seed_r);
        if (std::find(config.models.begin(), config.models.end(), "rrp") != config.models.end()) {
            const auto& rrp = config.model_params.count("rrp") ? config.model_params.at("rrp") : ParamMap{};
            params[prefix + "rrp_seed"] = rrp.count("seed") ? rrp.at("seed") : std::to_string(rrp_seed(seed_r));
        }
        if (config.tune_strategy == "random") params[prefix + "tune_seed"] = std::to_string(tune_seed(seed_r));
        if (std::find(config.models.begin(), config.models.end(), "bdt") != config.models.end() && r == 0) {
            params[prefix + "verify_seed"] = std::to_string(derive_seed(seed_r, 3));
        }
    }
    auto run = runstore::Run::open(config.runs_root, params);

    try {
        const auto series = in_stage("load", [&] { return load_dataset(config); });
        run.log_metric("dataset.bins", static_cast<double>(series.size()));
        run.log_metric("dataset.interval", static_cast<double>(series.interval));

        std::vector<RepeatOutput> outs(config.repeats);
        std::vector<std::exception_ptr> errors(config.repeats);
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t r = next++; r < config.repeats; r = next++) {
                try {
                    outs[r] = run_repeat(config, series, r);
                } catch (...) {
                    errors[r] = std::current_exception();
                }
            }
        };
        const auto jobs = std::min(config.jobs, config.repeats);
        if (jobs <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }

        in_stage("report", [&] {
            run.log_artifact("metrics.csv", metrics_csv(outs));
            run.log_artifact("adf.csv", adf_csv(outs));
            run.log_artifact("params.csv", params_csv(outs));
            for (std::size_t r = 0; r < outs.size(); ++r) {
                for (const auto& [kind, log] : outs[r].tune_csv) {
                    run.log_artifact("tune_" + kind + "_r" + std::to_string(r) + ".csv", log);
                }
            }

            // Per model and channel: MAE samples over repeats.
            std::map<std::string, std::map<std::string, std::vector<double>>> mae, rmse, nmae, train;
            std::map<std::string, std::vector<double>> sizes;
            for (const auto& out : outs) {
                for (const auto& row : out.rows) {
                    mae[row.channel][row.model].push_back(row.report.mae);
                    rmse[row.channel][row.model].push_back(row.report.rmse);
                    nmae[row.channel][row.model].push_back(row.nmae);
                    train[row.channel][row.model].push_back(row.train_mae);
                    if (row.channel == kChannels[0]) sizes[row.model].push_back(static_cast<double>(row.size_bytes));
                }
            }
            std::map<std::string, std::map<std::string, int>> rank;
            std::ostringstream ranks;
            ranks << "channel,rank,model,mean_mae,n\n";
            for (const char* ch : kChannels) {
                if (config.repeats < 2) break;
                std::vector<evaluation::Treatment> ts;
                for (const auto& kind : config.models) ts.push_back({kind, mae[ch][kind]});
                for (const auto& g : evaluation::scott_knott(ts)) {
                    for (std::size_t i = 0; i < g.members.size(); ++i) {
                        rank[ch][g.members[i]] = g.rank;
                        ranks << ch << ',' << g.rank << ',' << g.members[i] << ',' << tuning::format_real(mean_of(g.samples[i]))
                              << ',' << g.samples[i].size() << '\n';
                    }
                }
            }
            run.log_artifact("ranks.csv", ranks.str());

            std::ostringstream md;
            md << "| Model | Count MAE | Bytes MAE |\n| --- | ---: | ---: |\n";
            for (const char* kind : {"var", "hw", "rrp", "bdt"}) {
                if (std::find(config.models.begin(), config.models.end(), kind) == config.models.end()) continue;
                md << "| " << display_name(kind) << " | " << fmt(mean_of(mae["count"][kind])) << " | "
                   << fmt(mean_of(mae["bytes"][kind])) << " |\n";
            }
            md << "\nMean over " << config.repeats << " repeat(s) of rolling one-step forecasts on the test split.\n\n";
            md << "| Model | Count nMAE | Bytes nMAE | Count train MAE | Bytes train MAE | Count rank | Bytes rank | Size (bytes) |\n";
            md << "| --- | ---: | ---: | ---: | ---: | ---: | ---: | ---: |\n";
            for (const char* kind : {"var", "hw", "rrp", "bdt"}) {
                if (std::find(config.models.begin(), config.models.end(), kind) == config.models.end()) continue;
                auto rk = [&](const char* ch) { return rank[ch].count(kind) ? std::to_string(rank[ch][kind]) : "-"; };
                md << "| " << display_name(kind) << " | " << fmt(mean_of(nmae["count"][kind])) << " | "
                   << fmt(mean_of(nmae["bytes"][kind])) << " | " << fmt(mean_of(train["count"][kind])) << " | "
                   << fmt(mean_of(train["bytes"][kind])) << " | " << rk("count") << " | " << rk("bytes") << " | "
                   << fmt(mean_of(sizes[kind])) << " |\n";
            }
            run.log_artifact("table2.md", md.str());

            for (const auto& kind : config.models) {
                for (const char* ch : kChannels) {
                    const auto key = kind + "." + ch + ".";
                    run.log_metric(key + "mae", mean_of(mae[ch][kind]));
                    run.log_metric(key + "rmse", mean_of(rmse[ch][kind]));
                    if (auto v = mean_of(nmae[ch][kind]); !std::isnan(v)) run.log_metric(key + "nmae", v);
                    if (auto v = mean_of(train[ch][kind]); !std::isnan(v)) run.log_metric(key + "train_mae", v);
                    if (rank[ch].count(kind)) run.log_metric(key + "rank", rank[ch][kind]);
                }
                run.log_metric(kind + ".size_bytes", mean_of(sizes[kind]));
            }

            if (outs.front().bdt) {
                const auto& b = *outs.front().bdt;
                run.log_artifact("bdt_key_layout.csv", b.layout);
                run.log_artifact("bdt_verify.csv", b.verify);
                run.log_artifact("bdt_capacity.csv", b.capacity);
                for (std::size_t ch = 0; ch < b.rules.size(); ++ch) {
                    run.log_artifact(std::string("bdt_") + kChannels[ch] + ".tree", b.tree_text[ch]);
                    run.log_artifact(std::string("bdt_") + kChannels[ch] + ".tbl", b.table_text[ch]);
                    run.log_metric(std::string("bdt.") + kChannels[ch] + ".rules", static_cast<double>(b.rules[ch]));
                    run.log_metric(std::string("bdt.") + kChannels[ch] + ".equivalent", b.equivalent[ch] ? 1.0 : 0.0);
                    run.log_metric(std::string("bdt.") + kChannels[ch] + ".fits", b.fits[ch] ? 1.0 : 0.0);
                }
            }
            return 0;
        });
    } catch (const StageError& e) {
        run.fail(e.stage(), e.what());
        throw;
    } catch (const Error& e) {
        run.fail("internal", e.what());
        throw StageError("internal", e);
    } catch (const std::exception& e) {
        run.fail("internal", e.what());
        throw;
    }
    ExperimentResult result;
    result.manifest = run.finalize();
    result.run_id = run.id();
    result.run_dir = run.dir();
    return result;
}

}  // namespace flowcast::experiment
