#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "flowcast/analysis.hpp"
#include "flowcast/error.hpp"
#include "flowcast/evaluation.hpp"
#include "flowcast/experiment.hpp"
#include "flowcast/ingest.hpp"
#include "flowcast/models/forecaster.hpp"
#include "flowcast/p4c.hpp"
#include "flowcast/runstore.hpp"
#include "flowcast/timeseries.hpp"
#include "flowcast/tuning.hpp"
#include "flowcast/version.hpp"

namespace fc = flowcast;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw fc::Error(fc::ErrorCode::io, "cannot open " + path);
    return in;
}

// Writes to `path`, or stdout when the path is empty or "-".
void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw fc::Error(fc::ErrorCode::io, "cannot write " + path);
}

std::string num(double v) { return std::isnan(v) ? "nan" : fc::tuning::format_real(v); }

fc::ts::TimeSeries read_series(const std::string& path) {
    auto in = open_in(path);
    return fc::ts::read_csv(in);
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    auto in = open_in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fc::models::ParamMap parse_params(const std::vector<std::string>& items) {
    fc::models::ParamMap params;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw fc::Error(fc::ErrorCode::bad_parameter, "expected key=value, got '" + item + "'");
        }
        params[item.substr(0, eq)] = item.substr(eq + 1);
    }
    return params;
}

int exit_code_for(fc::ErrorCode code) {
    switch (code) {
        case fc::ErrorCode::bad_parameter:
        case fc::ErrorCode::bad_window:
        case fc::ErrorCode::non_finite_grid: return kUsage;
        default: return kData;
    }
}

std::string series_csv(const fc::ts::TimeSeries& s) {
    std::ostringstream out;
    fc::ts::write_csv(out, s);
    return out.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowcast: workload forecasting and switch-table compilation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("flowcast ") + std::string(fc::version()) + " " +
                                          std::string(fc::code_fingerprint()));

    std::function<int()> action;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse an access log and report accepted/rejected lines");
    std::string ingest_file, reject_report, ingest_out;
    std::size_t max_samples = 10;
    ingest->add_option("file", ingest_file, "Access log")->required();
    ingest->add_option("--reject-report", reject_report, "Write every rejected line with its reason");
    ingest->add_option("--out", ingest_out, "Write accepted records in canonical form");
    ingest->add_option("--max-samples", max_samples, "Rejected lines kept in the summary");
    ingest->callback([&] {
        action = [&] {
            auto in = open_in(ingest_file);
            std::ofstream rejects, records;
            if (!reject_report.empty()) rejects.open(reject_report, std::ios::trunc);
            if (!ingest_out.empty()) records.open(ingest_out, std::ios::trunc);
            fc::ingest::IngestOptions opts;
            opts.max_reject_samples = max_samples;
            if (rejects.is_open()) {
                opts.on_reject = [&](std::string_view line, const fc::ingest::Rejection& r) {
                    rejects << fc::ingest::to_string(r.reason) << '\t' << r.detail << '\t' << line << '\n';
                };
            }
            const auto report = fc::ingest::ingest_file(
                in,
                [&](const fc::ingest::TraceRecord& rec) {
                    if (records.is_open()) records << fc::ingest::format_line(rec) << '\n';
                },
                opts);
            std::cout << "lines_total: " << report.lines_total << "\nlines_ok: " << report.lines_ok
                      << "\nlines_rejected: " << report.lines_rejected << '\n';
            for (const auto& s : report.reject_samples) std::cout << "rejected: " << s << '\n';
            return kOk;
        };
    });

    // aggregate
    auto* aggregate = app.add_subcommand("aggregate", "Bin an access log into a count/bytes series CSV");
    std::string agg_file, agg_out;
    std::int64_t agg_interval = 3600;
    aggregate->add_option("file", agg_file, "Access log")->required();
    aggregate->add_option("--interval", agg_interval, "Bin width in seconds")->check(CLI::PositiveNumber);
    aggregate->add_option("--out", agg_out, "Series CSV (default stdout)");
    aggregate->callback([&] {
        action = [&] {
            auto in = open_in(agg_file);
            fc::ts::SeriesBuilder builder(agg_interval);
            const auto report = fc::ingest::ingest_file(in, [&](const fc::ingest::TraceRecord& r) { builder.add(r); });
            const auto series = builder.build();
            emit(agg_out, series_csv(series));
            std::cerr << "records: " << report.lines_ok << ", rejected: " << report.lines_rejected
                      << ", bins: " << series.size() << '\n';
            return kOk;
        };
    });

    // sample
    auto* sample = app.add_subcommand("sample", "Pick one stratum-length window of a series");
    std::string sample_in, sample_out, sample_stratum = "day";
    std::uint64_t sample_seed = 0;
    sample->add_option("--input", sample_in, "Series CSV")->required();
    sample->add_option("--stratum", sample_stratum, "day, week or month");
    sample->add_option("--seed", sample_seed, "Window choice seed");
    sample->add_option("--out", sample_out, "Series CSV (default stdout)");
    sample->callback([&] {
        action = [&] {
            const auto kind = fc::ts::parse_stratum(sample_stratum);
            emit(sample_out, series_csv(fc::ts::stratified_sample(read_series(sample_in), {kind, sample_seed})));
            return kOk;
        };
    });

    // split
    auto* split = app.add_subcommand("split", "Chronological train/test split of a series");
    std::string split_in, split_train, split_test;
    double split_fraction = 0.8;
    split->add_option("--input", split_in, "Series CSV")->required();
    split->add_option("--fraction", split_fraction, "Train fraction");
    split->add_option("--train", split_train, "Train CSV")->required();
    split->add_option("--test", split_test, "Test CSV")->required();
    split->callback([&] {
        action = [&] {
            const auto [train, test] = fc::ts::train_test_split(read_series(split_in), split_fraction);
            emit(split_train, series_csv(train));
            emit(split_test, series_csv(test));
            return kOk;
        };
    });

    // decompose
    auto* decompose = app.add_subcommand("decompose", "Additive trend/seasonal/residual decomposition");
    std::string dec_in, dec_out, dec_channel = "count";
    std::size_t dec_period = 24;
    decompose->add_option("--input", dec_in, "Series CSV")->required();
    decompose->add_option("--channel", dec_channel, "count or bytes");
    decompose->add_option("--period", dec_period, "Bins per cycle");
    decompose->add_option("--out", dec_out, "Decomposition CSV (default stdout)");
    decompose->callback([&] {
        action = [&] {
            const auto x = fc::ts::channel_values(read_series(dec_in), fc::ts::parse_channel(dec_channel));
            std::ostringstream out;
            fc::analysis::write_csv(out, fc::analysis::decompose(x, dec_period));
            emit(dec_out, out.str());
            return kOk;
        };
    });

    // adf
    auto* adf = app.add_subcommand("adf", "Augmented Dickey-Fuller unit-root test");
    std::string adf_in, adf_channel = "count";
    std::optional<std::size_t> adf_max_lag;
    adf->add_option("--input", adf_in, "Series CSV")->required();
    adf->add_option("--channel", adf_channel, "count or bytes");
    adf->add_option("--max-lag", adf_max_lag, "Largest lag considered (default Schwert rule)");
    adf->callback([&] {
        action = [&] {
            const auto x = fc::ts::channel_values(read_series(adf_in), fc::ts::parse_channel(adf_channel));
            const auto r = fc::analysis::adf_test(x, adf_max_lag);
            std::cout << "statistic: " << num(r.statistic) << "\np_value: " << num(r.p_value)
                      << "\nlags_used: " << r.lags_used << "\nnobs: " << r.nobs << '\n';
            for (const auto& [level, value] : r.critical) {
                std::cout << "critical@" << static_cast<int>(std::lround(level * 100)) << "%: " << num(value) << '\n';
            }
            for (const auto& [level, reject] : r.reject_at) {
                std::cout << "reject@" << static_cast<int>(std::lround(level * 100))
                          << "%: " << (reject ? "true" : "false") << '\n';
            }
            return kOk;
        };
    });

    // smooth
    auto* smooth = app.add_subcommand("smooth", "Moving-average or exponential smoothing of one channel");
    std::string sm_in, sm_out, sm_method = "ses", sm_channel = "count";
    std::ptrdiff_t sm_window = 3;
    double sm_alpha = 0.5, sm_beta = 0.5, sm_gamma = 0.5, sm_phi = 1.0;
    std::size_t sm_season = 24, sm_horizon = 0;
    smooth->add_option("--method", sm_method, "ma, ses, des or hw")->check(CLI::IsMember({"ma", "ses", "des", "hw"}));
    smooth->add_option("--input", sm_in, "Series CSV")->required();
    smooth->add_option("--channel", sm_channel, "count or bytes");
    smooth->add_option("--window", sm_window, "Moving-average window");
    smooth->add_option("--alpha", sm_alpha, "Level smoothing, (0, 1)");
    smooth->add_option("--beta", sm_beta, "Trend smoothing, (0, 1)");
    smooth->add_option("--gamma", sm_gamma, "Seasonal smoothing, (0, 1)");
    smooth->add_option("--phi", sm_phi, "Damping, (0, 1]");
    smooth->add_option("--season-length", sm_season, "Bins per season");
    smooth->add_option("--horizon", sm_horizon, "Forecast steps appended after the data");
    smooth->add_option("--out", sm_out, "CSV (default stdout)");
    smooth->callback([&] {
        action = [&] {
            // Parameters are checked before any file is read so bad flags are usage errors.
            std::optional<fc::analysis::SmoothingParams> hw;
            if (sm_method == "hw") hw.emplace(sm_alpha, sm_beta, sm_gamma, sm_phi, sm_season, sm_horizon);
            if (sm_method == "ses" || sm_method == "des") {
                if (!(sm_alpha > 0 && sm_alpha < 1)) {
                    throw fc::Error(fc::ErrorCode::bad_parameter, "alpha must lie in (0, 1), got " + num(sm_alpha));
                }
                if (sm_method == "des" && !(sm_beta > 0 && sm_beta < 1)) {
                    throw fc::Error(fc::ErrorCode::bad_parameter, "beta must lie in (0, 1), got " + num(sm_beta));
                }
            }
            if (sm_method == "ma" && sm_window < 1) {
                throw fc::Error(fc::ErrorCode::bad_window, "window must be at least 1");
            }
            const auto x = fc::ts::channel_values(read_series(sm_in), fc::ts::parse_channel(sm_channel));
            std::ostringstream out;
            out << "index,observed,smoothed\n";
            std::vector<double> s, forecast;
            if (sm_method == "ma") {
                s = fc::analysis::smooth_ma(x, sm_window);
            } else if (sm_method == "ses") {
                s = fc::analysis::smooth_ses(x, sm_alpha);
            } else if (sm_method == "des") {
                const auto d = fc::analysis::smooth_des(x, sm_alpha, sm_beta);
                s = d.level;
                for (std::size_t h = 1; h <= sm_horizon; ++h) forecast.push_back(d.forecast(h));
            } else {
                const auto r = fc::analysis::smooth_hw(x, *hw);
                s = r.fitted;
                forecast = r.forecast;
            }
            for (std::size_t i = 0; i < x.size(); ++i) out << i << ',' << num(x[i]) << ',' << num(s[i]) << '\n';
            for (std::size_t h = 0; h < forecast.size(); ++h) out << x.size() + h << ",," << num(forecast[h]) << '\n';
            emit(sm_out, out.str());
            return kOk;
        };
    });

    // difference
    auto* diff = app.add_subcommand("difference", "First difference of one channel");
    std::string diff_in, diff_out, diff_channel = "count";
    diff->add_option("--input", diff_in, "Series CSV")->required();
    diff->add_option("--channel", diff_channel, "count or bytes");
    diff->add_option("--out", diff_out, "CSV (default stdout)");
    diff->callback([&] {
        action = [&] {
            const auto x = fc::ts::channel_values(read_series(diff_in), fc::ts::parse_channel(diff_channel));
            std::ostringstream out;
            out << "index,difference\n";
            const auto d = fc::analysis::difference(x);
            for (std::size_t i = 0; i < d.size(); ++i) out << i + 1 << ',' << num(d[i]) << '\n';
            emit(diff_out, out.str());
            return kOk;
        };
    });

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a forecaster and write its canonical binary form");
    std::string fit_kind, fit_in, fit_out, fit_tree, fit_channel = "count";
    std::vector<std::string> fit_params;
    fit->add_option("--model", fit_kind, "var, hw, rrp or bdt")->required();
    fit->add_option("--input", fit_in, "Training series CSV")->required();
    fit->add_option("--param", fit_params, "Hyperparameter key=value (repeatable)");
    fit->add_option("--out", fit_out, "Model file")->required();
    fit->add_option("--tree-out", fit_tree, "BDT only: write the text tree of --channel");
    fit->add_option("--channel", fit_channel, "count or bytes");
    fit->callback([&] {
        action = [&] {
            auto model = fc::models::make_forecaster(fit_kind, parse_params(fit_params));
            model->fit(fc::experiment::series_matrix(read_series(fit_in)));
            const auto bytes = model->serialize();
            emit(fit_out, std::string(bytes.begin(), bytes.end()));
            if (!fit_tree.empty()) {
                const auto* bdt = dynamic_cast<const fc::models::BdtForecaster*>(model.get());
                if (!bdt) throw fc::Error(fc::ErrorCode::bad_parameter, "--tree-out needs --model bdt");
                const auto ch = fc::ts::parse_channel(fit_channel) == fc::ts::Channel::count ? 0 : 1;
                std::ostringstream out;
                fc::models::write_tree_text(out, bdt->trees()[ch]);
                emit(fit_tree, out.str());
            }
            std::cout << "model: " << fit_kind << "\nsize_bytes: " << bytes.size() << '\n';
            return kOk;
        };
    });

    // eval
    auto* eval = app.add_subcommand("eval", "Score rolling one-step forecasts of a fitted model");
    std::string eval_model, eval_in, eval_out;
    double eval_fraction = 0.8;
    eval->add_option("--model", eval_model, "Model file from fit")->required();
    eval->add_option("--input", eval_in, "Series CSV; the tail after --train-fraction is scored")->required();
    eval->add_option("--train-fraction", eval_fraction, "Share of rows used only as history");
    eval->add_option("--out", eval_out, "Metrics CSV (default stdout)");
    eval->callback([&] {
        action = [&] {
            const auto bytes = read_bytes(eval_model);
            const auto model = fc::models::deserialize_forecaster(bytes);
            const auto series = read_series(eval_in);
            const auto split = fc::ts::train_test_split(series, eval_fraction).first.size();
            const auto data = fc::experiment::series_matrix(series);
            const auto n = static_cast<std::size_t>(data.rows());
            const auto pred = fc::experiment::rolling_one_step(*model, data, split, n);
            std::vector<fc::evaluation::MetricRow> rows;
            for (Eigen::Index ch = 0; ch < 2; ++ch) {
                std::vector<double> actual, predicted;
                for (std::size_t i = split; i < n; ++i) {
                    actual.push_back(data(static_cast<Eigen::Index>(i), ch));
                    predicted.push_back(pred(static_cast<Eigen::Index>(i - split), ch));
                }
                fc::evaluation::MetricOptions opts;
                opts.previous_actual = data(static_cast<Eigen::Index>(split) - 1, ch);
                rows.push_back({ch == 0 ? "count" : "bytes", fc::evaluation::point_metrics(actual, predicted, opts)});
            }
            std::ostringstream out;
            fc::evaluation::write_metrics_csv(out, rows);
            emit(eval_out, out.str());
            return kOk;
        };
    });

    // tune
    auto* tune = app.add_subcommand("tune", "Grid or random hyperparameter search");
    std::string tune_kind, tune_in, tune_out, tune_strategy = "random";
    std::vector<std::string> tune_space, tune_fixed;
    std::size_t tune_budget = 20, tune_jobs = 1;
    std::uint64_t tune_seed = 0;
    double tune_fraction = 0.8;
    tune->add_option("--model", tune_kind, "var, hw, rrp or bdt")->required();
    tune->add_option("--input", tune_in, "Series CSV")->required();
    tune->add_option("--space", tune_space, "Dimension spec, e.g. alpha=real:0.01:0.99 (repeatable)")->required();
    tune->add_option("--param", tune_fixed, "Fixed hyperparameter key=value (repeatable)");
    tune->add_option("--strategy", tune_strategy, "grid or random")->check(CLI::IsMember({"grid", "random"}));
    tune->add_option("--budget", tune_budget, "Random-search trials");
    tune->add_option("--seed", tune_seed, "Random-search seed");
    tune->add_option("--jobs", tune_jobs, "Parallel trials");
    tune->add_option("--fit-fraction", tune_fraction, "Rows used for fitting; the rest validate");
    tune->add_option("--out", tune_out, "Trial CSV (default stdout)");
    tune->callback([&] {
        action = [&] {
            fc::tuning::ParamSpace space;
            for (const auto& spec : tune_space) {
                const auto d = fc::tuning::parse_dimension(spec);
                space.add(d.name, d.domain);
            }
            const auto base = parse_params(tune_fixed);
            const auto data = fc::experiment::series_matrix(read_series(tune_in));
            const auto cut = static_cast<std::size_t>(std::floor(tune_fraction * static_cast<double>(data.rows())));
            auto objective = [&](const fc::tuning::Assignment& a) {
                auto p = base;
                for (const auto& [k, v] : a) p[k] = v;
                return fc::experiment::holdout_score(tune_kind, p, data, cut);
            };
            const auto result = tune_strategy == "grid"
                                    ? fc::tuning::grid_search(space, objective, tune_jobs)
                                    : fc::tuning::random_search(space, tune_budget, tune_seed, objective, tune_jobs);
            std::ostringstream out;
            fc::tuning::write_trials_csv(out, space, result.trials);
            emit(tune_out, out.str());
            std::cerr << "best trial " << result.best.trial_id << " objective " << num(result.best.objective);
            for (const auto& [k, v] : result.best.params) std::cerr << ' ' << k << '=' << v;
            std::cerr << '\n';
            return result.best.failed ? kData : kOk;
        };
    });

    // rank
    auto* rank = app.add_subcommand("rank", "Scott-Knott ranking of treatment samples");
    std::string rank_in, rank_out;
    rank->add_option("--input", rank_in, "CSV with columns treatment,value")->required();
    rank->add_option("--out", rank_out, "Ranks CSV (default stdout)");
    rank->callback([&] {
        action = [&] {
            auto in = open_in(rank_in);
            std::string line;
            std::vector<fc::evaluation::Treatment> treatments;
            std::map<std::string, std::size_t> index;
            std::size_t line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty() || (line_no == 1 && line.rfind("treatment", 0) == 0)) continue;
                const auto comma = line.find(',');
                double v = 0;
                std::size_t used = 0;
                try {
                    if (comma == std::string::npos) throw std::invalid_argument("no comma");
                    v = std::stod(line.substr(comma + 1), &used);
                    if (used != line.size() - comma - 1) throw std::invalid_argument("trailing");
                } catch (const std::logic_error&) {
                    throw fc::Error(fc::ErrorCode::bad_format, "line " + std::to_string(line_no) + ": expected name,value");
                }
                const auto name = line.substr(0, comma);
                if (!index.count(name)) {
                    index[name] = treatments.size();
                    treatments.push_back({name, {}});
                }
                treatments[index[name]].samples.push_back(v);
            }
            std::ostringstream out;
            fc::evaluation::write_ranks_csv(out, fc::evaluation::scott_knott(treatments));
            emit(rank_out, out.str());
            return kOk;
        };
    });

    // compile
    auto* compile = app.add_subcommand("compile", "Compile a BDT text tree into a ternary table");
    std::string comp_tree, comp_out;
    std::size_t comp_capacity = std::size_t{1} << 20;
    unsigned comp_label_bits = 8;
    compile->add_option("--tree", comp_tree, "Tree text file")->required();
    compile->add_option("--out", comp_out, "TERNTBL file (default stdout)");
    compile->add_option("--capacity-bits", comp_capacity, "TCAM budget in bits")->check(CLI::PositiveNumber);
    compile->add_option("--label-bits", comp_label_bits, "Bits stored per action label");
    compile->callback([&] {
        action = [&] {
            auto in = open_in(comp_tree);
            const auto table = fc::p4c::compile(fc::models::read_tree_text(in));
            std::ostringstream out;
            fc::p4c::write_table(out, table);
            emit(comp_out, out.str());
            const auto cap = fc::p4c::check_constraints(table, comp_capacity, comp_label_bits);
            std::cerr << "entries: " << cap.entries << "\nentry_bits: " << cap.entry_bits
                      << "\ntotal_bits: " << cap.total_bits << "\ncapacity_bits: " << cap.capacity_bits
                      << "\nfits: " << (cap.fits ? "true" : "false") << '\n';
            return kOk;
        };
    });

    // verify
    auto* verify = app.add_subcommand("verify", "Check a ternary table against its tree");
    std::string ver_tree, ver_table;
    bool ver_exhaustive = false;
    std::size_t ver_samples = 100000;
    std::uint64_t ver_seed = 0;
    verify->add_option("--tree", ver_tree, "Tree text file")->required();
    verify->add_option("--table", ver_table, "TERNTBL file")->required();
    verify->add_flag("--exhaustive", ver_exhaustive, "Compare every key (width <= 24)");
    verify->add_option("--samples", ver_samples, "Sampled keys when not exhaustive");
    verify->add_option("--seed", ver_seed, "Sampling seed");
    verify->callback([&] {
        action = [&] {
            auto tree_in = open_in(ver_tree);
            auto table_in = open_in(ver_table);
            const auto tree = fc::models::read_tree_text(tree_in);
            const auto table = fc::p4c::read_table(table_in);
            const auto mode = ver_exhaustive ? fc::p4c::VerifyMode::all_keys()
                                             : fc::p4c::VerifyMode::sampled(ver_seed, ver_samples);
            const auto v = fc::p4c::verify_equivalence(tree, table, mode);
            std::cout << "equivalent: " << (v.equivalent ? "true" : "false") << "\nkeys_checked: " << v.keys_checked
                      << "\nmismatches: " << v.mismatches << '\n';
            if (v.counterexample) {
                std::cout << "counterexample: 0x" << std::hex << *v.counterexample << std::dec
                          << " tree=" << v.tree_label << " table=" << v.table_label << '\n';
            }
            return v.equivalent ? kOk : kData;
        };
    });

    // runs
    auto* runs = app.add_subcommand("runs", "List or show recorded runs");
    runs->require_subcommand(1);
    std::string runs_root = "runs", show_id;
    runs->add_option("--root", runs_root, "Run store directory");
    auto* runs_list = runs->add_subcommand("list", "Completed runs, oldest first");
    auto* runs_show = runs->add_subcommand("show", "Print one manifest");
    runs_show->add_option("id", show_id, "Run id")->required();
    runs_list->callback([&] {
        action = [&] {
            for (const auto& m : fc::runstore::list_runs(runs_root)) {
                std::cout << m.run_id << '\t' << m.created_at << '\t' << m.status;
                if (!m.failed_stage.empty()) std::cout << " (" << m.failed_stage << ')';
                std::cout << '\n';
            }
            return kOk;
        };
    });
    runs_show->callback([&] {
        action = [&] {
            std::cout << fc::runstore::show_run(runs_root, show_id).to_json();
            return kOk;
        };
    });

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run a configured multi-repeat model comparison");
    std::string exp_config;
    std::vector<std::string> exp_set;
    std::optional<std::size_t> exp_jobs;
    std::optional<std::string> exp_root;
    exp->add_option("--config", exp_config, "Experiment file (key = value)")->required();
    exp->add_option("--set", exp_set, "Override key=value (repeatable)");
    exp->add_option("--jobs", exp_jobs, "Repeats run in parallel");
    exp->add_option("--runs-root", exp_root, "Run store directory");
    exp->callback([&] {
        action = [&] {
            auto in = open_in(exp_config);
            auto flat = fc::experiment::parse_config_text(in);
            for (const auto& [k, v] : parse_params(exp_set)) flat[k] = v;
            if (exp_jobs) flat["jobs"] = std::to_string(*exp_jobs);
            if (exp_root) flat["runs_root"] = *exp_root;
            const auto config = fc::experiment::ExperimentConfig::from_flat(flat);
            const auto result = fc::experiment::run_experiment(config);
            std::cout << "run_id: " << result.run_id << "\nrun_dir: " << result.run_dir.string() << '\n';
            std::ifstream table(result.run_dir / "artifacts" / "table2.md");
            std::cout << table.rdbuf();
            return kOk;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }
    try {
        return action ? action() : kUsage;
    } catch (const fc::experiment::StageError& e) {
        std::cerr << "error in stage " << e.stage() << ": " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const fc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}
