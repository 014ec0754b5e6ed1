#include "flowcast/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "flowcast/error.hpp"
#include "flowcast/tuning.hpp"

namespace flowcast::evaluation {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double median(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const auto h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct Block {
    std::size_t lo, hi;  // treatment index range [lo, hi)
};

std::vector<double> pooled(const std::vector<Treatment>& ts, std::size_t lo, std::size_t hi) {
    std::vector<double> out;
    for (auto i = lo; i < hi; ++i) out.insert(out.end(), ts[i].samples.begin(), ts[i].samples.end());
    return out;
}

void divide(const std::vector<Treatment>& ts, std::size_t lo, std::size_t hi, std::vector<Block>& out) {
    if (hi - lo < 2) {
        out.push_back({lo, hi});
        return;
    }
    const auto all = pooled(ts, lo, hi);
    const double mu = mean(all);
    const double n = static_cast<double>(all.size());
    double best_gain = -1.0;
    std::size_t cut = lo + 1;
    for (auto c = lo + 1; c < hi; ++c) {
        const auto left = pooled(ts, lo, c);
        const auto right = pooled(ts, c, hi);
        const double ml = mean(left), mr = mean(right);
        const double gain = static_cast<double>(left.size()) / n * (ml - mu) * (ml - mu) +
                            static_cast<double>(right.size()) / n * (mr - mu) * (mr - mu);
        if (gain > best_gain) {
            best_gain = gain;
            cut = c;
        }
    }
    const auto left = pooled(ts, lo, cut);
    const auto right = pooled(ts, cut, hi);
    if (std::abs(cliffs_delta(left, right)) >= kSmallEffect) {
        divide(ts, lo, cut, out);
        divide(ts, cut, hi, out);
    } else {
        out.push_back({lo, hi});
    }
}

std::string num(double v) { return std::isnan(v) ? "" : tuning::format_real(v); }

}  // namespace

MetricReport point_metrics(std::span<const double> actual, std::span<const double> predicted,
                           const MetricOptions& options) {
    if (actual.size() != predicted.size()) throw Error(ErrorCode::bad_dimension, "actual and predicted lengths differ");
    if (actual.empty()) throw Error(ErrorCode::empty_input, "no points to score");
    const auto n = actual.size();
    const double nd = static_cast<double>(n);

    std::vector<double> w(n, 1.0 / nd);
    if (!options.weights.empty()) {
        if (options.weights.size() != n) throw Error(ErrorCode::bad_dimension, "weights length differs");
        const double total = std::accumulate(options.weights.begin(), options.weights.end(), 0.0);
        if (!(total > 0) || std::any_of(options.weights.begin(), options.weights.end(), [](double x) { return x < 0; })) {
            throw Error(ErrorCode::bad_parameter, "weights must be non-negative with a positive sum");
        }
        for (std::size_t i = 0; i < n; ++i) w[i] = options.weights[i] / total;
    }

    MetricReport r;
    r.n = n;
    double sq = 0.0, smape = 0.0, log_rae = 0.0;
    std::size_t rae_terms = 0;
    std::vector<double> ape;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = actual[i], e = std::abs(predicted[i] - y);
        r.mae += w[i] * e;
        sq += e * e;
        if (y == 0.0) {
            ++r.mape_skipped;
        } else {
            ape.push_back(100.0 * e / std::abs(y));
        }
        const double denom = std::abs(y) + std::abs(predicted[i]);
        if (denom > 0) smape += 2.0 * e / denom;

        std::optional<double> naive;
        if (i > 0) {
            naive = actual[i - 1];
        } else if (options.previous_actual) {
            naive = options.previous_actual;
        }
        if (naive) {
            const double base = std::abs(*naive - y);
            if (base == 0.0) {
                ++r.gmrae_skipped;
            } else {
                log_rae += std::log(e / base);
                ++rae_terms;
            }
        }
    }
    r.rmse = std::sqrt(sq / nd);
    r.smape = 100.0 * smape / nd;
    r.mape = ape.empty() ? kNaN : std::accumulate(ape.begin(), ape.end(), 0.0) / static_cast<double>(ape.size());
    r.mdape = median(ape);
    r.gmrae = rae_terms == 0 ? kNaN : std::exp(log_rae / static_cast<double>(rae_terms));
    return r;
}

double cliffs_delta(std::span<const double> l1, std::span<const double> l2) {
    if (l1.empty() || l2.empty()) throw Error(ErrorCode::empty_input, "cliffs delta needs two non-empty lists");
    std::vector<double> sorted(l2.begin(), l2.end());
    std::sort(sorted.begin(), sorted.end());
    long long more = 0, less = 0;
    for (double x : l1) {
        less += sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), x);
        more += std::lower_bound(sorted.begin(), sorted.end(), x) - sorted.begin();
    }
    return static_cast<double>(more - less) / (static_cast<double>(l1.size()) * static_cast<double>(l2.size()));
}

std::vector<RankGroup> scott_knott(std::vector<Treatment> treatments) {
    for (const auto& t : treatments) {
        if (t.samples.size() < 2) throw Error(ErrorCode::insufficient_data, "treatment " + t.name + " needs two samples");
    }
    std::stable_sort(treatments.begin(), treatments.end(),
                     [](const Treatment& a, const Treatment& b) { return mean(a.samples) < mean(b.samples); });
    std::vector<Block> blocks;
    if (!treatments.empty()) divide(treatments, 0, treatments.size(), blocks);
    std::vector<RankGroup> groups;
    for (const auto& b : blocks) {
        RankGroup g;
        g.rank = static_cast<int>(groups.size()) + 1;
        for (auto i = b.lo; i < b.hi; ++i) {
            g.members.push_back(treatments[i].name);
            g.samples.push_back(treatments[i].samples);
        }
        groups.push_back(std::move(g));
    }
    return groups;
}

std::size_t model_size(const models::Forecaster& model) { return model.size_bytes(); }

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
    out << "label,n,mae,rmse,mape,smape,mdape,gmrae,mape_skipped,gmrae_skipped\n";
    for (const auto& row : rows) {
        const auto& r = row.report;
        out << row.label << ',' << r.n << ',' << num(r.mae) << ',' << num(r.rmse) << ',' << num(r.mape) << ','
            << num(r.smape) << ',' << num(r.mdape) << ',' << num(r.gmrae) << ',' << r.mape_skipped << ','
            << r.gmrae_skipped << '\n';
    }
}

void write_ranks_csv(std::ostream& out, const std::vector<RankGroup>& groups) {
    out << "rank,treatment,mean,n\n";
    for (const auto& g : groups) {
        for (std::size_t i = 0; i < g.members.size(); ++i) {
            out << g.rank << ',' << g.members[i] << ',' << num(mean(g.samples[i])) << ',' << g.samples[i].size() << '\n';
        }
    }
}

}  // namespace flowcast::evaluation
