#include "flowcast/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "flowcast/error.hpp"
#include "ols.hpp"

namespace flowcast::analysis {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_open_unit(double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) {
        throw Error(ErrorCode::bad_parameter, std::string(name) + " must lie in (0, 1), got " + std::to_string(v));
    }
}

// MacKinnon (1994), N = 1, constant only. Same table statsmodels ships.
constexpr double kTauMax = 2.74;
constexpr double kTauMin = -18.83;
constexpr double kTauStar = -1.61;
constexpr std::array<double, 3> kSmallP = {2.1659, 1.4412, 3.8269e-2};
constexpr std::array<double, 4> kLargeP = {1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2};

// MacKinnon (2010) finite-sample critical values, constant only: c0 + c1/T + c2/T^2 + c3/T^3.
constexpr std::array<std::pair<double, std::array<double, 4>>, 3> kCritical = {{
    {0.01, {-3.43035, -6.5393, -16.786, -79.433}},
    {0.05, {-2.86154, -2.8903, -4.234, -40.04}},
    {0.10, {-2.56677, -1.5384, -2.809, 0.0}},
}};

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct AdfRegression {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
};

// Rows t = first_row .. n-1 of dy_t = mu + rho*y_{t-1} + sum_j delta_j*dy_{t-j}.
AdfRegression adf_design(std::span<const double> y, std::size_t lags, std::size_t first_row) {
    const auto n = y.size();
    const auto rows = static_cast<Eigen::Index>(n - first_row);
    AdfRegression reg{Eigen::MatrixXd(rows, static_cast<Eigen::Index>(lags + 2)), Eigen::VectorXd(rows)};
    for (std::size_t t = first_row; t < n; ++t) {
        const auto r = static_cast<Eigen::Index>(t - first_row);
        reg.y(r) = y[t] - y[t - 1];
        reg.x(r, 0) = 1.0;
        reg.x(r, 1) = y[t - 1];
        for (std::size_t j = 1; j <= lags; ++j) {
            reg.x(r, static_cast<Eigen::Index>(j + 1)) = y[t - j] - y[t - j - 1];
        }
    }
    return reg;
}

}  // namespace

Decomposition decompose(std::span<const double> series, std::size_t period) {
    if (period < 2) throw Error(ErrorCode::bad_parameter, "period must be at least 2");
    const auto n = series.size();
    if (n < 2 * period) {
        throw Error(ErrorCode::insufficient_data, "need at least two periods, have " + std::to_string(n) + " values");
    }
    Decomposition d;
    d.observed.assign(series.begin(), series.end());
    d.period = period;
    d.trend.assign(n, kNaN);
    d.residual.assign(n, kNaN);
    d.seasonal.assign(n, 0.0);

    const auto half = period / 2;
    const bool even = period % 2 == 0;
    d.first_defined = half;
    d.end_defined = n - half;
    for (std::size_t i = half; i < n - half; ++i) {
        double sum = 0.0;
        if (even) {
            // 2 x period window: half weight on the two end points.
            sum = 0.5 * series[i - half] + 0.5 * series[i + half];
            for (std::size_t j = i - half + 1; j < i + half; ++j) sum += series[j];
        } else {
            for (std::size_t j = i - half; j <= i + half; ++j) sum += series[j];
        }
        d.trend[i] = sum / static_cast<double>(period);
    }

    std::vector<double> phase_sum(period, 0.0);
    std::vector<std::size_t> phase_n(period, 0);
    for (std::size_t i = d.first_defined; i < d.end_defined; ++i) {
        phase_sum[i % period] += series[i] - d.trend[i];
        ++phase_n[i % period];
    }
    std::vector<double> phase_mean(period);
    for (std::size_t p = 0; p < period; ++p) phase_mean[p] = phase_sum[p] / static_cast<double>(phase_n[p]);
    const double centre = std::accumulate(phase_mean.begin(), phase_mean.end(), 0.0) / static_cast<double>(period);
    for (auto& m : phase_mean) m -= centre;

    for (std::size_t i = 0; i < n; ++i) {
        d.seasonal[i] = phase_mean[i % period];
        if (i >= d.first_defined && i < d.end_defined) d.residual[i] = series[i] - d.trend[i] - d.seasonal[i];
    }
    return d;
}

void write_csv(std::ostream& out, const Decomposition& d) {
    out << "index,observed,trend,seasonal,residual\n";
    const auto old_precision = out.precision(17);
    for (std::size_t i = 0; i < d.observed.size(); ++i) {
        out << i << ',' << d.observed[i] << ',';
        if (!std::isnan(d.trend[i])) out << d.trend[i];
        out << ',' << d.seasonal[i] << ',';
        if (!std::isnan(d.residual[i])) out << d.residual[i];
        out << '\n';
    }
    out.precision(old_precision);
}

std::size_t schwert_max_lag(std::size_t n) {
    return static_cast<std::size_t>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

double mackinnon_p_value(double statistic) {
    if (statistic > kTauMax) return 1.0;
    if (statistic < kTauMin) return 0.0;
    double z = 0.0;
    double power = 1.0;
    if (statistic <= kTauStar) {
        for (double c : kSmallP) { z += c * power; power *= statistic; }
    } else {
        for (double c : kLargeP) { z += c * power; power *= statistic; }
    }
    return normal_cdf(z);
}

AdfResult adf_test(std::span<const double> series, std::optional<std::size_t> max_lag) {
    const auto n = series.size();
    const auto max_k = max_lag.value_or(schwert_max_lag(n));
    if (n < 10 + max_k) {
        throw Error(ErrorCode::insufficient_data,
                    "adf needs at least " + std::to_string(10 + max_k) + " values, have " + std::to_string(n));
    }

    // Lag choice on the common sample t = max_k+1 .. n-1.
    std::size_t best_k = 0;
    double best_ic = std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t k = 0; k <= max_k; ++k) {
        auto reg = adf_design(series, k, max_k + 1);
        auto fit = detail::ols(reg.x, reg.y);
        if (!fit) continue;
        const double nobs = static_cast<double>(reg.y.size());
        const double ssr = fit->residuals.squaredNorm();
        const double ic = nobs * std::log(ssr / nobs) + 2.0 * static_cast<double>(k + 2);
        if (!any || ic < best_ic) {
            best_ic = ic;
            best_k = k;
            any = true;
        }
    }
    if (!any) throw Error(ErrorCode::degenerate_series, "adf regression is singular for every lag order");

    auto reg = adf_design(series, best_k, best_k + 1);
    auto fit = detail::ols(reg.x, reg.y);
    if (!fit) throw Error(ErrorCode::degenerate_series, "adf regression is singular");
    const auto nobs = static_cast<std::size_t>(reg.y.size());
    const auto params = static_cast<std::size_t>(reg.x.cols());
    const double sigma2 = fit->residuals.squaredNorm() / static_cast<double>(nobs - params);
    const double rho = fit->coef(1, 0);
    const double se = std::sqrt(sigma2 * fit->xtx_inv(1, 1));

    AdfResult result;
    result.statistic = rho / se;
    if (std::isnan(result.statistic)) throw Error(ErrorCode::degenerate_series, "adf statistic undefined");
    result.p_value = mackinnon_p_value(result.statistic);
    result.lags_used = best_k;
    result.nobs = nobs;
    const double inv_t = 1.0 / static_cast<double>(nobs);
    for (const auto& [level, c] : kCritical) {
        result.critical[level] = c[0] + inv_t * (c[1] + inv_t * (c[2] + inv_t * c[3]));
        result.reject_at[level] = result.p_value < level;
    }
    return result;
}

std::vector<double> smooth_ma(std::span<const double> series, std::ptrdiff_t window) {
    if (window <= 0 || static_cast<std::size_t>(window) > series.size()) {
        throw Error(ErrorCode::bad_window, "window must lie in [1, " + std::to_string(series.size()) + "]");
    }
    const auto k = static_cast<std::size_t>(window);
    std::vector<double> out(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) {
        const auto first = t + 1 >= k ? t + 1 - k : 0;
        double sum = 0.0;
        for (std::size_t j = first; j <= t; ++j) sum += series[j];
        out[t] = sum / static_cast<double>(t + 1 - first);
    }
    return out;
}

std::vector<double> smooth_ses(std::span<const double> series, double alpha) {
    require_open_unit(alpha, "alpha");
    if (series.empty()) throw Error(ErrorCode::empty_input, "empty series");
    std::vector<double> s(series.size());
    s[0] = series[0];
    for (std::size_t t = 1; t < series.size(); ++t) s[t] = alpha * series[t] + (1.0 - alpha) * s[t - 1];
    return s;
}

DesResult smooth_des(std::span<const double> series, double alpha, double beta) {
    require_open_unit(alpha, "alpha");
    require_open_unit(beta, "beta");
    if (series.size() < 2) throw Error(ErrorCode::insufficient_data, "double smoothing needs two values");
    const auto n = series.size();
    DesResult r{std::vector<double>(n), std::vector<double>(n)};
    r.level[0] = series[0];
    r.trend[0] = series[1] - series[0];
    for (std::size_t t = 1; t < n; ++t) {
        r.level[t] = alpha * series[t] + (1.0 - alpha) * (r.level[t - 1] + r.trend[t - 1]);
        r.trend[t] = beta * (r.level[t] - r.level[t - 1]) + (1.0 - beta) * r.trend[t - 1];
    }
    return r;
}

SmoothingParams::SmoothingParams(double alpha, double beta, double gamma, double phi,
                                 std::size_t season_length, std::size_t horizon)
    : alpha_(alpha), beta_(beta), gamma_(gamma), phi_(phi), season_length_(season_length), horizon_(horizon) {
    require_open_unit(alpha, "alpha");
    require_open_unit(beta, "beta");
    require_open_unit(gamma, "gamma");
    if (!(phi > 0.0 && phi <= 1.0)) {
        throw Error(ErrorCode::bad_parameter, "phi must lie in (0, 1], got " + std::to_string(phi));
    }
    if (season_length < 1) throw Error(ErrorCode::bad_parameter, "season length must be positive");
}

double HwState::forecast(std::size_t m, double phi) const {
    double damp = 0.0;
    double power = 1.0;
    for (std::size_t i = 1; i <= m; ++i) {
        power *= phi;
        damp += power;
    }
    const double seasonal = season.empty() ? 0.0 : season[(last_index + m) % season.size()];
    return level + trend * damp + seasonal;
}

HwResult smooth_hw(std::span<const double> series, const SmoothingParams& params, SeasonalMode mode) {
    const auto n = series.size();
    const auto season_len = params.season_length();
    const bool seasonal = mode == SeasonalMode::additive;
    if (seasonal && n < 2 * season_len) {
        throw Error(ErrorCode::insufficient_data, "holt-winters needs two full seasons (" +
                                                      std::to_string(2 * season_len) + " values), have " +
                                                      std::to_string(n));
    }
    if (n < 2) throw Error(ErrorCode::insufficient_data, "holt-winters needs two values");

    const double alpha = params.alpha();
    const double beta = params.beta();
    const double gamma = params.gamma();
    const double phi = params.phi();

    HwResult r;
    r.fitted.resize(n);
    r.level.resize(n);
    r.trend.resize(n);

    std::vector<double> season;
    r.level[0] = series[0];
    if (seasonal) {
        double trend0 = 0.0;
        for (std::size_t i = 0; i < season_len; ++i) trend0 += series[season_len + i] - series[i];
        r.trend[0] = trend0 / static_cast<double>(season_len * season_len);
        double mean = 0.0;
        for (std::size_t i = 0; i < season_len; ++i) mean += series[i];
        mean /= static_cast<double>(season_len);
        season.resize(season_len);
        for (std::size_t i = 0; i < season_len; ++i) season[i] = series[i] - mean;
    } else {
        r.trend[0] = series[1] - series[0];
    }
    r.fitted[0] = series[0];

    for (std::size_t t = 1; t < n; ++t) {
        const double c_old = seasonal ? season[t % season_len] : 0.0;
        const double s_prev = r.level[t - 1];
        const double b_prev = r.trend[t - 1];
        r.fitted[t] = s_prev + phi * b_prev + c_old;
        r.level[t] = alpha * (series[t] - c_old) + (1.0 - alpha) * (s_prev + phi * b_prev);
        r.trend[t] = beta * (r.level[t] - s_prev) + (1.0 - beta) * phi * b_prev;
        if (seasonal) season[t % season_len] = gamma * (series[t] - r.level[t]) + (1.0 - gamma) * c_old;
    }

    r.state = HwState{r.level.back(), r.trend.back(), std::move(season), n - 1};
    r.forecast.resize(params.horizon());
    for (std::size_t m = 1; m <= params.horizon(); ++m) r.forecast[m - 1] = r.state.forecast(m, phi);
    return r;
}

std::vector<double> difference(std::span<const double> series) {
    std::vector<double> out;
    if (series.size() < 2) return out;
    out.reserve(series.size() - 1);
    for (std::size_t t = 1; t < series.size(); ++t) out.push_back(series[t] - series[t - 1]);
    return out;
}

}  // namespace flowcast::analysis
