#include "flowcast/models/var.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "../ols.hpp"
#include "flowcast/error.hpp"

namespace flowcast::models {
namespace {

// Rows t = first .. T-1; regressors [1, Y_{t-1}, ..., Y_{t-p}].
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> lagged_design(const Eigen::MatrixXd& data, std::size_t p,
                                                          std::size_t first) {
    const auto t_total = static_cast<std::size_t>(data.rows());
    const auto k = static_cast<Eigen::Index>(data.cols());
    const auto rows = static_cast<Eigen::Index>(t_total - first);
    Eigen::MatrixXd x(rows, 1 + k * static_cast<Eigen::Index>(p));
    Eigen::MatrixXd y(rows, k);
    for (std::size_t t = first; t < t_total; ++t) {
        const auto r = static_cast<Eigen::Index>(t - first);
        x(r, 0) = 1.0;
        for (std::size_t j = 1; j <= p; ++j) {
            x.block(r, 1 + k * static_cast<Eigen::Index>(j - 1), 1, k) =
                data.row(static_cast<Eigen::Index>(t - j));
        }
        y.row(r) = data.row(static_cast<Eigen::Index>(t));
    }
    return {std::move(x), std::move(y)};
}

double criterion(InfoCriterion ic, double log_det, double free_params, double nobs) {
    switch (ic) {
        case InfoCriterion::aic: return log_det + 2.0 * free_params / nobs;
        case InfoCriterion::bic: return log_det + std::log(nobs) * free_params / nobs;
        case InfoCriterion::hqic: return log_det + 2.0 * std::log(std::log(nobs)) * free_params / nobs;
    }
    return log_det;
}

double log_det(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

InfoCriterion parse_criterion(std::string_view name) {
    if (name == "aic") return InfoCriterion::aic;
    if (name == "bic") return InfoCriterion::bic;
    if (name == "hqic") return InfoCriterion::hqic;
    throw Error(ErrorCode::bad_parameter, "information criterion must be aic, bic or hqic");
}

std::string_view to_string(InfoCriterion ic) {
    switch (ic) {
        case InfoCriterion::aic: return "aic";
        case InfoCriterion::bic: return "bic";
        case InfoCriterion::hqic: return "hqic";
    }
    return "?";
}

VarModel var_fit(const Eigen::MatrixXd& data, std::size_t maxlags, InfoCriterion ic) {
    if (maxlags < 1) throw Error(ErrorCode::bad_parameter, "maxlags must be at least 1");
    const auto t_total = static_cast<std::size_t>(data.rows());
    const auto k = static_cast<std::size_t>(data.cols());
    if (k == 0) throw Error(ErrorCode::empty_input, "no series");
    if (t_total <= maxlags * k + 10) {
        throw Error(ErrorCode::insufficient_data, "var with maxlags=" + std::to_string(maxlags) + " needs more than " +
                                                      std::to_string(maxlags * k + 10) + " rows, have " +
                                                      std::to_string(t_total));
    }

    VarModel model;
    model.k = k;
    model.ic_used = ic;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_p = 1;
    for (std::size_t p = 1; p <= maxlags; ++p) {
        auto [x, y] = lagged_design(data, p, maxlags);
        auto fit = detail::ols(x, y);
        if (!fit) throw Error(ErrorCode::collinear_data, "lagged regressors are collinear at p=" + std::to_string(p));
        const double nobs = static_cast<double>(y.rows());
        const Eigen::MatrixXd sigma_mle = fit->residuals.transpose() * fit->residuals / nobs;
        const double free_params = static_cast<double>(p * k * k + k);
        const double value = criterion(ic, log_det(sigma_mle), free_params, nobs);
        model.ic_values.push_back(value);
        if (value < best) {
            best = value;
            best_p = p;
        }
    }

    auto [x, y] = lagged_design(data, best_p, best_p);
    auto fit = detail::ols(x, y);
    if (!fit) throw Error(ErrorCode::collinear_data, "lagged regressors are collinear");
    model.p = best_p;
    model.c = fit->coef.row(0).transpose();
    const auto kk = static_cast<Eigen::Index>(k);
    for (std::size_t j = 0; j < best_p; ++j) {
        // Rows of coef for lag j are the regressors, columns the equations.
        model.a.push_back(fit->coef.block(1 + kk * static_cast<Eigen::Index>(j), 0, kk, kk).transpose());
    }
    const double dof = static_cast<double>(y.rows()) - static_cast<double>(k * best_p + 1);
    model.sigma = fit->residuals.transpose() * fit->residuals / dof;
    return model;
}

Eigen::MatrixXd var_forecast(const VarModel& model, const Eigen::MatrixXd& history, std::size_t steps) {
    if (model.p == 0) throw Error(ErrorCode::unfitted, "var model has no coefficients");
    if (static_cast<std::size_t>(history.cols()) != model.k) {
        throw Error(ErrorCode::bad_dimension, "history has the wrong number of series");
    }
    if (static_cast<std::size_t>(history.rows()) < model.p) {
        throw Error(ErrorCode::insufficient_history, "need " + std::to_string(model.p) + " rows of history");
    }
    const auto kk = static_cast<Eigen::Index>(model.k);
    const auto p = static_cast<Eigen::Index>(model.p);
    Eigen::MatrixXd window(p + static_cast<Eigen::Index>(steps), kk);
    window.topRows(p) = history.bottomRows(p);
    for (Eigen::Index s = 0; s < static_cast<Eigen::Index>(steps); ++s) {
        Eigen::VectorXd next = model.c;
        for (Eigen::Index j = 0; j < p; ++j) {
            next += model.a[static_cast<std::size_t>(j)] * window.row(p + s - 1 - j).transpose();
        }
        window.row(p + s) = next.transpose();
    }
    return window.bottomRows(static_cast<Eigen::Index>(steps));
}

void VarModel::write(ByteWriter& w) const {
    w.begin_section(tag("VARP"));
    w.u64(k);
    w.u64(p);
    w.u8(static_cast<std::uint8_t>(ic_used));
    w.f64s(std::span<const double>(c.data(), static_cast<std::size_t>(c.size())));
    for (const auto& m : a) w.f64s(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
    w.f64s(std::span<const double>(sigma.data(), static_cast<std::size_t>(sigma.size())));
    w.f64s(ic_values);
    w.end_section();
}

VarModel VarModel::read(ByteReader& r) {
    auto s = r.section(tag("VARP"));
    VarModel m;
    m.k = s.u64();
    m.p = s.u64();
    m.ic_used = static_cast<InfoCriterion>(s.u8());
    const auto kk = static_cast<Eigen::Index>(m.k);
    auto matrix = [&](Eigen::Index rows, Eigen::Index cols) {
        auto values = s.f64s();
        if (values.size() != static_cast<std::size_t>(rows * cols)) {
            throw Error(ErrorCode::bad_format, "var matrix size mismatch");
        }
        return Eigen::MatrixXd(Eigen::Map<Eigen::MatrixXd>(values.data(), rows, cols));
    };
    m.c = matrix(kk, 1);
    for (std::size_t j = 0; j < m.p; ++j) m.a.push_back(matrix(kk, kk));
    m.sigma = matrix(kk, kk);
    m.ic_values = s.f64s();
    return m;
}

}  // namespace flowcast::models
