#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string_view>
#include <vector>

#include "flowcast/models/serialize.hpp"

namespace flowcast::models {

enum class InfoCriterion { aic, bic, hqic };

InfoCriterion parse_criterion(std::string_view name);
std::string_view to_string(InfoCriterion ic);

/// Fitted VAR(p): Y_t = c + sum_j A_j Y_{t-j} + e_t.
struct VarModel {
    std::size_t k = 0;
    std::size_t p = 0;
    Eigen::VectorXd c;
    std::vector<Eigen::MatrixXd> a;  ///< a[j] multiplies Y_{t-j-1}
    Eigen::MatrixXd sigma;           ///< residual covariance, degrees-of-freedom adjusted
    InfoCriterion ic_used = InfoCriterion::hqic;
    std::vector<double> ic_values;   ///< criterion for p = 1..maxlags on the common sample

    void write(ByteWriter& w) const;
    static VarModel read(ByteReader& r);
};

/**
 * Fits VAR models of order 1..maxlags on the common sample (the first
 * `maxlags` rows are held back for every order), keeps the order with the
 * lowest criterion and refits it on all usable rows.
 *
 * `data` holds one observation per row and one series per column.
 */
VarModel var_fit(const Eigen::MatrixXd& data, std::size_t maxlags, InfoCriterion ic);

/// Iterated one-step forecasts from the last p rows of `history`.
Eigen::MatrixXd var_forecast(const VarModel& model, const Eigen::MatrixXd& history, std::size_t steps);

}  // namespace flowcast::models
