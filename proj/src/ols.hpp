#pragma once

#include <Eigen/Dense>
#include <optional>

namespace flowcast::detail {

struct OlsFit {
    Eigen::MatrixXd coef;       ///< p x k
    Eigen::MatrixXd residuals;  ///< n x k
    Eigen::MatrixXd xtx_inv;    ///< p x p
};

/// Least squares for every column of `y` at once. Empty when `x` is rank deficient.
std::optional<OlsFit> ols(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

}  // namespace flowcast::detail
