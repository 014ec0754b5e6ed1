#include "ols.hpp"

namespace flowcast::detail {

std::optional<OlsFit> ols(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    if (x.rows() < x.cols()) return std::nullopt;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    // Scale-aware rank threshold; columns that are exact combinations of others
    // come out at rounding level.
    qr.setThreshold(1e-10);
    if (qr.rank() < x.cols()) return std::nullopt;
    OlsFit fit;
    fit.coef = qr.solve(y);
    fit.residuals = y - x * fit.coef;
    const Eigen::MatrixXd xtx = x.transpose() * x;
    fit.xtx_inv = xtx.ldlt().solve(Eigen::MatrixXd::Identity(x.cols(), x.cols()));
    return fit;
}

}  // namespace flowcast::detail
