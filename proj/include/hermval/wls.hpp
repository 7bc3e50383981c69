#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace hermval {

struct WlsFit {
  Eigen::VectorXd coef;
  Eigen::MatrixXd cov;        // parameter covariance
  double residual_rel = 0.0;  // |A c - y|_2 / |y|_2
  double condition = 0.0;     // of the weighted design
};

// Weighted least squares with independent errors sigma_i (floored so exact
// rows keep finite weight).
inline WlsFit wls_fit(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& sigma) {
  const int n = int(a.rows());
  const int p = int(a.cols());
  if (n < p) throw std::invalid_argument("wls_fit: underdetermined system");
  const double floor_val = 1e-13 * std::max(1.0, y.cwiseAbs().maxCoeff());
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = 1.0 / std::max(sigma[i], floor_val);
  Eigen::MatrixXd aw = w.asDiagonal() * a;
  Eigen::VectorXd yw = w.asDiagonal() * y;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      aw, Eigen::ComputeThinU | Eigen::ComputeThinV);
  WlsFit fit;
  const auto& sv = svd.singularValues();
  fit.condition = sv[0] / sv[p - 1];
  fit.coef = svd.solve(yw);
  Eigen::MatrixXd vsi = svd.matrixV();
  for (int j = 0; j < p; ++j) vsi.col(j) /= sv[j];
  fit.cov = vsi * vsi.transpose();
  const double yn = y.norm();
  fit.residual_rel = yn > 0 ? (a * fit.coef - y).norm() / yn
                            : (a * fit.coef - y).norm();
  return fit;
}

// Generalized least squares with a full error covariance (used when the
// observations share Monte-Carlo samples).  A small diagonal ridge keeps the
// covariance invertible when some observations are exact.
inline WlsFit gls_fit(const Eigen::MatrixXd& a, const Eigen::VectorXd& y,
                      const Eigen::MatrixXd& ycov) {
  const int n = int(a.rows());
  const int p = int(a.cols());
  if (n < p) throw std::invalid_argument("gls_fit: underdetermined system");
  const double ridge =
      1e-26 * std::max(1.0, y.cwiseAbs().maxCoeff()) *
      std::max(1.0, y.cwiseAbs().maxCoeff());
  Eigen::MatrixXd s = ycov + ridge * Eigen::MatrixXd::Identity(n, n);
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("gls_fit: covariance not positive definite");
  Eigen::MatrixXd aw = llt.matrixL().solve(a);
  Eigen::VectorXd yw = llt.matrixL().solve(y);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      aw, Eigen::ComputeThinU | Eigen::ComputeThinV);
  WlsFit fit;
  const auto& sv = svd.singularValues();
  fit.condition = sv[0] / sv[p - 1];
  fit.coef = svd.solve(yw);
  Eigen::MatrixXd vsi = svd.matrixV();
  for (int j = 0; j < p; ++j) vsi.col(j) /= sv[j];
  fit.cov = vsi * vsi.transpose();
  const double yn = y.norm();
  fit.residual_rel = yn > 0 ? (a * fit.coef - y).norm() / yn
                            : (a * fit.coef - y).norm();
  return fit;
}

}  // namespace hermval
