#include "hermval/geomlin.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <cmath>

namespace hermval::geomlin {

namespace {

// Thin QR orthonormalization of the rows of `rows`, diagonal signs fixed
// positive.  Throws on numerical rank loss.
MatrixXd orthonormalize_rows(const MatrixXd& rows) {
  const int k = int(rows.rows());
  const int d = int(rows.cols());
  if (k == 0) return MatrixXd(0, d);
  Eigen::HouseholderQR<MatrixXd> qr(rows.transpose());
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(d, k);
  MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  const double scale = std::max(1.0, rows.cwiseAbs().maxCoeff());
  for (int j = 0; j < k; ++j) {
    if (std::abs(r(j, j)) < 1e-12 * scale)
      throw std::runtime_error("subspace frame is numerically rank deficient");
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q.transpose();
}

MatrixXcd orthonormalize_rows_complex(const MatrixXcd& rows) {
  const int k = int(rows.rows());
  const int d = int(rows.cols());
  if (k == 0) return MatrixXcd(0, d);
  Eigen::HouseholderQR<MatrixXcd> qr(rows.transpose());
  MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(d, k);
  MatrixXcd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (int j = 0; j < k; ++j) {
    const std::complex<double> rjj = r(j, j);
    if (std::abs(rjj) < 1e-12)
      throw std::runtime_error("complex frame is numerically rank deficient");
    q.col(j) *= std::conj(rjj) / std::abs(rjj);
  }
  return q.transpose();
}

}  // namespace

Subspace::Subspace(int ambient_dim)
    : ambient_dim_(ambient_dim), dim_(0), frame_(0, ambient_dim) {}

Subspace Subspace::from_rows(const MatrixXd& rows, int ambient_dim) {
  if (int(rows.cols()) != ambient_dim)
    throw std::invalid_argument("frame row length does not match ambient_dim");
  if (int(rows.rows()) > ambient_dim)
    throw std::invalid_argument("subspace dimension exceeds ambient dimension");
  return Subspace(ambient_dim, int(rows.rows()), orthonormalize_rows(rows));
}

Subspace Subspace::orthogonal_complement() const {
  const int d = ambient_dim_;
  const int k = dim_;
  if (k == 0) return trusted(MatrixXd::Identity(d, d), d);
  if (k == d) return Subspace(d);
  Eigen::HouseholderQR<MatrixXd> qr(frame_.transpose());
  MatrixXd q = qr.householderQ();
  return trusted(q.rightCols(d - k).transpose(), d);
}

double Subspace::orthonormality_defect() const {
  if (dim_ == 0) return 0.0;
  MatrixXd g = frame_ * frame_.transpose();
  return (g - MatrixXd::Identity(dim_, dim_)).cwiseAbs().maxCoeff();
}

double ComplexStructure::invariance_defect(const Subspace& E) const {
  double worst = 0.0;
  for (int i = 0; i < E.dim(); ++i) {
    VectorXd w = apply(E.frame().row(i).transpose());
    worst = std::max(worst, (w - E.project(w)).cwiseAbs().maxCoeff());
  }
  return worst;
}

Subspace sample_subspace(int k, int d, RandomStream& rng) {
  if (k < 0 || k > d)
    throw std::invalid_argument("sample_subspace: need 0 <= k <= d");
  if (k == 0) return Subspace(d);
  MatrixXd g(k, d);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.gaussian();
  return Subspace::trusted(orthonormalize_rows(g), d);
}

MatrixXcd haar_unitary(int n, RandomStream& rng) {
  MatrixXcd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      g(i, j) = std::complex<double>(rng.gaussian(), rng.gaussian());
  return orthonormalize_rows_complex(g).transpose();
}

Subspace realify_complex_frame(const MatrixXcd& rows,
                               const ComplexStructure& J) {
  const int l = int(rows.rows());
  MatrixXd f(2 * l, 2 * J.n);
  for (int t = 0; t < l; ++t) {
    Eigen::VectorXcd z = rows.row(t).transpose();
    f.row(t) = J.realify(z).transpose();
    f.row(l + t) =
        J.realify((std::complex<double>(0, 1) * z).eval()).transpose();
  }
  return Subspace::trusted(std::move(f), 2 * J.n);
}

MatrixXcd sample_complex_frame(int l, int n, RandomStream& rng) {
  if (l < 0 || l > n)
    throw std::invalid_argument("sample_complex_frame: need 0 <= l <= n");
  MatrixXcd g(l, n);
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < n; ++j)
      g(i, j) = std::complex<double>(rng.gaussian(), rng.gaussian());
  return orthonormalize_rows_complex(g);
}

Subspace sample_complex_subspace(int l, const ComplexStructure& J,
                                 RandomStream& rng) {
  if (l < 0 || l > J.n)
    throw std::invalid_argument("sample_complex_subspace: need 0 <= l <= n");
  if (l == 0) return Subspace(2 * J.n);
  return realify_complex_frame(sample_complex_frame(l, J.n, rng), J);
}

Subspace sample_lagrangian(const ComplexStructure& J, RandomStream& rng) {
  const int n = J.n;
  MatrixXcd u = haar_unitary(n, rng);
  MatrixXd f(n, 2 * n);
  for (int j = 0; j < n; ++j)
    f.row(j) = J.realify(u.col(j)).transpose();
  return Subspace::trusted(std::move(f), 2 * n);
}

MatrixXcd complex_complement(const MatrixXcd& rows, int n) {
  const int l = int(rows.rows());
  if (l == 0) return orthonormalize_rows_complex(MatrixXcd::Identity(n, n));
  if (l == n) return MatrixXcd(0, n);
  Eigen::HouseholderQR<MatrixXcd> qr(rows.transpose());
  MatrixXcd q = qr.householderQ();
  return q.rightCols(n - l).transpose();
}

double cosine_angle(const Subspace& E, const Subspace& F) {
  if (E.ambient_dim() != F.ambient_dim())
    throw std::invalid_argument("cosine_angle: ambient dimensions differ");
  if (E.dim() > F.dim())
    return cosine_angle(E.orthogonal_complement(), F.orthogonal_complement());
  if (E.dim() == 0) return 1.0;
  MatrixXd m = E.frame() * F.frame().transpose();
  double det = (m * m.transpose()).determinant();
  det = std::clamp(det, 0.0, 1.0);
  return std::sqrt(det);
}

VectorXd principal_cosines(const Subspace& E, const Subspace& F) {
  MatrixXd m = E.frame() * F.frame().transpose();
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues();
}

namespace {

struct Quat {
  double w = 0, x = 0, y = 0, z = 0;

  Quat operator*(const Quat& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
  }
  Quat conj() const { return {w, -x, -y, -z}; }
  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quat normalized() const {
    const double n = norm();
    return {w / n, x / n, y / n, z / n};
  }
};

// Unit quaternion with q i conj(q) = the pure unit quaternion u.
Quat lift_to_su2(const Eigen::Vector3d& u) {
  if (u.x() < -1.0 + 1e-12) return Quat{0, 0, 1, 0};  // antipode of i: use j
  // 1 - (u.x i + u.y j + u.z k) * i = (1 + u.x) - u.z j + u.y k
  return Quat{1.0 + u.x(), 0.0, -u.z(), u.y()}.normalized();
}

// Quaternion w + xi + yj + zk as a point of R^4 = R^2_x (+) R^2_y under the
// identification H = C (+) jC, (z1, z2) = (w + i*y1-part...) -- concretely
// 1 -> e1, i -> Je1, j -> e2, k -> -Je2.
VectorXd quat_to_r4(const Quat& q) {
  VectorXd v(4);
  v << q.w, q.y, q.x, -q.z;
  return v;
}

}  // namespace

Subspace gr24_plane(const Eigen::Vector3d& t1, const Eigen::Vector3d& t2) {
  const Eigen::Vector3d center(0.5, 0.0, 0.0);
  for (const auto* t : {&t1, &t2}) {
    if (std::abs((*t - center).norm() - 0.5) > 1e-9)
      throw std::invalid_argument(
          "gr24_plane: point not on the radius-1/2 sphere centered at "
          "(1/2,0,0)");
  }
  const Quat q1 = lift_to_su2(((t1 - center) * 2.0).normalized());
  const Quat q2 = lift_to_su2(((t2 - center) * 2.0).normalized());
  const Quat q2i = q2.conj();
  const Quat u = q1 * q2i;
  const Quat v = q1 * Quat{0, 1, 0, 0} * q2i;
  MatrixXd rows(2, 4);
  rows.row(0) = quat_to_r4(u).transpose();
  rows.row(1) = quat_to_r4(v).transpose();
  return Subspace::from_rows(rows, 4);
}

std::complex<double> strichartz_det_A(const Subspace& E,
                                      const ComplexStructure& J) {
  const int k = E.dim();
  const int n = J.n;
  if (k % 2 != 0 || k == 0 || k > n)
    throw std::invalid_argument("strichartz_hwv: need dim E even and <= n");
  if (E.ambient_dim() != 2 * n)
    throw std::invalid_argument("strichartz_hwv: ambient dimension mismatch");
  // Coordinates of the frame vectors in the alternating-sign basis
  // e_1..e_k, +i e_1, -i e_2, ..., -i e_k; rows are paired into A.
  MatrixXd c(2 * k, k);
  for (int t = 0; t < k; ++t) {
    const VectorXd v = E.frame().row(t).transpose();
    for (int j = 0; j < k; ++j) {
      c(j, t) = v[j];
      c(k + j, t) = (j % 2 == 0 ? 1.0 : -1.0) * v[n + j];
    }
  }
  MatrixXcd a(k, k);
  for (int j = 0; j < k; ++j)
    for (int t = 0; t < k; ++t)
      a(j, t) = std::complex<double>(c(2 * j, t), c(2 * j + 1, t));
  return a.determinant();
}

std::complex<double> strichartz_hwv(const Subspace& E,
                                    const ComplexStructure& J) {
  const std::complex<double> d = strichartz_det_A(E, J);
  return d * d;
}

}  // namespace hermval::geomlin
