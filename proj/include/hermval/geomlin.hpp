#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <stdexcept>
#include <vector>

#include "hermval/digest.hpp"
#include "hermval/random.hpp"

namespace hermval::bodies {
class Body;
}

namespace hermval::geomlin {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kFrameTol = 1e-10;

// Linear k-plane in R^d carried by an orthonormal frame (rows of `frame`).
// Frames are re-orthonormalized on construction rather than rejected.
class Subspace {
public:
  // Zero-dimensional subspace of R^d.
  explicit Subspace(int ambient_dim);

  // Rows of `rows` span the subspace; they are orthonormalized (QR with sign
  // fixing).  Throws if the rows are numerically rank deficient.
  static Subspace from_rows(const MatrixXd& rows, int ambient_dim);

  // Trusted constructor: rows are already orthonormal to kFrameTol.
  static Subspace trusted(MatrixXd rows, int ambient_dim) {
    const int k = int(rows.rows());
    return Subspace(ambient_dim, k, std::move(rows));
  }

  int ambient_dim() const { return ambient_dim_; }
  int dim() const { return dim_; }
  const MatrixXd& frame() const { return frame_; }

  // Coordinates of v in the frame.
  VectorXd coords(const VectorXd& v) const { return frame_ * v; }
  // Ambient point from frame coordinates.
  VectorXd embed(const VectorXd& c) const { return frame_.transpose() * c; }
  // Orthogonal projection of v onto the subspace, in ambient coordinates.
  VectorXd project(const VectorXd& v) const {
    return frame_.transpose() * (frame_ * v);
  }

  Subspace orthogonal_complement() const;

  // Max |<b_i,b_j> - delta_ij| over the frame.
  double orthonormality_defect() const;

  std::uint64_t digest() const {
    std::uint64_t h = fnv1a(&ambient_dim_, sizeof(ambient_dim_));
    h = fnv1a(&dim_, sizeof(dim_), h);
    return fnv1a_doubles(frame_.data(), std::size_t(frame_.size()), h);
  }

private:
  Subspace(int ambient_dim, int dim, MatrixXd frame)
      : ambient_dim_(ambient_dim), dim_(dim), frame_(std::move(frame)) {}

  int ambient_dim_;
  int dim_;
  MatrixXd frame_;  // dim x ambient, orthonormal rows
};

// Affine flat: direction subspace plus canonical offset (offset is projected
// orthogonal to the direction on construction).  `weight` carries the
// importance weight of box-sampled offsets.
struct AffineFlat {
  Subspace direction;
  VectorXd offset;
  double weight = 1.0;

  AffineFlat(Subspace dir, VectorXd off, double w = 1.0)
      : direction(std::move(dir)), offset(std::move(off)), weight(w) {
    offset -= direction.project(offset);
  }

  VectorXd point_at(const VectorXd& coords) const {
    return offset + direction.embed(coords);
  }
};

// Fixed complex structure on R^{2n} = R^n_x (+) R^n_y, J(x,y) = (-y,x).
struct ComplexStructure {
  int n;

  explicit ComplexStructure(int n_) : n(n_) {}

  int real_dim() const { return 2 * n; }

  VectorXd apply(const VectorXd& v) const {
    VectorXd w(2 * n);
    w.head(n) = -v.tail(n);
    w.tail(n) = v.head(n);
    return w;
  }

  MatrixXd matrix() const {
    MatrixXd m = MatrixXd::Zero(2 * n, 2 * n);
    m.topRightCorner(n, n) = -MatrixXd::Identity(n, n);
    m.bottomLeftCorner(n, n) = MatrixXd::Identity(n, n);
    return m;
  }

  // Realification of a complex row vector z = x + iy as (x, y).
  VectorXd realify(const Eigen::VectorXcd& z) const {
    VectorXd v(2 * n);
    v.head(n) = z.real();
    v.tail(n) = z.imag();
    return v;
  }

  // Max deviation of J*frame_row from the span of E.
  double invariance_defect(const Subspace& E) const;
};

// --- Haar samplers ----------------------------------------------------------

// Haar subspace on Gr_k(R^d): orthonormalized Gaussian rows.
Subspace sample_subspace(int k, int d, RandomStream& rng);

// Haar J-invariant real 2l-plane in R^{2n}.  The frame is in complex block
// order: rows 1..l realify a complex orthonormal basis xi_t, rows l+1..2l
// realify i*xi_t, so in-frame coordinates inherit the standard block J.
Subspace sample_complex_subspace(int l, const ComplexStructure& J,
                                 RandomStream& rng);

// Haar complex orthonormal l-frame in C^n (rows).
MatrixXcd sample_complex_frame(int l, int n, RandomStream& rng);

// Haar Lagrangian n-plane: U * R^n_x with U Haar-unitary.
Subspace sample_lagrangian(const ComplexStructure& J, RandomStream& rng);

// Haar-unitary n x n matrix (Gaussian QR with phase fixing).
MatrixXcd haar_unitary(int n, RandomStream& rng);

// Complex orthonormal completion: given l orthonormal complex rows in C^n,
// returns n-l rows completing them to a unitary basis.
MatrixXcd complex_complement(const MatrixXcd& rows, int n);

// J-invariant realified subspace from complex orthonormal rows (block order).
Subspace realify_complex_frame(const MatrixXcd& rows,
                               const ComplexStructure& J);

// Affine flat with direction sampler^perp and offset uniform in the bounding
// box of the projection of K onto the sampled subspace; `weight` is the box
// volume.
AffineFlat sample_affine_flat(
    const std::function<Subspace(RandomStream&)>& direction_sampler,
    const bodies::Body& K, RandomStream& rng);

// --- Angles and special charts ---------------------------------------------

// |cos(E,F)| = vol of the projection of a unit cube of E onto F; complement
// rule applied when dim E > dim F.  Always in [0,1].
double cosine_angle(const Subspace& E, const Subspace& F);

// Principal angle cosines between equal-dimensional subspaces (descending).
VectorXd principal_cosines(const Subspace& E, const Subspace& F);

// Oriented 2-plane in R^4 from a pair of points on the radius-1/2 sphere
// centered at (1/2,0,0) (the S^2 x S^2 chart of Gr2(R^4)); ((1,0,0),(1,0,0))
// maps to the first complex axis.
Subspace gr24_plane(const Eigen::Vector3d& t1, const Eigen::Vector3d& t2);

// Highest-weight function det[A(k) A(k)^t] of the SO(2n) representation on
// functions of real k-planes in R^{2n}; real and >= 0 on complex subspaces,
// 1 on span_C{e1,e3,...}.
std::complex<double> strichartz_hwv(const Subspace& E,
                                    const ComplexStructure& J);

// The determinant det[A(k)] itself (real on complex subspaces).
std::complex<double> strichartz_det_A(const Subspace& E,
                                      const ComplexStructure& J);

}  // namespace hermval::geomlin
