#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "hermval/estimate.hpp"
#include "hermval/geomlin.hpp"
#include "hermval/random.hpp"

namespace hermval::bodies {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kFacetTol = 1e-9;
constexpr double kDedupTol = 1e-8;
constexpr int kMaxAmbientDim = 6;
constexpr int kMinkowskiPointCap = 10000;

// Face of a polytope: vertex ids plus the linear part of its affine hull in
// ambient coordinates.
struct Face {
  int dim;
  std::vector<int> vertex_ids;
  geomlin::Subspace direction;
  VectorXd ref_point;
};

// Convex polytope in R^d (d <= 6) with exact combinatorics: minimal vertex
// set, facet halfspaces, face lattice with exact face volumes.  Handles
// lower-dimensional input (everything is computed inside the affine hull).
class Polytope {
public:
  // Builds hull, H-representation and face lattice from arbitrary points
  // (rows of `points`).  Duplicates and non-vertices are dropped.
  explicit Polytope(const MatrixXd& points);

  // Direct product construction for axis-aligned boxes; the brute-force
  // facet enumeration is infeasible for 2^d corners once d reaches 5.
  static Polytope axis_box(const VectorXd& lo, const VectorXd& hi);

  int ambient_dim() const { return ambient_dim_; }
  int intrinsic_dim() const { return intrinsic_dim_; }
  bool lower_dimensional() const { return intrinsic_dim_ < ambient_dim_; }

  int num_vertices() const { return int(vertices_.rows()); }
  const MatrixXd& vertices() const { return vertices_; }
  VectorXd vertex(int i) const { return vertices_.row(i).transpose(); }

  // Affine hull: x = origin + basis^T y, basis rows orthonormal.
  const VectorXd& hull_origin() const { return hull_origin_; }
  const MatrixXd& hull_basis() const { return hull_basis_; }
  VectorXd to_local(const VectorXd& x) const {
    return hull_basis_ * (x - hull_origin_);
  }
  VectorXd to_ambient(const VectorXd& y) const {
    return hull_origin_ + hull_basis_.transpose() * y;
  }

  // H-representation inside the affine hull: normals_local * y <= offsets.
  int num_facets() const { return int(facet_normals_local_.rows()); }
  const MatrixXd& facet_normals_local() const { return facet_normals_local_; }
  const VectorXd& facet_offsets_local() const { return facet_offsets_local_; }
  // Same halfspace lifted to ambient coordinates (unit normal, offset).
  std::pair<VectorXd, double> facet_ambient(int i) const;

  // Exact volume inside the affine hull (0-dim convention: vol = 1).
  double volume() const { return volume_; }

  // All j-faces, 0 <= j <= intrinsic_dim.
  std::vector<Face> faces(int j) const;
  int num_faces(int j) const;
  const std::vector<int>& face_vertex_ids(int j, int idx) const;
  double face_volume(int j, int idx) const;
  Face face(int j, int idx) const;

  // Membership up to facet tolerance (ambient point).
  bool contains(const VectorXd& x, double tol = kFacetTol) const;

  std::uint64_t digest() const;

private:
  void build(const MatrixXd& points);
  void build_dim0();
  void build_dim1_select(const MatrixXd& pts, const MatrixXd& local);
  void build_dim2_select(const MatrixXd& pts, const MatrixXd& local);
  void build_general(const MatrixXd& local);
  void finish_lattice_geometry();

  struct FaceRec {
    std::vector<int> ids;          // sorted vertex ids
    std::vector<int> children;     // indices into level dim-1
    double volume = 0.0;
    VectorXd centroid;             // local coords
    MatrixXd basis;                // (dim x r) orthonormal rows, local coords
    VectorXd ref;                  // local coords of one vertex
  };

  int ambient_dim_ = 0;
  int intrinsic_dim_ = 0;
  MatrixXd vertices_;              // V x d ambient
  MatrixXd local_vertices_;        // V x r
  VectorXd hull_origin_;
  MatrixXd hull_basis_;            // r x d
  MatrixXd facet_normals_local_;   // F x r
  VectorXd facet_offsets_local_;   // F
  std::vector<std::vector<FaceRec>> lattice_;  // by dim 0..r
  double volume_ = 0.0;
};

struct Ball {
  VectorXd center;
  double radius;
};

// K + eps * D for a polytope K.
struct ParallelBody {
  Polytope polytope;
  double eps;
};

// Convex body: empty marker, polytope, ball, or outer-parallel body.
class Body {
public:
  static Body empty(int ambient_dim) { return Body(ambient_dim); }
  Body(Polytope p) : ambient_dim_(p.ambient_dim()), v_(std::move(p)) {}
  Body(Ball b) : ambient_dim_(int(b.center.size())) {
    if (b.radius <= 0)
      throw std::invalid_argument("ball radius must be positive");
    v_ = std::move(b);
  }
  Body(ParallelBody pb) : ambient_dim_(pb.polytope.ambient_dim()) {
    if (pb.eps < 0)
      throw std::invalid_argument("parallel body eps must be >= 0");
    v_ = std::move(pb);
  }

  int ambient_dim() const { return ambient_dim_; }
  bool is_empty() const { return std::holds_alternative<std::monostate>(v_); }
  const Polytope* polytope() const { return std::get_if<Polytope>(&v_); }
  const Ball* ball() const { return std::get_if<Ball>(&v_); }
  const ParallelBody* parallel() const { return std::get_if<ParallelBody>(&v_); }

  // Supporting functional h_K(u); u need not be unit.
  double support(const VectorXd& u) const;

  std::pair<VectorXd, VectorXd> bounding_box() const;

  Body translate(const VectorXd& t) const;
  Body dilate(double lambda) const;
  // Image under an orthogonal map (rows act on the left: x -> M x).
  Body orthogonal_image(const MatrixXd& m) const;

  std::uint64_t digest() const;

private:
  explicit Body(int ambient_dim) : ambient_dim_(ambient_dim) {}

  int ambient_dim_;
  std::variant<std::monostate, Polytope, Ball, ParallelBody> v_;
};

// --- Operations -------------------------------------------------------------

// Convex hull with H-representation; named after the operation it performs.
inline Polytope hull_hrep(const MatrixXd& points) { return Polytope(points); }

// Orthogonal projection onto E, returned in E-frame coordinates.
Body project(const Body& k, const geomlin::Subspace& e);

// K intersected with an affine flat, in flat coordinates; may be empty.
Body section(const Body& k, const geomlin::AffineFlat& flat);

// External angle of face F: fraction of Haar unit vectors in the ambient
// complement of the face direction whose support set is exactly F.  Exact for
// the polytope itself (1) and its facets (1/2).
Estimate external_angle(const Polytope& p, const Face& f, RandomStream rng,
                        long long n);

// Euclidean distance to the polytope (conditional-gradient projection).
double distance(const Polytope& p, const VectorXd& x);

// Distance from x to conv(rows of verts); used by the vertex filter too.
double dist_to_hull(const MatrixXd& verts, const VectorXd& x);

// Decides dist(conv(verts), x) <= eps from the conditional-gradient bracket;
// much cheaper than converging the distance itself.
bool hull_dist_leq(const MatrixXd& verts, const VectorXd& x, double eps);

Polytope minkowski_sum_polytopes(const Polytope& p, const Polytope& q);

// --- Stock bodies (tests, probes, fit families) -----------------------------

Polytope make_box(const VectorXd& lo, const VectorXd& hi);
Polytope make_cube(int d, double side = 1.0);
Polytope make_simplex(int d);
Polytope make_cross_polytope(int d, double scale = 1.0);
Polytope make_segment(const VectorXd& a, const VectorXd& b);
// Unit k-cube spanned by the frame of E, based at the origin.
Polytope make_cube_in_subspace(const geomlin::Subspace& e);
Polytope make_random_hull(int d, int npoints, RandomStream& rng,
                          double scale = 1.0);

}  // namespace hermval::bodies
