#include "hermval/bodies.hpp"

#include <Eigen/LU>
#include "hermval/parallel.hpp"
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

namespace hermval::bodies {

namespace {

// Iterates all k-subsets of {0..n-1}.
class Combinations {
public:
  Combinations(int n, int k) : n_(n), k_(k), idx_(k) {
    std::iota(idx_.begin(), idx_.end(), 0);
    done_ = k > n;
  }
  bool done() const { return done_; }
  const std::vector<int>& current() const { return idx_; }
  void next() {
    int i = k_ - 1;
    while (i >= 0 && idx_[i] == n_ - k_ + i) --i;
    if (i < 0) {
      done_ = true;
      return;
    }
    ++idx_[i];
    for (int j = i + 1; j < k_; ++j) idx_[j] = idx_[j - 1] + 1;
  }

private:
  int n_, k_;
  std::vector<int> idx_;
  bool done_;
};

MatrixXd dedup_points(const MatrixXd& pts, double tol) {
  std::vector<int> keep;
  for (int i = 0; i < pts.rows(); ++i) {
    bool dup = false;
    for (int j : keep) {
      if ((pts.row(i) - pts.row(j)).cwiseAbs().maxCoeff() <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) keep.push_back(i);
  }
  MatrixXd out(int(keep.size()), pts.cols());
  for (int i = 0; i < int(keep.size()); ++i) out.row(i) = pts.row(keep[i]);
  return out;
}

int affine_rank(const MatrixXd& pts, const std::vector<int>& ids,
                double tol) {
  if (ids.size() <= 1) return 0;
  MatrixXd m(int(ids.size()) - 1, pts.cols());
  for (std::size_t i = 1; i < ids.size(); ++i)
    m.row(int(i) - 1) = pts.row(ids[i]) - pts.row(ids[0]);
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > tol * std::max(1.0, sv[0])) ++r;
  return r;
}

MatrixXd orthonormal_rows_spanning(const MatrixXd& pts,
                                   const std::vector<int>& ids, int rank) {
  MatrixXd m(int(ids.size()) - 1, pts.cols());
  for (std::size_t i = 1; i < ids.size(); ++i)
    m.row(int(i) - 1) = pts.row(ids[i]) - pts.row(ids[0]);
  Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinV);
  return svd.matrixV().leftCols(rank).transpose();
}

}  // namespace

// --- Frank-Wolfe projection onto a vertex hull ------------------------------

namespace {

// Wolfe duality gap of a feasible point: zero exactly at the projection.
double hull_gap(const MatrixXd& verts, const VectorXd& x, const VectorXd& y) {
  const VectorXd g = y - x;
  double smin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < verts.rows(); ++i)
    smin = std::min(smin, g.dot(verts.row(i).transpose()));
  return g.dot(y) - smin;
}

}  // namespace

namespace {

// Weights of the projection of x onto the affine hull of verts[S]; false if
// the KKT system is singular (affinely dependent corral).
bool affine_weights(const MatrixXd& verts, const VectorXd& x,
                    const std::vector<int>& s, VectorXd* mu) {
  const int m = int(s.size());
  MatrixXd kkt = MatrixXd::Zero(m + 1, m + 1);
  VectorXd rhs(m + 1);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j)
      kkt(i, j) = verts.row(s[i]).dot(verts.row(s[j]));
    kkt(i, m) = 1.0;
    kkt(m, i) = 1.0;
    rhs[i] = verts.row(s[i]).dot(x);
  }
  rhs[m] = 1.0;
  Eigen::FullPivLU<MatrixXd> lu(kkt);
  if (!lu.isInvertible()) return false;
  *mu = lu.solve(rhs).head(m);
  return true;
}

}  // namespace

// Wolfe's min-norm-point scheme: grow a corral with the most violating
// vertex, project exactly onto its affine hull, and walk back dropping
// vertices whose weights would go negative.  Finite and exact modulo
// roundoff, which conditional-gradient zigzag is not on clustered inputs.
double dist_to_hull(const MatrixXd& verts, const VectorXd& x) {
  const int nv = int(verts.rows());
  if (nv == 0) throw std::invalid_argument("dist_to_hull: empty vertex set");
  if (nv == 1) return (verts.row(0).transpose() - x).norm();

  int best = 0;
  double bestd = (verts.row(0).transpose() - x).squaredNorm();
  for (int i = 1; i < nv; ++i) {
    const double d = (verts.row(i).transpose() - x).squaredNorm();
    if (d < bestd) {
      bestd = d;
      best = i;
    }
  }
  std::vector<int> corral = {best};
  VectorXd lam = VectorXd::Ones(1);
  VectorXd y = verts.row(best).transpose();

  const double scale =
      1.0 + x.squaredNorm() + verts.rowwise().squaredNorm().maxCoeff();
  const int max_major = 10 * nv + 200;

  for (int major = 0; major < max_major; ++major) {
    const VectorXd g = y - x;
    int s = 0;
    double smin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nv; ++i) {
      const double dot = g.dot(verts.row(i).transpose());
      if (dot < smin) {
        smin = dot;
        s = i;
      }
    }
    if (g.dot(y) - smin <= 1e-10 * scale) return (y - x).norm();
    if (std::find(corral.begin(), corral.end(), s) != corral.end())
      return (y - x).norm();  // numerically stalled at optimum
    corral.push_back(s);
    lam.conservativeResize(lam.size() + 1);
    lam[lam.size() - 1] = 0.0;

    for (int minor = 0; minor < nv + 4; ++minor) {
      VectorXd mu;
      if (!affine_weights(verts, x, corral, &mu)) {
        // Dependent corral: drop the lightest member other than the newest.
        int drop = 0;
        for (int i = 1; i + 1 < int(corral.size()); ++i)
          if (lam[i] < lam[drop]) drop = i;
        corral.erase(corral.begin() + drop);
        VectorXd l2(corral.size());
        int k = 0;
        for (int i = 0; i < lam.size(); ++i)
          if (i != drop) l2[k++] = lam[i];
        lam = l2;
        continue;
      }
      if (mu.minCoeff() >= -1e-12) {
        lam = mu;
        break;
      }
      // Walk from lam toward mu until the first weight vanishes.
      double theta = 1.0;
      for (int i = 0; i < mu.size(); ++i)
        if (mu[i] < 1e-14 && lam[i] > mu[i])
          theta = std::min(theta, lam[i] / (lam[i] - mu[i]));
      lam = theta * mu + (1.0 - theta) * lam;
      std::vector<int> next;
      std::vector<double> next_lam;
      for (int i = 0; i < lam.size(); ++i) {
        if (lam[i] > 1e-14) {
          next.push_back(corral[i]);
          next_lam.push_back(lam[i]);
        }
      }
      if (next.empty()) {
        next.push_back(corral[0]);
        next_lam.push_back(1.0);
      }
      corral = std::move(next);
      lam = Eigen::Map<VectorXd>(next_lam.data(), long(next_lam.size()));
    }
    y.setZero();
    for (int i = 0; i < int(corral.size()); ++i)
      y += lam[i] * verts.row(corral[i]).transpose();
  }
  // Certify what we have; desk-scale inputs should never get here.
  if (hull_gap(verts, x, y) > 1e-6 * scale)
    throw std::runtime_error("dist_to_hull: projection did not converge");
  return (y - x).norm();
}

double distance(const Polytope& p, const VectorXd& x) {
  if (p.contains(x)) return 0.0;
  return dist_to_hull(p.vertices(), x);
}

bool hull_dist_leq(const MatrixXd& verts, const VectorXd& x, double eps) {
  const int nv = int(verts.rows());
  if (nv == 1) return (verts.row(0).transpose() - x).norm() <= eps;

  int best = 0;
  double bestd = (verts.row(0).transpose() - x).squaredNorm();
  for (int i = 1; i < nv; ++i) {
    const double d = (verts.row(i).transpose() - x).squaredNorm();
    if (d < bestd) {
      bestd = d;
      best = i;
    }
  }
  if (bestd <= eps * eps) return true;

  std::vector<double> lambda(nv, 0.0);
  lambda[best] = 1.0;
  VectorXd y = verts.row(best).transpose();
  const int max_iter = 20000;

  for (int it = 0; it < max_iter; ++it) {
    const double f = (y - x).squaredNorm();
    if (f <= eps * eps) return true;
    const VectorXd g = y - x;
    int s = 0, a = -1;
    double smin = std::numeric_limits<double>::infinity();
    double amax = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < nv; ++i) {
      const double dot = g.dot(verts.row(i).transpose());
      if (dot < smin) {
        smin = dot;
        s = i;
      }
      if (lambda[i] > 0 && dot > amax) {
        amax = dot;
        a = i;
      }
    }
    const double gap = g.dot(y) - smin;
    // f* >= f - 2*gap (gradient of |y-x|^2 is 2(y-x)); reject as soon as
    // the lower bound clears eps.
    if (f - 2.0 * gap > eps * eps) return false;
    const VectorXd d = (verts.row(s) - verts.row(a)).transpose();
    const double dd = d.squaredNorm();
    if (dd <= 0) break;
    double step = -g.dot(d) / dd;
    step = std::clamp(step, 0.0, lambda[a]);
    if (step <= 0) break;
    lambda[s] += step;
    lambda[a] -= step;
    if (lambda[a] < 1e-15) lambda[a] = 0.0;
    y += step * d;
  }
  return dist_to_hull(verts, x) <= eps;
}

// --- Polytope construction ---------------------------------------------------

Polytope::Polytope(const MatrixXd& points) {
  if (points.rows() == 0) throw std::invalid_argument("polytope: no points");
  if (points.cols() > kMaxAmbientDim)
    throw std::invalid_argument("polytope: ambient dimension above cap");
  build(points);
}

void Polytope::build(const MatrixXd& points) {
  ambient_dim_ = int(points.cols());
  MatrixXd pts = dedup_points(points, kDedupTol);

  // Affine hull by SVD of the centered cloud.
  hull_origin_ = pts.colwise().mean().transpose();
  MatrixXd centered = pts.rowwise() - hull_origin_.transpose();
  Eigen::JacobiSVD<MatrixXd> svd(centered, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-9 * std::max(1.0, sv[0])) ++r;
  intrinsic_dim_ = r;
  hull_basis_ = svd.matrixV().leftCols(r).transpose();  // r x d

  MatrixXd local = centered * hull_basis_.transpose();  // P x r

  lattice_.assign(r + 1, {});
  if (r == 0) {
    vertices_ = pts.topRows(1);
    local_vertices_ = MatrixXd::Zero(1, 0);
    build_dim0();
  } else if (r == 1) {
    build_dim1_select(pts, local);
  } else if (r == 2) {
    build_dim2_select(pts, local);
  } else {
    // Drop non-vertices, then enumerate facets brute force.
    std::vector<int> keep;
    for (int i = 0; i < pts.rows(); ++i) {
      if (pts.rows() <= r + 1) {
        keep.push_back(i);
        continue;
      }
      MatrixXd others(int(pts.rows()) - 1, r);
      int k = 0;
      for (int j = 0; j < pts.rows(); ++j)
        if (j != i) others.row(k++) = local.row(j);
      if (!hull_dist_leq(others, local.row(i).transpose(), kDedupTol))
        keep.push_back(i);
    }
    vertices_.resize(int(keep.size()), ambient_dim_);
    local_vertices_.resize(int(keep.size()), r);
    for (int i = 0; i < int(keep.size()); ++i) {
      vertices_.row(i) = pts.row(keep[i]);
      local_vertices_.row(i) = local.row(keep[i]);
    }
    build_general(local_vertices_);
  }
  finish_lattice_geometry();
  volume_ = lattice_[intrinsic_dim_][0].volume;
}

void Polytope::build_dim0() {
  FaceRec self;
  self.ids = {0};
  lattice_[0] = {self};
  facet_normals_local_.resize(0, 0);
  facet_offsets_local_.resize(0);
}

// 1-dimensional: keep the two extreme points.
void Polytope::build_dim1_select(const MatrixXd& pts, const MatrixXd& local) {
  int lo = 0, hi = 0;
  for (int i = 1; i < local.rows(); ++i) {
    if (local(i, 0) < local(lo, 0)) lo = i;
    if (local(i, 0) > local(hi, 0)) hi = i;
  }
  vertices_.resize(2, ambient_dim_);
  local_vertices_.resize(2, 1);
  vertices_.row(0) = pts.row(lo);
  vertices_.row(1) = pts.row(hi);
  local_vertices_(0, 0) = local(lo, 0);
  local_vertices_(1, 0) = local(hi, 0);

  facet_normals_local_.resize(2, 1);
  facet_offsets_local_.resize(2);
  facet_normals_local_ << 1, -1;
  facet_offsets_local_ << local_vertices_(1, 0), -local_vertices_(0, 0);

  FaceRec v0, v1, edge;
  v0.ids = {0};
  v1.ids = {1};
  edge.ids = {0, 1};
  edge.children = {0, 1};
  lattice_[0] = {v0, v1};
  lattice_[1] = {edge};
}

// 2-dimensional: monotone chain in local coordinates.
void Polytope::build_dim2_select(const MatrixXd& pts, const MatrixXd& local) {
  const int n = int(local.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (local(a, 0) != local(b, 0)) return local(a, 0) < local(b, 0);
    return local(a, 1) < local(b, 1);
  });
  auto cross = [&](int o, int a, int b) {
    return (local(a, 0) - local(o, 0)) * (local(b, 1) - local(o, 1)) -
           (local(a, 1) - local(o, 1)) * (local(b, 0) - local(o, 0));
  };
  // Andrew monotone chain; CCW orientation, collinear points dropped.
  std::vector<int> hull(2 * n);
  int hk = 0;
  for (int ii = 0; ii < n; ++ii) {
    const int i = order[ii];
    while (hk >= 2 && cross(hull[hk - 2], hull[hk - 1], i) <= 1e-12) --hk;
    hull[hk++] = i;
  }
  for (int ii = n - 2, t = hk + 1; ii >= 0; --ii) {
    const int i = order[ii];
    while (hk >= t && cross(hull[hk - 2], hull[hk - 1], i) <= 1e-12) --hk;
    hull[hk++] = i;
  }
  hull.resize(hk - 1);
  const int h = int(hull.size());
  vertices_.resize(h, ambient_dim_);
  local_vertices_.resize(h, 2);
  for (int i = 0; i < h; ++i) {
    vertices_.row(i) = pts.row(hull[i]);
    local_vertices_.row(i) = local.row(hull[i]);
  }
  facet_normals_local_.resize(h, 2);
  facet_offsets_local_.resize(h);
  lattice_[0].resize(h);
  lattice_[1].resize(h);
  FaceRec top;
  for (int i = 0; i < h; ++i) {
    lattice_[0][i].ids = {i};
    const int j = (i + 1) % h;
    // CCW boundary: outward normal of edge i->j.
    Eigen::Vector2d e = (local_vertices_.row(j) - local_vertices_.row(i))
                            .transpose();
    Eigen::Vector2d nrm(e.y(), -e.x());
    nrm.normalize();
    facet_normals_local_.row(i) = nrm.transpose();
    facet_offsets_local_[i] = nrm.dot(local_vertices_.row(i).transpose());
    FaceRec& edge = lattice_[1][i];
    edge.ids = {std::min(i, j), std::max(i, j)};
    edge.children = {i, j};
    top.children.push_back(i);
    top.ids.push_back(i);
  }
  lattice_[2] = {top};
}

void Polytope::build_general(const MatrixXd& local) {
  const int r = intrinsic_dim_;
  const int nv = int(local.rows());

  double candidates = 1.0;
  for (int i = 0; i < r; ++i) candidates *= double(nv - i) / double(i + 1);
  if (candidates > 2e7)
    throw std::invalid_argument(
        "polytope: too many facet candidates for brute-force enumeration");

  std::map<std::vector<int>, int> facet_index;
  std::vector<std::vector<int>> facet_sets;
  std::vector<VectorXd> normals;
  std::vector<double> offsets;

  for (Combinations comb(nv, r); !comb.done(); comb.next()) {
    const auto& ids = comb.current();
    MatrixXd m(r - 1, r);
    for (int i = 1; i < r; ++i)
      m.row(i - 1) = local.row(ids[i]) - local.row(ids[0]);
    Eigen::FullPivLU<MatrixXd> lu(m);
    lu.setThreshold(1e-9);
    if (lu.dimensionOfKernel() != 1) continue;
    VectorXd n = lu.kernel().col(0);
    n.normalize();
    double b = n.dot(local.row(ids[0]).transpose());
    double mx = -std::numeric_limits<double>::infinity();
    double mn = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nv; ++i) {
      const double s = n.dot(local.row(i).transpose());
      mx = std::max(mx, s);
      mn = std::min(mn, s);
    }
    if (mx - b <= kFacetTol) {
      // supporting as is
    } else if (b - mn <= kFacetTol) {
      n = -n;
      b = -b;
    } else {
      continue;
    }
    std::vector<int> tight;
    for (int i = 0; i < nv; ++i)
      if (std::abs(n.dot(local.row(i).transpose()) - b) <= kFacetTol)
        tight.push_back(i);
    if (int(tight.size()) < r) continue;
    if (facet_index.emplace(tight, int(facet_sets.size())).second) {
      facet_sets.push_back(tight);
      normals.push_back(n);
      offsets.push_back(b);
    }
  }
  if (facet_sets.empty())
    throw std::runtime_error("facet enumeration found no facets");

  const int nf = int(facet_sets.size());
  facet_normals_local_.resize(nf, r);
  facet_offsets_local_.resize(nf);
  for (int i = 0; i < nf; ++i) {
    facet_normals_local_.row(i) = normals[i].transpose();
    facet_offsets_local_[i] = offsets[i];
  }

  // Face lattice, top-down: every (j-1)-face is a j-face cut by a facet.
  lattice_[r].resize(1);
  FaceRec& top = lattice_[r][0];
  top.ids.resize(nv);
  std::iota(top.ids.begin(), top.ids.end(), 0);

  lattice_[r - 1].resize(nf);
  for (int i = 0; i < nf; ++i) {
    lattice_[r - 1][i].ids = facet_sets[i];
    top.children.push_back(i);
  }

  for (int j = r - 1; j >= 1; --j) {
    std::map<std::vector<int>, int> level_index;
    for (auto& g : lattice_[j]) {
      for (int f = 0; f < nf; ++f) {
        std::vector<int> s;
        std::set_intersection(g.ids.begin(), g.ids.end(),
                              facet_sets[f].begin(), facet_sets[f].end(),
                              std::back_inserter(s));
        if (int(s.size()) < j || s == g.ids) continue;
        if (affine_rank(local_vertices_, s, 1e-9) != j - 1) continue;
        auto [it, fresh] = level_index.emplace(s, int(lattice_[j - 1].size()));
        if (fresh) {
          FaceRec rec;
          rec.ids = s;
          lattice_[j - 1].push_back(std::move(rec));
        }
        if (std::find(g.children.begin(), g.children.end(), it->second) ==
            g.children.end())
          g.children.push_back(it->second);
      }
    }
  }
  if (int(lattice_[0].size()) != nv)
    throw std::runtime_error("face lattice is missing vertices");
  // Reorder level 0 so entry i is vertex i; rewire edge child links.
  std::vector<int> vertex_of(nv);
  for (int idx = 0; idx < nv; ++idx) vertex_of[idx] = lattice_[0][idx].ids[0];
  for (auto& g : lattice_[1])
    for (auto& c : g.children) c = vertex_of[c];
  std::vector<FaceRec> verts0(nv);
  for (int i = 0; i < nv; ++i) verts0[i].ids = {i};
  lattice_[0] = std::move(verts0);
}

void Polytope::finish_lattice_geometry() {
  const int r = intrinsic_dim_;
  for (int j = 0; j <= r; ++j) {
    for (auto& f : lattice_[j]) {
      f.centroid = VectorXd::Zero(r);
      for (int id : f.ids)
        f.centroid += local_vertices_.row(id).transpose();
      f.centroid /= double(f.ids.size());
      f.ref = local_vertices_.row(f.ids[0]).transpose();
      if (j == 0) {
        f.basis = MatrixXd(0, r);
        f.volume = 1.0;
      } else {
        f.basis = orthonormal_rows_spanning(local_vertices_, f.ids, j);
      }
    }
  }
  // Pyramid volumes, bottom-up; heights measured inside the parent face.
  for (int j = 1; j <= r; ++j) {
    for (auto& f : lattice_[j]) {
      double vol = 0.0;
      for (int ci : f.children) {
        const FaceRec& c = lattice_[j - 1][ci];
        VectorXd v = f.centroid - c.ref;
        VectorXd w = v - c.basis.transpose() * (c.basis * v);
        vol += w.norm() * c.volume;
      }
      f.volume = vol / double(j);
    }
  }
}

std::pair<VectorXd, double> Polytope::facet_ambient(int i) const {
  VectorXd n = hull_basis_.transpose() *
               facet_normals_local_.row(i).transpose();
  const double b = facet_offsets_local_[i] + n.dot(hull_origin_);
  return {n, b};
}

bool Polytope::contains(const VectorXd& x, double tol) const {
  const VectorXd d = x - hull_origin_;
  const VectorXd y = hull_basis_ * d;
  // Affine-hull residual.
  if ((d - hull_basis_.transpose() * y).norm() > tol) return false;
  for (int i = 0; i < num_facets(); ++i)
    if (facet_normals_local_.row(i).dot(y) > facet_offsets_local_[i] + tol)
      return false;
  return true;
}

int Polytope::num_faces(int j) const {
  if (j < 0 || j > intrinsic_dim_) return 0;
  return int(lattice_[j].size());
}

const std::vector<int>& Polytope::face_vertex_ids(int j, int idx) const {
  return lattice_[j][idx].ids;
}

double Polytope::face_volume(int j, int idx) const {
  return lattice_[j][idx].volume;
}

Face Polytope::face(int j, int idx) const {
  const FaceRec& rec = lattice_[j][idx];
  MatrixXd amb_basis = rec.basis * hull_basis_;  // j x d, orthonormal rows
  return Face{j, rec.ids,
              geomlin::Subspace::trusted(std::move(amb_basis), ambient_dim_),
              vertex(rec.ids[0])};
}

std::vector<Face> Polytope::faces(int j) const {
  if (j < 0 || j > intrinsic_dim_)
    throw std::invalid_argument("faces: dimension out of range");
  std::vector<Face> out;
  out.reserve(lattice_[j].size());
  for (int i = 0; i < int(lattice_[j].size()); ++i) out.push_back(face(j, i));
  return out;
}

std::uint64_t Polytope::digest() const {
  std::uint64_t h = fnv1a(&ambient_dim_, sizeof(ambient_dim_));
  h = fnv1a_doubles(vertices_.data(), std::size_t(vertices_.size()), h);
  return h;
}

// --- Body -------------------------------------------------------------------

double Body::support(const VectorXd& u) const {
  if (is_empty()) throw std::invalid_argument("support of empty body");
  if (const Polytope* p = polytope()) return (p->vertices() * u).maxCoeff();
  if (const Ball* b = ball()) return b->center.dot(u) + b->radius * u.norm();
  const ParallelBody* pb = parallel();
  return (pb->polytope.vertices() * u).maxCoeff() + pb->eps * u.norm();
}

std::pair<VectorXd, VectorXd> Body::bounding_box() const {
  if (is_empty()) throw std::invalid_argument("bounding box of empty body");
  if (const Polytope* p = polytope())
    return {p->vertices().colwise().minCoeff().transpose(),
            p->vertices().colwise().maxCoeff().transpose()};
  if (const Ball* b = ball())
    return {b->center.array() - b->radius, b->center.array() + b->radius};
  const ParallelBody* pb = parallel();
  return {pb->polytope.vertices().colwise().minCoeff().transpose().array() -
              pb->eps,
          pb->polytope.vertices().colwise().maxCoeff().transpose().array() +
              pb->eps};
}

Body Body::translate(const VectorXd& t) const {
  if (is_empty()) return *this;
  if (const Polytope* p = polytope())
    return Body(Polytope(p->vertices().rowwise() + t.transpose()));
  if (const Ball* b = ball()) return Body(Ball{b->center + t, b->radius});
  const ParallelBody* pb = parallel();
  return Body(ParallelBody{
      Polytope(pb->polytope.vertices().rowwise() + t.transpose()), pb->eps});
}

Body Body::dilate(double lambda) const {
  if (lambda <= 0) throw std::invalid_argument("dilate: lambda must be > 0");
  if (is_empty()) return *this;
  if (const Polytope* p = polytope()) return Body(Polytope(p->vertices() * lambda));
  if (const Ball* b = ball())
    return Body(Ball{b->center * lambda, b->radius * lambda});
  const ParallelBody* pb = parallel();
  return Body(ParallelBody{Polytope(pb->polytope.vertices() * lambda),
                           pb->eps * lambda});
}

Body Body::orthogonal_image(const MatrixXd& m) const {
  if (is_empty()) return *this;
  if (const Polytope* p = polytope())
    return Body(Polytope(p->vertices() * m.transpose()));
  if (const Ball* b = ball()) return Body(Ball{m * b->center, b->radius});
  const ParallelBody* pb = parallel();
  return Body(ParallelBody{Polytope(pb->polytope.vertices() * m.transpose()),
                           pb->eps});
}

std::uint64_t Body::digest() const {
  int tag = int(v_.index());
  std::uint64_t h = fnv1a(&tag, sizeof(tag));
  h = fnv1a(&ambient_dim_, sizeof(ambient_dim_), h);
  if (const Polytope* p = polytope())
    return fnv1a_doubles(p->vertices().data(),
                         std::size_t(p->vertices().size()), h);
  if (const Ball* b = ball()) {
    h = fnv1a_doubles(b->center.data(), std::size_t(b->center.size()), h);
    return fnv1a_doubles(&b->radius, 1, h);
  }
  if (const ParallelBody* pb = parallel()) {
    h = fnv1a_doubles(pb->polytope.vertices().data(),
                      std::size_t(pb->polytope.vertices().size()), h);
    return fnv1a_doubles(&pb->eps, 1, h);
  }
  return h;
}

// --- project / section ------------------------------------------------------

Body project(const Body& k, const geomlin::Subspace& e) {
  if (k.ambient_dim() != e.ambient_dim())
    throw std::invalid_argument("project: ambient dimension mismatch");
  if (k.is_empty()) return Body::empty(e.dim());
  if (const Polytope* p = k.polytope())
    return Body(Polytope(p->vertices() * e.frame().transpose()));
  if (const Ball* b = k.ball())
    return Body(Ball{e.coords(b->center), b->radius});
  const ParallelBody* pb = k.parallel();
  return Body(ParallelBody{
      Polytope(pb->polytope.vertices() * e.frame().transpose()), pb->eps});
}

namespace {

// Vertex enumeration of {t : A t <= b} (bounded); returns points as rows.
MatrixXd hrep_vertices(const MatrixXd& a, const VectorXd& b) {
  const int m = int(a.rows());
  const int k = int(a.cols());
  std::vector<VectorXd> pts;
  if (k == 0) return MatrixXd(1, 0);
  for (Combinations comb(m, k); !comb.done(); comb.next()) {
    const auto& ids = comb.current();
    MatrixXd s(k, k);
    VectorXd rhs(k);
    for (int i = 0; i < k; ++i) {
      s.row(i) = a.row(ids[i]);
      rhs[i] = b[ids[i]];
    }
    Eigen::FullPivLU<MatrixXd> lu(s);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) continue;
    VectorXd t = lu.solve(rhs);
    bool ok = true;
    for (int i = 0; i < m && ok; ++i)
      if (a.row(i).dot(t) > b[i] + kFacetTol * (1.0 + std::abs(b[i]))) ok = false;
    if (ok) pts.push_back(t);
  }
  MatrixXd out(int(pts.size()), k);
  for (int i = 0; i < int(pts.size()); ++i) out.row(i) = pts[i].transpose();
  return out;
}

}  // namespace

Body section(const Body& k, const geomlin::AffineFlat& flat) {
  const int kd = flat.direction.dim();
  if (k.is_empty()) return Body::empty(kd);
  if (k.ambient_dim() != flat.direction.ambient_dim())
    throw std::invalid_argument("section: ambient dimension mismatch");

  if (const Ball* b = k.ball()) {
    const VectorXd rel = b->center - flat.offset;
    const VectorXd y = flat.direction.coords(rel);
    const double off2 = (rel - flat.direction.embed(y)).squaredNorm();
    const double r2 = b->radius * b->radius - off2;
    if (r2 <= 0) return Body::empty(kd);
    return Body(Ball{y, std::sqrt(r2)});
  }
  const Polytope* p = k.polytope();
  if (!p)
    throw std::invalid_argument("section: supported for polytopes and balls");

  const MatrixXd& dframe = flat.direction.frame();  // kd x d

  // Reduce flat coordinates by the affine-hull equalities of P.
  MatrixXd z;       // kd x m parameterization y = y0 + Z t
  VectorXd y0;
  if (p->lower_dimensional()) {
    geomlin::Subspace hull = geomlin::Subspace::trusted(p->hull_basis(),
                                                        p->ambient_dim());
    geomlin::Subspace nrm = hull.orthogonal_complement();
    MatrixXd aeq = nrm.frame() * dframe.transpose();        // (d-r) x kd
    VectorXd beq = nrm.frame() * (p->hull_origin() - flat.offset);
    Eigen::JacobiSVD<MatrixXd> svd(aeq,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > 1e-10 * std::max(1.0, sv[0])) ++rank;
    y0 = svd.solve(beq);
    if ((aeq * y0 - beq).norm() > 1e-9) return Body::empty(kd);
    z = svd.matrixV().rightCols(int(dframe.rows()) - rank);
  } else {
    y0 = VectorXd::Zero(kd);
    z = MatrixXd::Identity(kd, kd);
  }

  // Facet inequalities in t-space.
  const int nf = p->num_facets();
  const int m = int(z.cols());
  MatrixXd at(nf, m);
  VectorXd bt(nf);
  for (int i = 0; i < nf; ++i) {
    auto [n, b] = p->facet_ambient(i);
    const VectorXd ny = dframe * n;  // gradient in y coords
    at.row(i) = (z.transpose() * ny).transpose();
    bt[i] = b - n.dot(flat.offset) - ny.dot(y0);
  }

  MatrixXd tpts;
  if (m == 0) {
    bool ok = true;
    for (int i = 0; i < nf; ++i)
      if (bt[i] < -kFacetTol) ok = false;
    if (!ok) return Body::empty(kd);
    tpts = MatrixXd(1, 0);
  } else {
    tpts = hrep_vertices(at, bt);
    if (tpts.rows() == 0) return Body::empty(kd);
  }

  MatrixXd ypts(tpts.rows(), kd);
  for (int i = 0; i < tpts.rows(); ++i)
    ypts.row(i) = (y0 + z * tpts.row(i).transpose()).transpose();
  return Body(Polytope(ypts));
}

// --- external angle ----------------------------------------------------------

Estimate external_angle(const Polytope& p, const Face& f, RandomStream rng,
                        long long n) {
  if (f.dim < 0 || f.dim > p.intrinsic_dim())
    throw std::invalid_argument("external_angle: not a face of P");
  if (f.dim == p.intrinsic_dim()) return Estimate::exact(1.0, rng.seed());
  if (f.dim == p.intrinsic_dim() - 1)
    return Estimate::exact(0.5, rng.seed());

  const geomlin::Subspace comp = f.direction.orthogonal_complement();
  const int c = comp.dim();
  const MatrixXd& verts = p.vertices();
  const std::vector<int>& want = f.vertex_ids;

  return mc::mean_estimate(n, rng, [&](RandomStream& rs) -> double {
    VectorXd g(c);
    for (int i = 0; i < c; ++i) g[i] = rs.gaussian();
    if (g.norm() < 1e-12) return 0.0;
    const VectorXd u = comp.embed(g.normalized());
    const VectorXd dots = verts * u;
    const double mx = dots.maxCoeff();
    std::size_t seen = 0;
    for (int i = 0; i < dots.size(); ++i) {
      if (dots[i] >= mx - kFacetTol) {
        if (!std::binary_search(want.begin(), want.end(), i)) return 0.0;
        ++seen;
      }
    }
    return seen == want.size() ? 1.0 : 0.0;
  });
}

// --- Minkowski sum -----------------------------------------------------------

Polytope minkowski_sum_polytopes(const Polytope& p, const Polytope& q) {
  if (p.ambient_dim() != q.ambient_dim())
    throw std::invalid_argument("minkowski sum: ambient dimension mismatch");
  const long long count =
      (long long)p.num_vertices() * (long long)q.num_vertices();
  if (count > kMinkowskiPointCap)
    throw std::invalid_argument(
        "minkowski sum: too many candidate points; use coarser bodies");
  MatrixXd pts(count, p.ambient_dim());
  long long row = 0;
  for (int i = 0; i < p.num_vertices(); ++i)
    for (int j = 0; j < q.num_vertices(); ++j)
      pts.row(row++) = p.vertices().row(i) + q.vertices().row(j);
  return Polytope(pts);
}

// --- stock bodies ------------------------------------------------------------

Polytope Polytope::axis_box(const VectorXd& lo, const VectorXd& hi) {
  const int d = int(lo.size());
  for (int i = 0; i < d; ++i)
    if (!(hi[i] - lo[i] > kDedupTol))
      throw std::invalid_argument("axis_box: degenerate side");

  Polytope p(MatrixXd::Zero(1, d));  // placeholder, rebuilt below
  p.ambient_dim_ = d;
  p.intrinsic_dim_ = d;
  const int nverts = 1 << d;
  p.vertices_.resize(nverts, d);
  for (int mask = 0; mask < nverts; ++mask)
    for (int j = 0; j < d; ++j)
      p.vertices_(mask, j) = (mask >> j) & 1 ? hi[j] : lo[j];
  p.hull_origin_ = 0.5 * (lo + hi);
  p.hull_basis_ = MatrixXd::Identity(d, d);
  p.local_vertices_ = p.vertices_.rowwise() - p.hull_origin_.transpose();

  p.facet_normals_local_.resize(2 * d, d);
  p.facet_offsets_local_.resize(2 * d);
  p.facet_normals_local_.setZero();
  for (int i = 0; i < d; ++i) {
    p.facet_normals_local_(2 * i, i) = 1.0;
    p.facet_offsets_local_[2 * i] = hi[i] - p.hull_origin_[i];
    p.facet_normals_local_(2 * i + 1, i) = -1.0;
    p.facet_offsets_local_[2 * i + 1] = p.hull_origin_[i] - lo[i];
  }

  // Faces are coordinate patterns: 0 = at lo, 1 = at hi, 2 = free interval.
  int npat = 1;
  for (int i = 0; i < d; ++i) npat *= 3;
  std::vector<int> level_of(npat), index_of(npat);
  p.lattice_.assign(d + 1, {});
  auto digits_of = [&](int pat) {
    std::vector<int> dg(d);
    for (int i = 0; i < d; ++i) {
      dg[i] = pat % 3;
      pat /= 3;
    }
    return dg;
  };
  // First pass: place every pattern; vertices go to index = corner mask.
  for (int pat = 0; pat < npat; ++pat) {
    const std::vector<int> dg = digits_of(pat);
    int dim = 0;
    for (int i = 0; i < d; ++i)
      if (dg[i] == 2) ++dim;
    level_of[pat] = dim;
    if (dim == 0) {
      int mask = 0;
      for (int i = 0; i < d; ++i)
        if (dg[i] == 1) mask |= 1 << i;
      index_of[pat] = mask;
    } else {
      index_of[pat] = int(p.lattice_[dim].size());
      p.lattice_[dim].emplace_back();
    }
  }
  p.lattice_[0].resize(nverts);

  for (int pat = 0; pat < npat; ++pat) {
    const std::vector<int> dg = digits_of(pat);
    const int dim = level_of[pat];
    FaceRec& f = p.lattice_[dim][index_of[pat]];
    for (int mask = 0; mask < nverts; ++mask) {
      bool in = true;
      for (int i = 0; i < d && in; ++i)
        if (dg[i] != 2 && ((mask >> i) & 1) != dg[i]) in = false;
      if (in) f.ids.push_back(mask);
    }
    f.centroid.resize(d);
    for (int i = 0; i < d; ++i)
      f.centroid[i] = dg[i] == 2 ? 0.0
                      : dg[i] == 1 ? hi[i] - p.hull_origin_[i]
                                   : lo[i] - p.hull_origin_[i];
    f.ref = p.local_vertices_.row(f.ids[0]).transpose();
    f.basis = MatrixXd::Zero(dim, d);
    f.volume = 1.0;
    int row = 0;
    int pw = 1;
    for (int i = 0; i < d; ++i) {
      if (dg[i] == 2) {
        f.basis(row++, i) = 1.0;
        f.volume *= hi[i] - lo[i];
        f.children.push_back(index_of[pat - 2 * pw]);  // digit 2 -> 0
        f.children.push_back(index_of[pat - pw]);      // digit 2 -> 1
      }
      pw *= 3;
    }
  }
  p.volume_ = p.lattice_[d][0].volume;
  return p;
}

Polytope make_box(const VectorXd& lo, const VectorXd& hi) {
  return Polytope::axis_box(lo, hi);
}

Polytope make_cube(int d, double side) {
  return make_box(VectorXd::Zero(d), VectorXd::Constant(d, side));
}

Polytope make_simplex(int d) {
  MatrixXd pts = MatrixXd::Zero(d + 1, d);
  pts.bottomRows(d) = MatrixXd::Identity(d, d);
  return Polytope(pts);
}

Polytope make_cross_polytope(int d, double scale) {
  MatrixXd pts = MatrixXd::Zero(2 * d, d);
  for (int i = 0; i < d; ++i) {
    pts(2 * i, i) = scale;
    pts(2 * i + 1, i) = -scale;
  }
  return Polytope(pts);
}

Polytope make_segment(const VectorXd& a, const VectorXd& b) {
  MatrixXd pts(2, a.size());
  pts.row(0) = a.transpose();
  pts.row(1) = b.transpose();
  return Polytope(pts);
}

Polytope make_cube_in_subspace(const geomlin::Subspace& e) {
  const int k = e.dim();
  const int n = 1 << k;
  MatrixXd pts = MatrixXd::Zero(n, e.ambient_dim());
  for (int mask = 0; mask < n; ++mask)
    for (int j = 0; j < k; ++j)
      if ((mask >> j) & 1) pts.row(mask) += e.frame().row(j);
  return Polytope(pts);
}

Polytope make_random_hull(int d, int npoints, RandomStream& rng,
                          double scale) {
  MatrixXd pts(npoints, d);
  for (int i = 0; i < npoints; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = scale * rng.gaussian();
  return Polytope(pts);
}

// Declared in geomlin.hpp; lives here so it can see Body.
}  // namespace hermval::bodies

namespace hermval::geomlin {

AffineFlat sample_affine_flat(
    const std::function<Subspace(RandomStream&)>& direction_sampler,
    const bodies::Body& k, RandomStream& rng) {
  if (k.is_empty())
    throw std::invalid_argument("sample_affine_flat: empty body");
  const Subspace f = direction_sampler(rng);
  const bodies::Body proj = bodies::project(k, f);
  auto [lo, hi] = proj.bounding_box();
  VectorXd x(f.dim());
  double weight = 1.0;
  for (int i = 0; i < f.dim(); ++i) {
    x[i] = rng.uniform(lo[i], hi[i]);
    weight *= std::max(0.0, hi[i] - lo[i]);
  }
  return AffineFlat(f.orthogonal_complement(), f.embed(x), weight);
}

}  // namespace hermval::geomlin
