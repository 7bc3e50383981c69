#include "hermval/intrinsic.hpp"

#include <cmath>

#include "hermval/parallel.hpp"
#include "hermval/wls.hpp"

namespace hermval::intrinsic {

using bodies::Ball;
using bodies::Body;
using bodies::ParallelBody;
using bodies::Polytope;

namespace {

double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double out = 1.0;
  for (int i = 0; i < k; ++i) out = out * double(n - i) / double(i + 1);
  return out;
}

}  // namespace

double kappa(int m) {
  if (m < 0) throw std::invalid_argument("kappa: negative dimension");
  double k0 = 1.0, k1 = 2.0;
  if (m == 0) return k0;
  if (m == 1) return k1;
  const double two_pi = 6.283185307179586476925286766559;
  for (int i = 2; i <= m; ++i) {
    const double next = (i % 2 == 0 ? k0 : k1) * two_pi / double(i);
    if (i % 2 == 0)
      k0 = next;
    else
      k1 = next;
  }
  return m % 2 == 0 ? k0 : k1;
}

double ball_intrinsic_volume(int d, int j, double r) {
  return binom(d, j) * kappa(d) / kappa(d - j) * std::pow(r, j);
}

Estimate intrinsic_volume(const Body& k, int j, RandomStream rng,
                          long long angle_samples) {
  const int d = k.ambient_dim();
  if (j < 0 || j > d)
    throw std::invalid_argument("intrinsic_volume: j out of range");
  if (k.is_empty()) return Estimate::exact(0.0, rng.seed());
  if (j == 0) return Estimate::exact(1.0, rng.seed());

  if (const Ball* b = k.ball())
    return Estimate::exact(ball_intrinsic_volume(d, j, b->radius), rng.seed());

  if (const ParallelBody* pb = k.parallel()) {
    // V_j(P + eps D) = sum_{m<=j} (kappa_{d-m}/kappa_{d-j}) C(d-m,d-j)
    //                  eps^{j-m} V_m(P); exact Steiner coefficients, the only
    //                  noise is in the V_m(P) angle estimates.
    double val = 0.0, var = 0.0;
    long long ns = 0;
    for (int m = 0; m <= j; ++m) {
      const double c = kappa(d - m) / kappa(d - j) * binom(d - m, d - j) *
                       std::pow(pb->eps, j - m);
      if (c == 0.0) continue;
      Estimate vm = intrinsic_volume(Body(pb->polytope), m,
                                     rng.substream(9000 + m), angle_samples);
      val += c * vm.value;
      var += c * c * vm.std_error * vm.std_error;
      ns = std::max(ns, vm.samples);
    }
    return Estimate{val, std::sqrt(var), ns, rng.seed()};
  }

  const Polytope* p = k.polytope();
  const int r = p->intrinsic_dim();
  if (j > r) return Estimate::exact(0.0, rng.seed());
  if (j == r) return Estimate::exact(p->volume(), rng.seed());
  if (j == r - 1) {
    double s = 0.0;
    for (int i = 0; i < p->num_faces(j); ++i) s += 0.5 * p->face_volume(j, i);
    return Estimate::exact(s, rng.seed());
  }

  double val = 0.0, var = 0.0;
  long long ns = 0;
  for (int i = 0; i < p->num_faces(j); ++i) {
    const bodies::Face f = p->face(j, i);
    const Estimate g =
        bodies::external_angle(*p, f, rng.substream(std::uint64_t(i)),
                               angle_samples);
    const double v = p->face_volume(j, i);
    val += g.value * v;
    var += v * v * g.std_error * g.std_error;
    ns = std::max(ns, g.samples);
  }
  return Estimate{val, std::sqrt(var), ns, rng.seed()};
}

std::vector<Estimate> steiner_oracle(const Polytope& p, RandomStream rng,
                                     long long n, int extra_degree) {
  const int d = p.ambient_dim();
  if (p.intrinsic_dim() != d)
    throw std::invalid_argument("steiner_oracle: polytope not full-dimensional");

  // Inradius proxy: the local origin is the input centroid, so the facet
  // offsets are its distances to the facet planes.
  double rin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < p.num_facets(); ++i)
    rin = std::min(rin, p.facet_offsets_local()[i]);
  if (!(rin > 0))
    throw std::runtime_error("steiner_oracle: degenerate inradius");
  double circ = 0.0;
  for (int i = 0; i < p.num_vertices(); ++i)
    circ = std::max(circ, p.to_local(p.vertex(i)).norm());

  // Geometric eps ladder spanning small (volume-dominated) through large
  // (chi-dominated) inflations, each node hit-or-miss in its own box: the
  // relative error of vol(P + eps D) then stays flat across scales, which is
  // what keeps the coefficient solve conditioned.
  const int nodes = 2 * (d + 1) + extra_degree;
  const double a = 0.3 * rin, b = 4.0 * circ;
  std::vector<double> eps(nodes);
  for (int i = 0; i < nodes; ++i)
    eps[i] = a * std::pow(b / a, double(i) / double(nodes - 1));

  const long long n_node = std::max<long long>(n / nodes, 256);
  const Eigen::MatrixXd& nrm = p.facet_normals_local();
  const Eigen::VectorXd& off = p.facet_offsets_local();
  auto [plo, phi] = Body(p).bounding_box();

  Eigen::VectorXd vols(nodes), sig(nodes);
  for (int k = 0; k < nodes; ++k) {
    const double e = eps[k];
    Eigen::VectorXd lo = plo.array() - e;
    Eigen::VectorXd hi = phi.array() + e;
    double boxvol = 1.0;
    for (int i = 0; i < d; ++i) boxvol *= hi[i] - lo[i];
    Estimate est = mc::mean_estimate(
        n_node, rng.substream(std::uint64_t(k)),
        [&](RandomStream& rs) -> double {
          Eigen::VectorXd x(d);
          for (int i = 0; i < d; ++i) x[i] = rs.uniform(lo[i], hi[i]);
          const Eigen::VectorXd y = p.to_local(x);
          double viol = 0.0;
          for (int i = 0; i < nrm.rows(); ++i)
            viol = std::max(viol, nrm.row(i).dot(y) - off[i]);
          if (viol == 0.0) return 1.0;
          if (viol > e) return 0.0;
          return bodies::hull_dist_leq(p.vertices(), x, e) ? 1.0 : 0.0;
        });
    vols[k] = boxvol * est.value;
    sig[k] = boxvol * est.std_error;
  }

  // vol(P + eps D) = sum_j kappa_{d-j} eps^{d-j} V_j; optional spurious
  // higher-degree columns should fit to zero.
  Eigen::MatrixXd design(nodes, d + 1 + extra_degree);
  for (int i = 0; i < nodes; ++i) {
    for (int j = 0; j <= d; ++j)
      design(i, j) = kappa(d - j) * std::pow(eps[i], d - j);
    for (int e = 1; e <= extra_degree; ++e)
      design(i, d + e) = std::pow(eps[i], d + e);
  }
  WlsFit fit = wls_fit(design, vols, sig);
  if (fit.condition > 1e8)
    throw std::runtime_error(
        "steiner_oracle: ill-conditioned fit; use different eps nodes");

  std::vector<Estimate> out;
  for (int j = 0; j < d + 1 + extra_degree; ++j)
    out.push_back(Estimate{fit.coef[j], std::sqrt(std::max(0.0, fit.cov(j, j))),
                           n_node * nodes, rng.seed()});
  return out;
}

Estimate kubota_oracle(const Body& k, int j, RandomStream rng, long long n) {
  const int d = k.ambient_dim();
  if (j < 0 || j > d)
    throw std::invalid_argument("kubota_oracle: j out of range");
  if (k.is_empty()) return Estimate::exact(0.0, rng.seed());
  if (j == 0) return Estimate::exact(1.0, rng.seed());

  // Calibrated once per (d,j): exact on the unit ball, whose projections are
  // unit j-balls.
  const double c = ball_intrinsic_volume(d, j, 1.0) / kappa(j);

  Estimate e = mc::mean_estimate(n, rng, [&](RandomStream& rs) -> double {
    const geomlin::Subspace sub = geomlin::sample_subspace(j, d, rs);
    const Body proj = bodies::project(k, sub);
    if (const Ball* b = proj.ball()) return kappa(j) * std::pow(b->radius, j);
    if (const Polytope* p = proj.polytope())
      return p->intrinsic_dim() == j ? p->volume() : 0.0;
    const ParallelBody* pb = proj.parallel();
    // vol_j(Q + eps D_j) via the Steiner polynomial with face-formula V_m.
    double v = 0.0;
    for (int m = 0; m <= j; ++m) {
      const Estimate vm = intrinsic_volume(Body(pb->polytope), m,
                                           rs.substream(7000 + m), 4096);
      v += kappa(j - m) * std::pow(pb->eps, j - m) * vm.value;
    }
    return v;
  });
  return e.scaled(c);
}

}  // namespace hermval::intrinsic
