#include "hermval/kinematics.hpp"

#include <cmath>
#include <map>

#include "hermval/parallel.hpp"
#include "hermval/wls.hpp"

namespace hermval::kinematics {

using bodies::Ball;
using bodies::ParallelBody;
using bodies::Polytope;
using geomlin::Subspace;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using valuations::ValuationEvaluator;

namespace {

// Real 2n x 2n matrix of a unitary acting on the block realification.
MatrixXd realify_unitary(const geomlin::MatrixXcd& u) {
  const int n = int(u.rows());
  MatrixXd r(2 * n, 2 * n);
  r.topLeftCorner(n, n) = u.real();
  r.topRightCorner(n, n) = -u.imag();
  r.bottomLeftCorner(n, n) = u.imag();
  r.bottomRightCorner(n, n) = u.real();
  return r;
}

// Every convex body here is a polytope plus a ball radius.
struct Rounded {
  MatrixXd points;  // vertex cloud (not necessarily minimal)
  double radius;
};

Rounded decompose(const Body& k) {
  if (const Ball* b = k.ball()) {
    MatrixXd pts(1, b->center.size());
    pts.row(0) = b->center.transpose();
    return {pts, b->radius};
  }
  if (const Polytope* p = k.polytope()) return {p->vertices(), 0.0};
  const ParallelBody* pb = k.parallel();
  return {pb->polytope.vertices(), pb->eps};
}

// vol(conv(points) + s D) exactly for s = 0, else by the Steiner polynomial
// with face-formula intrinsic volumes.
double rounded_volume(const MatrixXd& points, double s, RandomStream rs,
                      long long angle_samples) {
  const Polytope hull(points);
  const int d = int(points.cols());
  if (s == 0.0)
    return hull.intrinsic_dim() == d ? hull.volume() : 0.0;
  double v = 0.0;
  for (int j = 0; j <= d; ++j)
    v += intrinsic::kappa(d - j) * std::pow(s, d - j) *
         intrinsic::intrinsic_volume(Body(hull), j, rs.substream(j),
                                     angle_samples)
             .value;
  return v;
}

Estimate body_projected_volume_mean(
    const Body& k, RandomStream rng, long long n_samples,
    long long angle_samples,
    const std::function<Subspace(RandomStream&)>& sampler) {
  return mc::mean_estimate(n_samples, rng, [&](RandomStream& rs) -> double {
    const Subspace f = sampler(rs);
    const Body proj = bodies::project(k, f);
    return intrinsic::intrinsic_volume(proj, f.dim(), rs.substream(1),
                                       angle_samples)
        .value;
  });
}

struct UCache {
  std::map<std::tuple<std::uint64_t, int, int>, Estimate> values;

  Estimate get(const Body& k, int n, int kk, int p, RandomStream seed_stream,
               long long n_samples) {
    const auto key = std::make_tuple(k.digest(), kk, p);
    auto it = values.find(key);
    if (it != values.end()) return it->second;
    const Estimate e = valuations::eval_U(
        kk, p, k, ComplexStructure(n),
        seed_stream.substream(std::uint64_t(kk) * 37 + std::uint64_t(p)),
        n_samples);
    values.emplace(key, e);
    return e;
  }
};

// Two-pass weighted least squares: the second pass folds the design-entry
// noise (scaled by the first-pass coefficients) into the row weights.
WlsFit fit_with_design_noise(const MatrixXd& a, const MatrixXd& a_sigma,
                             const VectorXd& y, const VectorXd& y_sigma) {
  WlsFit fit = wls_fit(a, y, y_sigma);
  VectorXd total = y_sigma;
  for (int i = 0; i < a.rows(); ++i) {
    double extra = 0.0;
    for (int j = 0; j < a.cols(); ++j)
      extra += std::pow(fit.coef[j] * a_sigma(i, j), 2);
    total[i] = std::sqrt(y_sigma[i] * y_sigma[i] + extra);
  }
  return wls_fit(a, y, total);
}

}  // namespace

KinematicLhs principal_kinematic_lhs(const Body& k1, const Body& k2,
                                     const ComplexStructure& j,
                                     RandomStream rng, long long n_samples,
                                     long long angle_samples) {
  const int d = 2 * j.n;
  if (k1.ambient_dim() != d || k2.ambient_dim() != d)
    throw std::invalid_argument("principal_kinematic_lhs: dimension mismatch");
  if (k1.is_empty() || k2.is_empty())
    return {Estimate::exact(0.0, rng.seed()), "exact"};

  const Rounded a = decompose(k1);
  const Rounded b = decompose(k2);
  const double s = a.radius + b.radius;

  if (a.points.rows() == 1 && b.points.rows() == 1)
    return {Estimate::exact(intrinsic::kappa(d) * std::pow(s, d), rng.seed()),
            "exact"};

  // A single-point partner makes the sum rotation invariant.
  if (a.points.rows() == 1 || b.points.rows() == 1) {
    const MatrixXd& cloud = a.points.rows() == 1 ? b.points : a.points;
    const double vol = rounded_volume(cloud, s, rng, angle_samples);
    // Error only through the Steiner face angles.
    if (s == 0.0) return {Estimate::exact(vol, rng.seed()), "minkowski"};
    // Recompute with error propagation.
    const Polytope hull(cloud);
    double var = 0.0;
    for (int jj = 0; jj <= d; ++jj) {
      const Estimate e = intrinsic::intrinsic_volume(
          Body(hull), jj, rng.substream(jj), angle_samples);
      var += std::pow(intrinsic::kappa(d - jj) * std::pow(s, d - jj) *
                          e.std_error,
                      2);
    }
    return {Estimate{vol, std::sqrt(var), angle_samples, rng.seed()},
            "steiner-mc"};
  }

  const std::string method = s == 0.0 ? "minkowski" : "steiner-mc";
  Estimate e = mc::mean_estimate(
      n_samples, rng, [&](RandomStream& rs) -> double {
        const MatrixXd r = realify_unitary(geomlin::haar_unitary(j.n, rs));
        MatrixXd sum(a.points.rows() * b.points.rows(), d);
        long long row = 0;
        const MatrixXd rb = b.points * r.transpose();
        for (int i = 0; i < a.points.rows(); ++i)
          for (int l = 0; l < rb.rows(); ++l)
            sum.row(row++) = a.points.row(i) - rb.row(l);
        return rounded_volume(sum, s, rs.substream(1), angle_samples);
      });
  return {e, method};
}

ConstantFit solve_kappa(int n, const std::vector<std::pair<Body, Body>>& pairs,
                        RandomStream rng, long long n_samples) {
  if (n != 2)
    throw std::invalid_argument("solve_kappa: only n = 2 is supported");
  std::vector<std::vector<int>> index;
  for (int k1 = 0; k1 <= 2 * n; ++k1) {
    const int k2 = 2 * n - k1;
    for (int p1 = 0; 2 * p1 <= std::min(k1, 2 * n - k1); ++p1)
      for (int p2 = 0; 2 * p2 <= std::min(k2, 2 * n - k2); ++p2)
        index.push_back({k1, k2, p1, p2});
  }
  const int cols = int(index.size());
  if (int(pairs.size()) * 2 < 3 * cols)
    throw std::invalid_argument(
        "solve_kappa: need at least 1.5x as many pairs as unknowns");

  UCache cache;
  const ComplexStructure j(n);
  MatrixXd a(int(pairs.size()), cols), a_sig(int(pairs.size()), cols);
  VectorXd y(int(pairs.size())), y_sig(int(pairs.size()));
  for (int i = 0; i < int(pairs.size()); ++i) {
    const KinematicLhs lhs = principal_kinematic_lhs(
        pairs[i].first, pairs[i].second, j, rng.substream(500 + i), 192, 16384);
    y[i] = lhs.value.value;
    y_sig[i] = lhs.value.std_error;
    for (int c = 0; c < cols; ++c) {
      const auto& ix = index[c];
      const Estimate u1 = cache.get(pairs[i].first, n, ix[0], ix[2],
                                    rng.substream(1), n_samples);
      const Estimate u2 = cache.get(pairs[i].second, n, ix[1], ix[3],
                                    rng.substream(2), n_samples);
      a(i, c) = u1.value * u2.value;
      a_sig(i, c) = std::sqrt(std::pow(u1.value * u2.std_error, 2) +
                              std::pow(u2.value * u1.std_error, 2));
    }
  }
  WlsFit fit = fit_with_design_noise(a, a_sig, y, y_sig);
  if (fit.condition > 1e6)
    throw std::runtime_error(
        "solve_kappa: ill-conditioned design; use more diverse bodies");
  ConstantFit out;
  out.index = index;
  out.values = fit.coef;
  out.covariance = fit.cov;
  out.residual = fit.residual_rel;
  out.condition = fit.condition;
  out.convention =
      std::string(intrinsic::kConvention) + ";IU=probU(n)xLebesgue";
  return out;
}

Estimate lagrangian_crofton_lhs(const Body& k, const ComplexStructure& j,
                                RandomStream rng, long long n_samples,
                                long long angle_samples) {
  if (k.is_empty()) return Estimate::exact(0.0, rng.seed());
  return body_projected_volume_mean(
      k, rng, n_samples, angle_samples, [&](RandomStream& rs) {
        const Subspace l = geomlin::sample_lagrangian(j, rs);
        // F^perp = J F for Lagrangian directions.
        MatrixXd rows(j.n, 2 * j.n);
        for (int i = 0; i < j.n; ++i)
          rows.row(i) = j.apply(l.frame().row(i).transpose()).transpose();
        return Subspace::trusted(std::move(rows), 2 * j.n);
      });
}

ConstantFit solve_beta(int n, const std::vector<Body>& test_bodies,
                       RandomStream rng, long long n_samples) {
  if (n != 2) throw std::invalid_argument("solve_beta: only n = 2 supported");
  if (int(test_bodies.size()) < 4)
    throw std::invalid_argument("solve_beta: need at least 4 bodies");
  const ComplexStructure j(n);
  std::vector<std::vector<int>> index;
  for (int p = 0; p <= n / 2; ++p) index.push_back({p});
  const int cols = int(index.size());

  UCache cache;
  MatrixXd a(int(test_bodies.size()), cols), a_sig(int(test_bodies.size()), cols);
  VectorXd y(int(test_bodies.size())), y_sig(int(test_bodies.size()));
  for (int i = 0; i < int(test_bodies.size()); ++i) {
    const Estimate lhs = lagrangian_crofton_lhs(test_bodies[i], j,
                                                rng.substream(700 + i),
                                                n_samples);
    y[i] = lhs.value;
    y_sig[i] = lhs.std_error;
    for (int c = 0; c < cols; ++c) {
      const Estimate u = cache.get(test_bodies[i], n, n, index[c][0],
                                   rng.substream(3), n_samples);
      a(i, c) = u.value;
      a_sig(i, c) = u.std_error;
    }
  }
  WlsFit fit = fit_with_design_noise(a, a_sig, y, y_sig);
  if (fit.condition > 1e6)
    throw std::runtime_error(
        "solve_beta: ill-conditioned design; use more diverse bodies");
  ConstantFit out;
  out.index = index;
  out.values = fit.coef;
  out.covariance = fit.cov;
  out.residual = fit.residual_rel;
  out.condition = fit.condition;
  out.convention =
      std::string(intrinsic::kConvention) + ";ALGr=probLGrxLebesgue";
  return out;
}

Estimate complex_crofton_lhs(const Body& k, int val_k, int val_p, int q,
                             const ComplexStructure& j, RandomStream rng,
                             long long n_outer, long long n_inner) {
  const int n = j.n;
  if (!(0 < q && q < n) || !(0 < 2 * val_p && 2 * val_p < val_k) ||
      !(val_k < 2 * q))
    throw std::invalid_argument(
        "complex_crofton_lhs: need 0<q<n and 0<2p<k<2q");
  if (k.is_empty()) return Estimate::exact(0.0, rng.seed());
  if (k.ambient_dim() != 2 * n)
    throw std::invalid_argument("complex_crofton_lhs: body is not in C^n");

  return mc::mean_estimate(n_outer, rng, [&](RandomStream& rs) -> double {
    const geomlin::MatrixXcd zg = geomlin::sample_complex_frame(q, n, rs);
    const Subspace g = geomlin::realify_complex_frame(zg, j);
    const Subspace gperp =
        geomlin::realify_complex_frame(geomlin::complex_complement(zg, n), j);
    const Body shadow = bodies::project(k, gperp);
    if (shadow.is_empty()) return 0.0;
    auto [lo, hi] = shadow.bounding_box();
    VectorXd x(gperp.dim());
    double weight = 1.0;
    for (int i = 0; i < gperp.dim(); ++i) {
      x[i] = rs.uniform(lo[i], hi[i]);
      weight *= std::max(0.0, hi[i] - lo[i]);
    }
    const geomlin::AffineFlat flat(g, gperp.embed(x), weight);
    const Body sec = bodies::section(k, flat);
    if (sec.is_empty()) return 0.0;
    return weight * valuations::eval_U(val_k, val_p, sec, ComplexStructure(q),
                                       rs.substream(1), n_inner, 2048)
                        .value;
  });
}

ConstantFit solve_gamma(int n, int val_k, int val_p, int q,
                        const std::vector<Body>& test_bodies, RandomStream rng,
                        long long n_outer, long long n_inner) {
  const ComplexStructure j(n);
  const int k_rhs = val_k + 2 * (n - q);
  // Identifiable unknowns: the U_{k',p'} with p' in the basis index range.
  std::vector<std::vector<int>> index;
  for (int p = 0; 2 * p <= std::min(k_rhs, 2 * n - k_rhs); ++p)
    index.push_back({p});
  const int cols = int(index.size());

  UCache cache;
  MatrixXd a(int(test_bodies.size()), cols), a_sig(int(test_bodies.size()), cols);
  VectorXd y(int(test_bodies.size())), y_sig(int(test_bodies.size()));
  for (int i = 0; i < int(test_bodies.size()); ++i) {
    const Estimate lhs =
        complex_crofton_lhs(test_bodies[i], val_k, val_p, q, j,
                            rng.substream(900 + i), n_outer, n_inner);
    y[i] = lhs.value;
    y_sig[i] = lhs.std_error;
    for (int c = 0; c < cols; ++c) {
      const Estimate u = cache.get(test_bodies[i], n, k_rhs, index[c][0],
                                   rng.substream(4), n_outer);
      a(i, c) = u.value;
      a_sig(i, c) = u.std_error;
    }
  }
  WlsFit fit = fit_with_design_noise(a, a_sig, y, y_sig);
  if (fit.condition > 1e6)
    throw std::runtime_error(
        "solve_gamma: ill-conditioned design; use more diverse bodies");
  ConstantFit out;
  out.index = index;
  out.values = fit.coef;
  out.covariance = fit.cov;
  out.residual = fit.residual_rel;
  out.condition = fit.condition;
  out.convention = std::string(intrinsic::kConvention) +
                   ";CAGr=probCGrxLebesgue;rhs=basis-range";
  return out;
}

Estimate c2_phi(const Body& k, RandomStream rng, long long n_samples,
                long long angle_samples) {
  if (k.ambient_dim() != 4)
    throw std::invalid_argument("c2_phi: body must live in R^4");
  if (k.is_empty()) return Estimate::exact(0.0, rng.seed());
  const ComplexStructure j(2);
  return body_projected_volume_mean(
      k, rng, n_samples, angle_samples,
      [&](RandomStream& rs) { return geomlin::sample_complex_subspace(1, j, rs); });
}

Estimate c2_psi(const Body& k, RandomStream rng, long long n_samples,
                long long angle_samples) {
  if (k.ambient_dim() != 4)
    throw std::invalid_argument("c2_psi: body must live in R^4");
  if (k.is_empty()) return Estimate::exact(0.0, rng.seed());
  const ComplexStructure j(2);
  return body_projected_volume_mean(
      k, rng, n_samples, angle_samples,
      [&](RandomStream& rs) { return geomlin::sample_lagrangian(j, rs); });
}

ValuationEvaluator make_c2_phi(std::uint64_t seed, long long n_samples) {
  return ValuationEvaluator{"phi", 2, [=](const Body& k) -> Estimate {
                              return c2_phi(k, RandomStream(seed, k.digest()),
                                            n_samples);
                            }};
}

ValuationEvaluator make_c2_psi(std::uint64_t seed, long long n_samples) {
  return ValuationEvaluator{"psi", 2, [=](const Body& k) -> Estimate {
                              return c2_psi(k, RandomStream(seed, k.digest()),
                                            n_samples);
                            }};
}

C2IdentityReport verify_c2_identity(const std::vector<Body>& test_bodies,
                                    RandomStream rng, long long n_samples) {
  C2IdentityReport rep;
  for (int i = 0; i < int(test_bodies.size()); ++i) {
    const Body& k = test_bodies[i];
    const Estimate phi = c2_phi(k, rng.substream(3 * i), n_samples);
    const Estimate psi = c2_psi(k, rng.substream(3 * i + 1), n_samples);
    const Estimate v2 =
        intrinsic::intrinsic_volume(k, 2, rng.substream(3 * i + 2), 65536);
    const double delta = phi.value + 2.0 * psi.value - v2.value;
    const double sigma =
        std::sqrt(phi.std_error * phi.std_error +
                  4.0 * psi.std_error * psi.std_error +
                  v2.std_error * v2.std_error);
    // The absolute floor covers exact zero-variance chains (e.g. balls).
    const bool pass =
        std::abs(delta) <= 3.0 * sigma + 1e-9 * std::max(1.0, v2.value) &&
        sigma <= 0.01 * std::abs(v2.value);
    rep.rows.push_back({phi.value, psi.value, v2.value, delta, sigma, pass});
    rep.pass = rep.pass && pass;
  }
  return rep;
}

// --- stock fit families --------------------------------------------------------

namespace {

MatrixXd haar_orthogonal(int d, RandomStream& rng) {
  MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int l = 0; l < d; ++l) g(i, l) = rng.gaussian();
  Eigen::HouseholderQR<MatrixXd> qr(g);
  MatrixXd q = qr.householderQ();
  MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i)
    if (r(i, i) < 0) q.col(i) = -q.col(i);
  return q;
}

VectorXd vec4(double a, double b, double c, double d) {
  VectorXd v(4);
  v << a, b, c, d;
  return v;
}

}  // namespace

std::vector<Body> c2_fit_bodies(RandomStream rng) {
  std::vector<Body> out;
  out.push_back(Body(Ball{VectorXd::Zero(4), 1.0}));
  out.push_back(Body(Ball{vec4(0.3, -0.2, 0.1, 0.0), 0.65}));
  out.push_back(Body(bodies::make_box(vec4(0, 0, 0, 0), vec4(1.3, 0.9, 1.1, 0.7))));
  out.push_back(Body(Polytope(
      bodies::make_box(vec4(-0.6, -0.6, -0.6, -0.6), vec4(0.6, 0.6, 0.6, 0.6))
          .vertices() *
      haar_orthogonal(4, rng).transpose())));
  out.push_back(Body(Polytope(bodies::make_simplex(4).vertices() * 1.7)));
  out.push_back(Body(Polytope(bodies::make_cross_polytope(4, 1.1).vertices() *
                              haar_orthogonal(4, rng).transpose())));
  // Complex-line-aligned slab: long in (x1, y1).
  out.push_back(Body(bodies::make_box(vec4(0, 0, 0, 0), vec4(1.5, 0.3, 1.5, 0.3))));
  // Lagrangian-aligned slab: long in (x1, x2).
  out.push_back(Body(bodies::make_box(vec4(0, 0, 0, 0), vec4(1.5, 1.5, 0.3, 0.3))));
  out.push_back(Body(ParallelBody{
      bodies::make_segment(vec4(0, 0, 0, 0), vec4(0.9, 0.6, 0.4, 0.8)), 0.5}));
  out.push_back(Body(Polytope(bodies::make_simplex(4).vertices() *
                                  haar_orthogonal(4, rng).transpose() *
                                  1.4)));
  return out;
}

std::vector<std::pair<Body, Body>> kappa_fit_pairs(RandomStream rng) {
  const Body ball1(Ball{VectorXd::Zero(4), 1.0});
  const Body ball2(Ball{VectorXd::Zero(4), 0.6});
  const Body box(bodies::make_box(vec4(0, 0, 0, 0), vec4(1.2, 0.8, 1.0, 0.9)));
  const Body boxrot(Polytope(
      bodies::make_box(vec4(-0.5, -0.5, -0.5, -0.5), vec4(0.5, 0.5, 0.5, 0.5))
          .vertices() *
      haar_orthogonal(4, rng).transpose()));
  const Body simplex(Polytope(bodies::make_simplex(4).vertices() * 1.6));
  const Body simplexrot(Polytope(bodies::make_simplex(4).vertices() * 1.3 *
                                 haar_orthogonal(4, rng).transpose()));
  const Body cross(bodies::make_cross_polytope(4, 1.0));
  const Body crossrot(Polytope(bodies::make_cross_polytope(4, 0.8).vertices() *
                               haar_orthogonal(4, rng).transpose()));
  const Body slab_c(bodies::make_box(vec4(0, 0, 0, 0), vec4(1.5, 0.3, 1.5, 0.3)));
  const Body slab_l(bodies::make_box(vec4(0, 0, 0, 0), vec4(1.5, 1.5, 0.3, 0.3)));
  const Body rounded_seg(ParallelBody{
      bodies::make_segment(vec4(0, 0, 0, 0), vec4(0.9, 0.6, 0.4, 0.8)), 0.5});

  std::vector<std::pair<Body, Body>> pairs;
  pairs.emplace_back(ball1, ball2);
  pairs.emplace_back(ball1, ball1);
  pairs.emplace_back(box, ball1);
  pairs.emplace_back(simplex, ball2);
  pairs.emplace_back(cross, ball1);
  pairs.emplace_back(slab_c, ball2);
  pairs.emplace_back(slab_l, ball2);
  pairs.emplace_back(rounded_seg, ball1);
  pairs.emplace_back(box, simplex);
  pairs.emplace_back(simplex, crossrot);
  pairs.emplace_back(slab_c, simplexrot);
  pairs.emplace_back(slab_l, crossrot);
  pairs.emplace_back(boxrot, simplex);
  pairs.emplace_back(cross, simplexrot);
  return pairs;
}

std::vector<Body> gamma_fit_bodies(RandomStream rng) {
  VectorXd z6 = VectorXd::Zero(6);
  std::vector<Body> out;
  out.push_back(Body(Ball{z6, 1.0}));
  out.push_back(Body(Ball{z6, 0.75}));
  VectorXd hi1(6), hi2(6);
  hi1 << 1.2, 0.9, 1.0, 0.8, 1.1, 0.7;
  hi2 << 1.4, 0.5, 0.6, 1.3, 0.5, 1.2;
  out.push_back(Body(bodies::make_box(z6, hi1)));
  out.push_back(Body(bodies::make_box(z6, hi2)));
  out.push_back(Body(Polytope(bodies::make_simplex(6).vertices() * 1.8)));
  out.push_back(Body(Polytope(bodies::make_simplex(6).vertices() * 1.5 *
                              haar_orthogonal(6, rng).transpose())));
  return out;
}

}  // namespace hermval::kinematics
