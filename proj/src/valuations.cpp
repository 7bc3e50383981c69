#include "hermval/valuations.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "hermval/parallel.hpp"
#include "hermval/wls.hpp"

namespace hermval::valuations {

using bodies::Ball;
using bodies::ParallelBody;
using bodies::Polytope;
using geomlin::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

bool body_contains(const Body& b, const VectorXd& x) {
  if (b.is_empty()) return false;
  if (const Polytope* p = b.polytope()) return p->contains(x);
  if (const Ball* bl = b.ball()) return (x - bl->center).norm() <= bl->radius;
  const ParallelBody* pb = b.parallel();
  return bodies::distance(pb->polytope, x) <= pb->eps;
}

Body inflate(const Body& k, double eps) {
  if (eps == 0.0) return k;
  if (k.is_empty()) throw std::invalid_argument("inflate: empty body");
  if (const Polytope* p = k.polytope()) return Body(ParallelBody{*p, eps});
  if (const Ball* b = k.ball()) return Body(Ball{b->center, b->radius + eps});
  const ParallelBody* pb = k.parallel();
  return Body(ParallelBody{pb->polytope, pb->eps + eps});
}

}  // namespace

Estimate eval_C(int k, int l, const Body& k_body, const ComplexStructure& j,
                RandomStream rng, long long n_samples,
                long long angle_samples) {
  const int n = j.n;
  if (k < 0 || k > 2 * n || 2 * l < k || l > n)
    throw std::invalid_argument("eval_C: need 0 <= k <= 2n and k/2 <= l <= n");
  if (k_body.ambient_dim() != 2 * n)
    throw std::invalid_argument("eval_C: body dimension is not 2n");
  if (k_body.is_empty()) return Estimate::exact(0.0, rng.seed());
  if (k == 0) return Estimate::exact(1.0, rng.seed());
  if (l == n)  // projection onto the whole space
    return intrinsic::intrinsic_volume(k_body, k, rng, angle_samples);

  return mc::mean_estimate(n_samples, rng, [&](RandomStream& rs) -> double {
    const Subspace f = geomlin::sample_complex_subspace(l, j, rs);
    const Body proj = bodies::project(k_body, f);
    return intrinsic::intrinsic_volume(proj, k, rs.substream(1), angle_samples)
        .value;
  });
}

Estimate eval_U(int k, int p, const Body& k_body, const ComplexStructure& j,
                RandomStream rng, long long n_samples,
                long long angle_samples) {
  const int n = j.n;
  if (p < 0 || 2 * p > k || k > 2 * n)
    throw std::invalid_argument("eval_U: need 0 <= 2p <= k <= 2n");
  if (k_body.ambient_dim() != 2 * n)
    throw std::invalid_argument("eval_U: body dimension is not 2n");
  if (k_body.is_empty()) return Estimate::exact(0.0, rng.seed());
  if (p == 0)  // the single flat is the whole space
    return intrinsic::intrinsic_volume(k_body, k, rng, angle_samples);
  if (k_body.parallel() && k > 2 * p)
    throw std::invalid_argument(
        "eval_U: sections of outer-parallel bodies are not supported");

  return mc::mean_estimate(n_samples, rng, [&](RandomStream& rs) -> double {
    const MatrixXcd zf = geomlin::sample_complex_frame(p, n, rs);
    const Subspace f = geomlin::realify_complex_frame(zf, j);
    const Body proj = bodies::project(k_body, f);
    if (proj.is_empty()) return 0.0;
    auto [lo, hi] = proj.bounding_box();
    VectorXd x(2 * p);
    double weight = 1.0;
    for (int i = 0; i < 2 * p; ++i) {
      x[i] = rs.uniform(lo[i], hi[i]);
      weight *= std::max(0.0, hi[i] - lo[i]);
    }
    if (k == 2 * p)  // V_0 of the section: membership of x in the shadow
      return body_contains(proj, x) ? weight : 0.0;
    const Subspace fperp =
        geomlin::realify_complex_frame(geomlin::complex_complement(zf, n), j);
    const geomlin::AffineFlat flat(fperp, f.embed(x), weight);
    const Body sec = bodies::section(k_body, flat);
    return weight *
           intrinsic::intrinsic_volume(sec, k - 2 * p, rs.substream(1),
                                       angle_samples)
               .value;
  });
}

Estimate kaz_face_weight(const Subspace& l, const ComplexStructure& j,
                         RandomStream rng, long long n_samples) {
  const int d = l.ambient_dim();
  const int n = l.dim();
  MatrixXd stacked(2 * n, d);
  stacked.topRows(n) = l.frame();
  for (int i = 0; i < n; ++i)
    stacked.row(n + i) = j.apply(l.frame().row(i).transpose()).transpose();
  Eigen::JacobiSVD<MatrixXd> svd(stacked, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  int w = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-9 * sv[0]) ++w;
  MatrixXd wbasis = svd.matrixV().leftCols(w).transpose();  // w x d

  const MatrixXd bl = l.frame();
  MatrixXd bjl(n, d);
  for (int i = 0; i < n; ++i)
    bjl.row(i) = j.apply(l.frame().row(i).transpose()).transpose();

  auto clip_ball = [](const MatrixXd& basis, const VectorXd& v) -> VectorXd {
    VectorXd y = basis * v;
    const double norm = y.norm();
    if (norm > 1.0) y /= norm;
    return basis.transpose() * y;
  };

  double boxvol = std::pow(4.0, w);
  Estimate hit = mc::mean_estimate(
      n_samples, rng, [&](RandomStream& rs) -> double {
        VectorXd xt(w);
        for (int i = 0; i < w; ++i) xt[i] = rs.uniform(-2.0, 2.0);
        const VectorXd x = wbasis.transpose() * xt;
        // Alternating projections onto D_L and D_JL decide membership in the
        // Minkowski sum.
        VectorXd a = VectorXd::Zero(d), b = VectorXd::Zero(d);
        double prev = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 5000; ++it) {
          a = clip_ball(bl, x - b);
          b = clip_ball(bjl, x - a);
          const double r = (x - a - b).norm();
          if (r <= 1e-8) return 1.0;
          if (prev - r < 1e-12) return 0.0;  // stalled at positive distance
          prev = r;
        }
        throw std::runtime_error(
            "kaz_face_weight: alternating projections did not converge");
      });
  return hit.scaled(boxvol);
}

Estimate kazarnovskii(const Polytope& p, const ComplexStructure& j,
                      RandomStream rng, long long n_samples,
                      long long angle_samples) {
  const int n = j.n;
  if (p.ambient_dim() != 2 * n)
    throw std::invalid_argument("kazarnovskii: polytope dimension is not 2n");
  if (p.intrinsic_dim() < n) return Estimate::exact(0.0, rng.seed());

  double val = 0.0, var = 0.0;
  long long ns = 0;
  for (int i = 0; i < p.num_faces(n); ++i) {
    const bodies::Face face = p.face(n, i);
    const Estimate gamma = bodies::external_angle(
        p, face, rng.substream(2 * std::uint64_t(i)), angle_samples);
    const Estimate fw = kaz_face_weight(
        face.direction, j, rng.substream(2 * std::uint64_t(i) + 1), n_samples);
    const double vol = p.face_volume(n, i);
    val += gamma.value * vol * fw.value;
    var += vol * vol *
           (gamma.value * gamma.value * fw.std_error * fw.std_error +
            fw.value * fw.value * gamma.std_error * gamma.std_error);
    ns = std::max({ns, gamma.samples, fw.samples});
  }
  return Estimate{val, std::sqrt(var), ns, rng.seed()};
}

// --- factories ---------------------------------------------------------------

ValuationEvaluator make_chi(int ambient_dim) {
  return ValuationEvaluator{
      "chi", 0, [ambient_dim](const Body& k) -> Estimate {
        if (k.ambient_dim() != ambient_dim)
          throw std::invalid_argument("chi: dimension mismatch");
        return Estimate::exact(k.is_empty() ? 0.0 : 1.0);
      }};
}

ValuationEvaluator make_vol(int ambient_dim) {
  return ValuationEvaluator{
      "vol", ambient_dim, [ambient_dim](const Body& k) -> Estimate {
        return intrinsic::intrinsic_volume(k, ambient_dim,
                                           RandomStream(0, k.digest()), 1024);
      }};
}

ValuationEvaluator make_intrinsic(int ambient_dim, int degree,
                                  std::uint64_t seed,
                                  long long angle_samples) {
  return ValuationEvaluator{
      "V_" + std::to_string(degree), degree,
      [=](const Body& k) -> Estimate {
        return intrinsic::intrinsic_volume(k, degree,
                                           RandomStream(seed, k.digest()),
                                           angle_samples);
      }};
}

ValuationEvaluator make_C(int n, int k, int l, std::uint64_t seed,
                          long long n_samples, long long angle_samples) {
  return ValuationEvaluator{
      "C_{" + std::to_string(k) + "," + std::to_string(l) + "}", k,
      [=](const Body& body) -> Estimate {
        return eval_C(k, l, body, ComplexStructure(n),
                      RandomStream(seed, body.digest()), n_samples,
                      angle_samples);
      }};
}

ValuationEvaluator make_U(int n, int k, int p, std::uint64_t seed,
                          long long n_samples, long long angle_samples) {
  return ValuationEvaluator{
      "U_{" + std::to_string(k) + "," + std::to_string(p) + "}", k,
      [=](const Body& body) -> Estimate {
        return eval_U(k, p, body, ComplexStructure(n),
                      RandomStream(seed, body.digest()), n_samples,
                      angle_samples);
      }};
}

ValuationEvaluator make_kaz(int n, std::uint64_t seed, long long n_samples,
                            long long angle_samples) {
  return ValuationEvaluator{
      "kaz", n, [=](const Body& body) -> Estimate {
        const Polytope* p = body.polytope();
        if (!p)
          throw std::invalid_argument(
              "kazarnovskii is defined here for polytopes");
        return kazarnovskii(*p, ComplexStructure(n),
                            RandomStream(seed, body.digest()), n_samples,
                            angle_samples);
      }};
}

// --- Klain machinery ---------------------------------------------------------

KlainFunction klain_function(const ValuationEvaluator& phi, int ambient_dim) {
  return KlainFunction{
      phi.degree, ambient_dim,
      [phi, ambient_dim](const Subspace& e) -> Estimate {
        if (e.ambient_dim() != ambient_dim)
          throw std::invalid_argument("klain: ambient dimension mismatch");
        if (e.dim() != phi.degree)
          throw std::invalid_argument(
              "klain: subspace dimension differs from valuation degree");
        // Unit cube probe: vol_k(Q_E) = 1.
        return phi.evaluate(Body(bodies::make_cube_in_subspace(e)));
      }};
}

KlainFunction duality(const KlainFunction& f) {
  return KlainFunction{f.ambient - f.degree, f.ambient,
                       [f](const Subspace& e) -> Estimate {
                         return f.eval(e.orthogonal_complement());
                       }};
}

KlainFunction cosine_transform(const KlainFunction& f, int j_dim, int i_dim,
                               RandomStream rng, long long n_samples) {
  const int d = f.ambient;
  if (f.degree != i_dim)
    throw std::invalid_argument("cosine_transform: f must live on Gr_i");
  return KlainFunction{
      j_dim, d, [=](const Subspace& big_f) -> Estimate {
        RandomStream stream = rng.substream(big_f.digest());
        return mc::mean_estimate(
            n_samples, stream, [&](RandomStream& rs) -> double {
              const Subspace e = geomlin::sample_subspace(i_dim, d, rs);
              return geomlin::cosine_angle(e, big_f) * f.eval(e).value;
            });
      }};
}

Estimate lambda_op(const ValuationEvaluator& phi, const Body& k,
                   RandomStream rng) {
  if (k.is_empty()) throw std::invalid_argument("lambda_op: empty body");
  const int d = k.ambient_dim();
  auto [lo, hi] = k.bounding_box();
  const double radius = 0.5 * (hi - lo).norm();
  const double eps_max = 0.5 * std::max(radius, 1e-3);

  const int nodes = d + 1;
  VectorXd eps(nodes), y(nodes), sig(nodes);
  for (int i = 0; i < nodes; ++i) {
    const double t = std::cos((2.0 * i + 1.0) * M_PI / (2.0 * nodes));
    eps[i] = eps_max * (0.525 + 0.475 * t);  // inside (0.05, 1] * eps_max
  }
  long long ns = 0;
  for (int i = 0; i < nodes; ++i) {
    const Estimate e = phi.evaluate(inflate(k, eps[i]));
    y[i] = e.value;
    sig[i] = e.std_error;
    ns = std::max(ns, e.samples);
  }
  // phi(K + eps D) is a polynomial of degree <= d in eps (McMullen); fit in
  // the scaled variable and read off the derivative at 0.
  MatrixXd design(nodes, d + 1);
  for (int i = 0; i < nodes; ++i) {
    const double t = eps[i] / eps_max;
    double pw = 1.0;
    for (int j = 0; j <= d; ++j) {
      design(i, j) = pw;
      pw *= t;
    }
  }
  WlsFit fit = wls_fit(design, y, sig);
  if (fit.condition > 1e8)
    throw std::runtime_error("lambda_op: ill-conditioned polynomial fit");
  return Estimate{fit.coef[1] / eps_max,
                  std::sqrt(std::max(0.0, fit.cov(1, 1))) / eps_max, ns,
                  rng.seed()};
}

// --- structure reports --------------------------------------------------------

RatioReport verify_U_equals_dual_C(int k, int p, int n, RandomStream rng,
                                   long long n_samples, int n_subspaces) {
  if (2 * p > k || k > n)
    throw std::invalid_argument("verify_U_equals_dual_C: need 2p <= k <= n");
  const ValuationEvaluator u = make_U(n, k, p, rng.substream(1).stream_id(),
                                      n_samples);
  const ValuationEvaluator c =
      make_C(n, 2 * n - k, n - p, rng.substream(2).stream_id(), n_samples);
  const KlainFunction ku = klain_function(u, 2 * n);
  const KlainFunction kc = klain_function(c, 2 * n);

  RatioReport rep;
  RandomStream sub = rng.substream(3);
  for (int i = 0; i < n_subspaces; ++i) {
    RandomStream rs = sub.substream(std::uint64_t(i));
    const Subspace l = geomlin::sample_subspace(k, 2 * n, rs);
    const Estimate num = ku.eval(l);
    const Estimate den = kc.eval(l.orthogonal_complement());
    if (std::abs(den.value) <= 3.0 * den.std_error) {
      ++rep.excluded;
      continue;
    }
    const double r = num.value / den.value;
    const double sigma =
        std::abs(r) * std::sqrt(std::pow(num.std_error /
                                             std::max(1e-300, std::abs(num.value)),
                                         2) +
                                std::pow(den.std_error / std::abs(den.value),
                                         2));
    rep.ratios.push_back(r);
    rep.sigmas.push_back(sigma);
  }
  if (rep.ratios.empty()) return rep;
  double sum = 0.0, mn = rep.ratios[0], mx = rep.ratios[0];
  for (double r : rep.ratios) {
    sum += r;
    mn = std::min(mn, r);
    mx = std::max(mx, r);
  }
  rep.mean_ratio = sum / double(rep.ratios.size());
  rep.rel_spread = (mx - mn) / std::abs(rep.mean_ratio);
  return rep;
}

GramReport gram_rank(int n, int k, RandomStream rng, long long n_samples,
                     int n_subspaces) {
  if (k < 0 || k > 2 * n) throw std::invalid_argument("gram_rank: bad k");
  const int pmax = std::min(k, 2 * n - k) / 2;
  const int cols = pmax + 1;

  MatrixXd a(n_subspaces, cols);
  double noise_sq = 0.0;
  RandomStream sub = rng.substream(11);
  for (int i = 0; i < n_subspaces; ++i) {
    RandomStream rs = sub.substream(std::uint64_t(i));
    const Subspace l = geomlin::sample_subspace(k, 2 * n, rs);
    for (int p = 0; p <= pmax; ++p) {
      const ValuationEvaluator u =
          make_U(n, k, p, rng.substream(100 + p).stream_id(), n_samples);
      const Estimate e = klain_function(u, 2 * n).eval(l);
      a(i, p) = e.value;
      noise_sq += e.std_error * e.std_error;
    }
  }
  Eigen::JacobiSVD<MatrixXd> svd(a);
  GramReport rep;
  rep.k = k;
  rep.expected_rank = 1 + std::min(k / 2, (2 * n - k) / 2);
  rep.singular_values = svd.singularValues();
  const double noise = std::sqrt(noise_sq);
  int rank = 0;
  for (int i = 0; i < rep.singular_values.size(); ++i)
    if (rep.singular_values[i] >= 10.0 * noise) ++rank;
  rep.rank = rank;
  if (rank > 0) {
    const double next = rank < int(rep.singular_values.size())
                            ? rep.singular_values[rank]
                            : 0.0;
    rep.gap = rep.singular_values[rank - 1] / std::max(noise, next);
  }
  return rep;
}

}  // namespace hermval::valuations
