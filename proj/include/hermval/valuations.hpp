#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hermval/bodies.hpp"
#include "hermval/estimate.hpp"
#include "hermval/intrinsic.hpp"

namespace hermval::valuations {

using bodies::Body;
using geomlin::ComplexStructure;
using geomlin::Subspace;

// A named translation-invariant valuation with a fixed homogeneity degree.
// evaluate() is deterministic: randomness derives from the captured seed and
// a digest of the body.
struct ValuationEvaluator {
  std::string name;
  int degree = 0;
  std::function<Estimate(const Body&)> evaluate;
};

// Klain image of an even valuation: evaluator on Grassmannian subspaces.
struct KlainFunction {
  int degree = 0;
  int ambient = 0;
  std::function<Estimate(const Subspace&)> eval;
};

// --- Direct evaluations ------------------------------------------------------

// C_{k,l}(K) = E_{F ~ Haar CGr_{l,n}} [ V_k(Pr_F K) ].
Estimate eval_C(int k, int l, const Body& k_body, const ComplexStructure& j,
                RandomStream rng, long long n_samples,
                long long angle_samples = 8192);

// U_{k,p}(K) = E_{F ~ Haar CGr_{p,n}} [ boxvol(Pr_F K) *
//              V_{k-2p}(K cap (x + F^perp)) ], x uniform in the box.
Estimate eval_U(int k, int p, const Body& k_body, const ComplexStructure& j,
                RandomStream rng, long long n_samples,
                long long angle_samples = 8192);

// Kazarnovskii pseudovolume: sum over n-faces of gamma(F) vol_n(F) f(F),
// f(F) = vol(D_L + J D_L) inside span(L + JL), by hit-or-miss with
// alternating-projection membership.  kappa convention: 1.
Estimate kazarnovskii(const bodies::Polytope& p, const ComplexStructure& j,
                      RandomStream rng, long long n_samples,
                      long long angle_samples = 16384);

// The face weight f(F) alone, for a face direction L.
Estimate kaz_face_weight(const Subspace& l, const ComplexStructure& j,
                         RandomStream rng, long long n_samples);

// --- Evaluator factories -----------------------------------------------------

ValuationEvaluator make_chi(int ambient_dim);
ValuationEvaluator make_vol(int ambient_dim);
ValuationEvaluator make_intrinsic(int ambient_dim, int degree,
                                  std::uint64_t seed,
                                  long long angle_samples = 20000);
ValuationEvaluator make_C(int n, int k, int l, std::uint64_t seed,
                          long long n_samples, long long angle_samples = 8192);
ValuationEvaluator make_U(int n, int k, int p, std::uint64_t seed,
                          long long n_samples, long long angle_samples = 8192);
ValuationEvaluator make_kaz(int n, std::uint64_t seed, long long n_samples,
                            long long angle_samples = 16384);

// --- Klain machinery ---------------------------------------------------------

// f(E) = phi(Q_E) / vol_k(Q_E) with Q_E the unit k-cube spanned by E's frame.
KlainFunction klain_function(const ValuationEvaluator& phi, int ambient_dim);

// D: f |-> f o perp.
KlainFunction duality(const KlainFunction& f);

// Cosine transform T_{j,i}: (Tf)(F) = E_{E ~ Haar Gr_i} |cos(E,F)| f(E).
KlainFunction cosine_transform(const KlainFunction& f, int j_dim, int i_dim,
                               RandomStream rng, long long n_samples);

// Hard Lefschetz operator: d/deps at 0 of phi(K + eps D), via a
// variance-weighted polynomial fit at Chebyshev eps nodes.
Estimate lambda_op(const ValuationEvaluator& phi, const Body& k,
                   RandomStream rng);

// --- Structure reports -------------------------------------------------------

struct RatioReport {
  double mean_ratio = 0.0;
  double rel_spread = 0.0;  // (max - min) / |mean|
  int excluded = 0;
  std::vector<double> ratios;
  std::vector<double> sigmas;
};

// Proposition-style ratio check: klain(U_{k,p})(L) / klain(C_{2n-k,n-p})(L^perp)
// over Haar k-planes L.
RatioReport verify_U_equals_dual_C(int k, int p, int n, RandomStream rng,
                                   long long n_samples,
                                   int n_subspaces = 20);

struct GramReport {
  int k = 0;
  int expected_rank = 0;
  int rank = 0;
  double gap = 0.0;  // smallest retained sv over noise floor / next sv
  Eigen::VectorXd singular_values;
};

// Numerical rank of the sampled Klain Gram matrix of {U_{k,p}} over the
// basis index range, at Haar subspaces.
GramReport gram_rank(int n, int k, RandomStream rng, long long n_samples,
                     int n_subspaces = 40);

}  // namespace hermval::valuations
