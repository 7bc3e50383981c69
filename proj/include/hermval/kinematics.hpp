#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hermval/valuations.hpp"

namespace hermval::kinematics {

using bodies::Body;
using geomlin::ComplexStructure;

// Result of a least-squares constant estimation.
struct ConstantFit {
  std::vector<std::vector<int>> index;  // (k1,k2,p1,p2) rows or (p) rows
  Eigen::VectorXd values;
  Eigen::MatrixXd covariance;
  double residual = 0.0;   // relative l2 residual on the training set
  double condition = 0.0;  // of the weighted design matrix
  std::string convention;
};

struct KinematicLhs {
  Estimate value;
  std::string method;  // "exact", "minkowski", "steiner-mc"
};

// LHS of the principal kinematic formula: the IU(n) integral of
// chi(K1 cap U K2) under probability Haar on U(n) and Lebesgue translations;
// for convex bodies the translation integral is vol(K1 + (-rho K2)).
KinematicLhs principal_kinematic_lhs(const Body& k1, const Body& k2,
                                     const ComplexStructure& j,
                                     RandomStream rng, long long n_samples,
                                     long long angle_samples = 8192);

ConstantFit solve_kappa(int n, const std::vector<std::pair<Body, Body>>& pairs,
                        RandomStream rng, long long n_samples);

// LHS of the affine Lagrangian Crofton formula: mean over Haar LGr of the
// projection volume onto F^perp.
Estimate lagrangian_crofton_lhs(const Body& k, const ComplexStructure& j,
                                RandomStream rng, long long n_samples,
                                long long angle_samples = 8192);

ConstantFit solve_beta(int n, const std::vector<Body>& test_bodies,
                       RandomStream rng, long long n_samples);

// LHS of the complex-flat Crofton formula: integral over affine complex
// q-flats of U_{k,p} of the section (evaluated in the flat's C^q).
Estimate complex_crofton_lhs(const Body& k, int val_k, int val_p, int q,
                             const ComplexStructure& j, RandomStream rng,
                             long long n_outer, long long n_inner);

ConstantFit solve_gamma(int n, int val_k, int val_p, int q,
                        const std::vector<Body>& test_bodies, RandomStream rng,
                        long long n_outer, long long n_inner);

// phi: mean projection area onto complex lines of C^2; psi: onto Lagrangian
// planes.  Probability Haar throughout.
Estimate c2_phi(const Body& k, RandomStream rng, long long n_samples,
                long long angle_samples = 8192);
Estimate c2_psi(const Body& k, RandomStream rng, long long n_samples,
                long long angle_samples = 8192);

valuations::ValuationEvaluator make_c2_phi(std::uint64_t seed,
                                           long long n_samples);
valuations::ValuationEvaluator make_c2_psi(std::uint64_t seed,
                                           long long n_samples);

struct C2IdentityReport {
  struct Row {
    double phi, psi, v2, delta, sigma;
    bool pass;
  };
  std::vector<Row> rows;
  bool pass = true;
};

// phi + 2 psi - V_2 per body, with combined standard errors.
C2IdentityReport verify_c2_identity(const std::vector<Body>& test_bodies,
                                    RandomStream rng, long long n_samples);

// --- Stock fit families -------------------------------------------------------

// Bodies in R^4 chosen to break U(2)-moment degeneracies: balls, boxes,
// rotated boxes, simplices, cross-polytopes, complex-line- and
// Lagrangian-aligned slabs, segment + ball.
std::vector<Body> c2_fit_bodies(RandomStream rng);

// Pairs for the kappa fit; partners of non-polytope bodies are balls so every
// LHS has an exact or single-evaluation path.
std::vector<std::pair<Body, Body>> kappa_fit_pairs(RandomStream rng);

// Bodies in R^6 with cheap sections (balls, boxes, simplices).
std::vector<Body> gamma_fit_bodies(RandomStream rng);

}  // namespace hermval::kinematics
