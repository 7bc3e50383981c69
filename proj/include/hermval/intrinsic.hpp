#pragma once

#include <vector>

#include "hermval/bodies.hpp"
#include "hermval/estimate.hpp"
#include "hermval/random.hpp"

namespace hermval::intrinsic {

// Convention stamp carried by every emitted result.
inline constexpr const char* kConvention = "V0=chi;Haar=prob;dx=Lebesgue";

// Volume of the unit m-ball via the Gamma recurrence.
double kappa(int m);

// V_j of a radius-r ball in R^d: C(d,j) * kappa_d / kappa_{d-j} * r^j.
double ball_intrinsic_volume(int d, int j, double r);

// Intrinsic volume V_j.  Polytopes use the face/external-angle formula
// (exact for j = dim, dim-1, 0); balls the closed form; outer-parallel
// bodies the Steiner coefficient expansion of V_j(K + eps D) in terms of
// V_m(K).  Empty bodies give exact 0.
Estimate intrinsic_volume(const bodies::Body& k, int j, RandomStream rng,
                          long long angle_samples = 20000);

// Hit-or-miss Steiner oracle: samples vol(P + eps D) at intrinsic_dim+1
// Chebyshev eps nodes (shared sample set), solves for all V_j.  With
// extra_degree > 0 the fit carries spurious higher-degree terms whose
// coefficients should vanish.
std::vector<Estimate> steiner_oracle(const bodies::Polytope& p,
                                     RandomStream rng, long long n,
                                     int extra_degree = 0);

// Kubota mean-projection oracle: c(d,j) * E[ vol_j(Pr_E K) ] over Haar
// Gr_j; the constant is calibrated so the unit ball is exact.
Estimate kubota_oracle(const bodies::Body& k, int j, RandomStream rng,
                       long long n);

}  // namespace hermval::intrinsic
