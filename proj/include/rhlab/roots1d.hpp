#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <gmpxx.h>

#include "rhlab/ensembles.hpp"
#include "rhlab/stats.hpp"

namespace rhlab::roots1d {

struct RootCountResult {
    int count = 0;
    int degree = 0;
    bool is_exact = true;
};

// Sturm sequence p0 = P, p1 = P', p_{i+1} = -rem(p_{i-1}, p_i). Each element is
// stored as a primitive integer polynomial, i.e. the exact rational element
// scaled by a positive constant, which leaves every sign variation unchanged.
struct SturmChain {
    std::vector<std::vector<mpz_class>> polys;  // low-to-high coefficients
    int variations_at_pos_inf() const;
    int variations_at_neg_inf() const;
};

struct ExpectationEstimate : Estimate {
    EnsembleSpec spec;
    std::int64_t exact_fallbacks = 0;  // trials resolved by the Sturm chain
};

// Coefficients are low-to-high: P(x) = sum a[k] x^k.
SturmChain build_sturm_chain(std::span<const double> a);

// Exact distinct-real-root count via the Sturm chain.
RootCountResult count_real_roots(std::span<const double> a);

// Same count; first tries floating-point root approximations certified by
// disjoint Gerschgorin inclusion discs, and falls back to the Sturm chain when
// certification fails. *used_fallback is set accordingly.
RootCountResult count_real_roots_fast(std::span<const double> a, bool* used_fallback = nullptr);

// Inclusion-disc certification alone; returns -1 when not certified. A failed
// double-precision attempt is retried in long double unless extended_retry is false.
int certified_real_root_count(std::span<const double> a, bool extended_retry = true);

// Univariate coefficients of a two-variable sample: a[k] multiplies x^k.
std::vector<double> affine_coefficients(const HomogeneousPolynomial& q);

ExpectationEstimate expected_roots_mc(const EnsembleSpec& spec, std::int64_t trials);
ExpectationEstimate expected_roots_mc_serial(const EnsembleSpec& spec, std::int64_t trials);

// Speed of the normalized moment curve t -> g(t)/|g(t)|, g_k(t) = w_k t^k.
double gamma_speed(const EnsembleSpec& spec, double t);

// (1/pi) * length of the normalized moment curve, by adaptive quadrature.
double expected_roots_crofton(const EnsembleSpec& spec);

}  // namespace rhlab::roots1d
