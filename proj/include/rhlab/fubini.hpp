#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "rhlab/ensembles.hpp"
#include "rhlab/stats.hpp"

namespace rhlab::fubini {

// Unit-norm homogeneous coordinates, first nonzero coordinate made positive real.
class ProjectivePoint {
public:
    static ProjectivePoint from_real(std::span<const double> v);
    static ProjectivePoint from_complex(std::span<const std::complex<double>> v);
    static ProjectivePoint from_chart(std::span<const double> x);  // [1 : x1 : ... : xn]
    static ProjectivePoint origin(int n);

    int n() const { return static_cast<int>(homog_.size()) - 1; }
    bool is_real() const { return real_; }
    int chart() const { return chart_; }
    std::span<const std::complex<double>> homog() const { return homog_; }
    std::vector<double> real_coords() const;  // throws InvalidArgument unless real
    bool same_point(const ProjectivePoint& o, double tol = 1e-12) const;

private:
    std::vector<std::complex<double>> homog_;
    int chart_ = 0;
    bool real_ = true;
};

// |Q(v)|^2 / |v|^(2d), independent of the representative v.
double fs_pointwise_norm_sq(const HomogeneousPolynomial& q, const ProjectivePoint& x);
double fs_pointwise_norm_sq(const HomogeneousPolynomial& q, std::span<const double> v);
// log of the above, evaluated in extended precision so large d does not underflow.
double fs_log_pointwise_norm_sq(const HomogeneousPolynomial& q, std::span<const double> v);

// L^2 norm over CP^n for the Fubini-Study volume normalized to total mass 1.
// Toric quadrature for n = 1, 2 (exact up to rounding); Monte Carlo for n = 3.
double fs_l2_norm_sq(const HomogeneousPolynomial& q);
double fs_l2_inner(const HomogeneousPolynomial& a, const HomogeneousPolynomial& b);
// Same product from the coefficients: monomials are orthogonal with |X^a|^2 = a! n! / (d+n)!.
double coefficient_l2_inner(const HomogeneousPolynomial& a, const HomogeneousPolynomial& b);

// Normalized FS distance (line area 1) from [1:0..0] to [1:x]: arctan|x| / sqrt(pi).
double fs_distance_from_origin(std::span<const double> chart_x);
// Chart radius |x| of the normalized-FS sphere of the given radius about the origin.
double chart_radius_of_fs_ball(double fs_radius);

// Fraction of the L^2 mass of q carried by the normalized-FS ball of the given
// radius about center (n = 1, 2).
double l2_mass_fraction(const HomogeneousPolynomial& q, const ProjectivePoint& center, double fs_radius);

// n! * E|P(Z)|^2, Z standard complex Gaussian in C^n (E|Z_j|^2 = 1). This is
// the chart integral (n!/pi^n) int |P(y)|^2 exp(-|y|^2) dy.
double gaussian_normalization(const AffinePolynomial& p);

struct PeakSection {
    AffinePolynomial base_poly;
    int target_degree = 0;
    std::vector<double> rotation;  // (n+1)x(n+1) row-major, first column = x
    double normalization = 0.0;    // sqrt of gaussian_normalization(P)
    HomogeneousPolynomial centered;  // section before relocation, peaks at [1:0..0]
    HomogeneousPolynomial section;   // centered o rotation^{-1}
};

// Orthogonal matrix with first column x (Gram-Schmidt completion), row-major.
std::vector<double> rotation_to(std::span<const double> x);

PeakSection build_peak_section(const AffinePolynomial& p, int d, const ProjectivePoint& x);

Estimate expected_pointwise_value(const EnsembleSpec& spec, const ProjectivePoint& x, std::int64_t trials);
Estimate expected_pointwise_value_serial(const EnsembleSpec& spec, const ProjectivePoint& x, std::int64_t trials);

}  // namespace rhlab::fubini
