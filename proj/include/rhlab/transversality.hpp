#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rhlab/config.hpp"
#include "rhlab/curves2d.hpp"
#include "rhlab/ensembles.hpp"
#include "rhlab/fubini.hpp"
#include "rhlab/stats.hpp"

namespace rhlab::transversality {

// P with compact zero set Sigma in B(0, R); K = {|P| <= delta_K}, U = {|P| < delta_U}, both cut by B(0, R).
struct HypersurfaceModel {
    std::string name;
    AffinePolynomial P{2, 0, {1.0}};
    int n = 2;
    double R = 2.0;
    double delta_K = 0.2;
    double delta_U = 0.4;
    curves2d::SigmaSpec sigma;

    static HypersurfaceModel parse(const config::KeyValueFile& f);
    static HypersurfaceModel load(const std::string& path);
    static HypersurfaceModel unit_circle();   // x1^2 + x2^2 - 1
    static HypersurfaceModel two_circles();   // ovals of radius 1/2 about (+-1, 0)
    static HypersurfaceModel nested_circles(); // concentric ovals of radii 1/2 and 1
    static HypersurfaceModel empty();         // P = 1
    // circle, two-circles, nested-circles, empty, or a catalog name (1 oval, 2 non-nested, 2 nested).
    static HypersurfaceModel builtin(const std::string& name);
    // Throws InvalidArgument / CertificateFailure when the invariants fail on a grid.
    void validate(int resolution = 128) const;
};

// Scalar field on R^n with gradient; returns the value and writes the gradient.
using Field = std::function<double(std::span<const double> y, std::span<double> grad)>;

Field polynomial_field(const AffinePolynomial& P);
// Pointwise limit of the normalized peak section: P(y) exp(-|y|^2/2) / sqrt(N).
Field limit_field(const HypersurfaceModel& m);
// Normalized chart value of a section: s(1, y/sqrt(d)) (1 + |y|^2/d)^(-d/2) / sqrt(d)^n and its y-gradient.
Field section_field(const HomogeneousPolynomial& section);

struct DeltaEpsilon {
    double delta = 0.0;
    double epsilon = 0.0;
    std::vector<double> argmin_delta;
    std::vector<double> argmin_epsilon;
    double spacing = 0.0;  // final grid spacing in y
    int refinements = 0;
};

// delta = 0.9 min |F| on the grid of U\K; epsilon = 0.9 min |grad F| over grid points of U with |F| <= delta.
// Grid halved until both minima move by < 1%; CertificateFailure otherwise.
DeltaEpsilon estimate_delta_epsilon(const HypersurfaceModel& m, int grid_resolution = 32);
DeltaEpsilon estimate_delta_epsilon(const HypersurfaceModel& m, const Field& f, int grid_resolution = 32);
// Same minima at one fixed spacing (no refinement).
DeltaEpsilon delta_epsilon_at(const HypersurfaceModel& m, const Field& f, double spacing);

struct RescaledConstants {
    int d = 0;
    double delta_prime = 0.0;    // normalized: |sigma_P| > delta' sqrt(d)^n on U_d \ K_d
    double epsilon_prime = 0.0;  // normalized: |d sigma_P| > eps' sqrt(d)^(n+1) where |sigma_P| <= delta' sqrt(d)^n
    double delta_scaled = 0.0;   // delta' sqrt(d)^n
    double epsilon_scaled = 0.0; // eps' sqrt(d)^(n+1)
    double delta_ratio = 0.0;    // delta' / delta of the limit field
    double epsilon_ratio = 0.0;
    bool meets_floor = false;    // both ratios >= 0.5
};

// Verifies both inequalities for the assembled peak section at degree d on the grid of the limit estimate.
RescaledConstants rescaled_constants(const HypersurfaceModel& m, const DeltaEpsilon& limit, int d);

struct SupSample {
    double sup_value = 0.0;  // normalized sup over B(0, R) in y of |sigma|
    double sup_grad = 0.0;   // normalized sup of |d sigma|
};
// Sup of the normalized section field over the grid of the ball of radius R (y-coordinates), n in {1, 2}.
SupSample sup_norms(const HomogeneousPolynomial& q, double R, double spacing = 1.0 / 16);

struct SupConstants {
    double C1 = 0.0;
    double C2 = 0.0;
    std::vector<int> d_values;
    std::vector<Estimate> sup_value;  // per d
    std::vector<Estimate> sup_grad;
};
// C = max over d of (mean + 3 standard errors) of the normalized sups, Kostlan samples.
SupConstants estimate_C1_C2(int n, const std::vector<int>& d_values, std::int64_t trials, double R, std::uint64_t seed,
                            double spacing = 1.0 / 16);
SupConstants estimate_C1_C2_serial(int n, const std::vector<int>& d_values, std::int64_t trials, double R,
                                   std::uint64_t seed, double spacing = 1.0 / 16);

// Fraction of fresh samples with sup|sigma| <= factor C1 and sup|d sigma| <= factor C2 (normalized units).
Estimate markov_filter_mass(int n, int d, double C1, double C2, std::int64_t trials, double R, std::uint64_t seed,
                            double factor = 4.0, double spacing = 1.0 / 16);

struct BarrierCertificate {
    double delta = 0.0;
    double epsilon = 0.0;
    double C1 = 0.0;
    double C2 = 0.0;
    double M = 0.0;
    double c_tilde = 0.0;      // (1/4) erfc(M); underflows to 0 for M > 26
    double log_c_tilde = 0.0;  // log of the above, always finite
    int d = 0;
    double indeterminate_fraction = 0.0;
    DeltaEpsilon limit;
    RescaledConstants rescaled;
    SupConstants sup;
};

// erfc(M) / 4 and its logarithm.
double c_tilde(double M);
double log_c_tilde(double M);

// M = max(4 C1 / delta, 4 C2 / epsilon), c_tilde = erfc(M) / 4.
BarrierCertificate certificate_from_constants(double delta, double epsilon, double C1, double C2, int d);

struct CertificateOptions {
    std::vector<int> sup_degrees;  // empty: just d
    std::int64_t sup_trials = 400;
    std::uint64_t seed = 1;
    int grid_resolution = 32;
    double sup_spacing = 1.0 / 16;
    int floor_degree = 20;  // ratios below 0.5 are fatal from this degree on
};
BarrierCertificate assemble_certificate(const HypersurfaceModel& m, int d, const CertificateOptions& opt = {});

struct PresenceEstimate {
    int d = 0;
    std::int64_t trials = 0;
    std::int64_t hits = 0;
    std::int64_t indeterminate = 0;
    double probability = 0.0;  // hits / determinate trials
    double std_error = 0.0;
    double indeterminate_fraction = 0.0;
};

// Kostlan samples; a hit when the closed components inside the chart ball of radius R/sqrt(d) about x
// have exactly the model's nesting signature. Grid spacing is spacing/sqrt(d) in the chart.
PresenceEstimate presence_probability_mc(const HypersurfaceModel& m, int d, std::int64_t trials,
                                         const fubini::ProjectivePoint& x, std::uint64_t seed,
                                         double spacing = 1.0 / 16);
PresenceEstimate presence_probability_mc_serial(const HypersurfaceModel& m, int d, std::int64_t trials,
                                                const fubini::ProjectivePoint& x, std::uint64_t seed,
                                                double spacing = 1.0 / 16);

struct TrapOptions {
    double a_override = -1.0;  // >= 0: use this coefficient instead of M + |N(0, 1/2)| (control runs)
    bool zero_tau = false;
    int max_rejections = 200;
    double spacing = 1.0 / 16;
};

struct TrapResult {
    std::int64_t trials = 0;
    std::int64_t verified = 0;
    double fraction = 0.0;
    std::int64_t rejected_tau = 0;
    std::int64_t chain_violations = 0;  // zeros of sigma_t in U where the displayed implications fail
};

// Samples sigma = a sigma_P + tau from E_M and checks that sigma_t = a sigma_P + t tau keeps its zeros
// inside K on U and has the model's topology in the ball for t = 0, 0.1, ..., 1.
TrapResult isotopy_trap_check(const HypersurfaceModel& m, const BarrierCertificate& cert, std::int64_t trials,
                              std::uint64_t seed, const TrapOptions& opt = {});

}  // namespace rhlab::transversality
