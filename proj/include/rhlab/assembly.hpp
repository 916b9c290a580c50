#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rhlab/curves2d.hpp"
#include "rhlab/matrixstats.hpp"
#include "rhlab/transversality.hpp"

namespace rhlab::assembly {

// The one conversion between the unit-round metric and the Fubini-Study metric
// normalized so that a projective line has area 1: a dim-dimensional measure
// scales by pi^(-dim/2).
double round_to_fs(double round_measure, int dim);
// Vol_FS(RP^n); equals 2 for n = 2.
double fs_volume_rp(int n);

// c_tilde / (2^n Vol_eucl(B(0, R))), R in FS units. InvalidArgument on nonpositive input.
double compute_c_sigma(double c_tilde, double R, int n);
// Same in logarithms, for c_tilde below the double range.
double log_c_sigma(double log_c_tilde, double R, int n);

struct SigmaCatalogEntry {
    std::string name;
    transversality::HypersurfaceModel model;
    std::vector<int> betti;      // b_0, b_1 of the model curve
    double log_c_tilde = 0.0;    // from the certificate
    double R = 0.0;              // ball radius in FS units
    double log_c_sigma = 0.0;
    int certificate_degree = 0;
    double presence = -1.0;      // empirical presence probability; < 0 when not measured
    double presence_std_error = 0.0;
    int presence_degree = 0;
};

// Betti numbers of a plane-curve signature: b_0 = ovals, b_1 = ovals.
std::vector<int> signature_betti(const std::string& signature);
SigmaCatalogEntry make_entry(const transversality::HypersurfaceModel& m, const transversality::BarrierCertificate& cert);

struct EmpiricalPoint {
    int d = 0;
    std::int64_t trials = 0;
    double mean_b0 = 0.0;
    double normalized = 0.0;  // mean_b0 / (sqrt(d)^n Vol_FS(RP^n))
    double normalized_std_error = 0.0;
    double harnack_ceiling = 0.0;  // Harnack bound normalized the same way
    int max_b0 = 0;
    int harnack_bound = 0;
};

struct Verdict {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct LowerBoundReport {
    int n = 2;
    int i = 0;
    std::vector<SigmaCatalogEntry> catalog;
    double log_partial_c_minus = 0.0;  // -inf for an empty catalog
    std::string partial_c_minus;       // decimal rendering, exact even when it underflows a double
    std::string label = "partial lower bound";
    std::vector<EmpiricalPoint> empirical;
    double c_plus_i = 0.0;
    double c_plus_total = 0.0;
    double c_plus_total_std_error = 0.0;
    std::vector<Verdict> verdicts;
    bool passed() const;
};

EmpiricalPoint empirical_point(const curves2d::BettiStats& s, int n = 2);

// InvalidArgument when the inputs disagree on n (table.m must be n - 1).
LowerBoundReport lower_bound_report(int n, int i, const std::vector<SigmaCatalogEntry>& catalog,
                                    const matrixstats::DetExpectationTable& table,
                                    const std::vector<curves2d::BettiStats>& curves);

nlohmann::ordered_json to_json(const LowerBoundReport& r);

}  // namespace rhlab::assembly
