#include "rhlab/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rhlab/common.hpp"

namespace rhlab::assembly {

double round_to_fs(double round_measure, int dim) { return round_measure * std::pow(kPi, -0.5 * dim); }

double fs_volume_rp(int n) { return round_to_fs(0.5 * unit_sphere_volume(n), n); }

double log_c_sigma(double log_c_tilde, double R, int n) {
    if (!(R > 0) || n < 1 || std::isnan(log_c_tilde) || std::isinf(log_c_tilde))
        throw InvalidArgument("c_sigma: need c_tilde > 0, R > 0, n >= 1");
    return log_c_tilde - n * std::log(2.0) - std::log(unit_ball_volume(n)) - n * std::log(R);
}

double compute_c_sigma(double c_tilde, double R, int n) {
    if (!(c_tilde > 0) || !(R > 0) || n < 1) throw InvalidArgument("c_sigma: need c_tilde > 0, R > 0, n >= 1");
    return c_tilde / (std::ldexp(1.0, n) * unit_ball_volume(n) * std::pow(R, n));
}

std::vector<int> signature_betti(const std::string& signature) {
    const int ovals = static_cast<int>(std::count(signature.begin(), signature.end(), '('));
    return {ovals, ovals};
}

SigmaCatalogEntry make_entry(const transversality::HypersurfaceModel& m, const transversality::BarrierCertificate& cert) {
    SigmaCatalogEntry e;
    e.name = m.sigma.name;
    e.model = m;
    e.betti = signature_betti(m.sigma.signature);
    e.log_c_tilde = cert.log_c_tilde;
    // the presence ball has chart radius R / sqrt(d), i.e. round radius R / sqrt(d) to first order
    e.R = round_to_fs(m.R, 1);
    e.log_c_sigma = log_c_sigma(e.log_c_tilde, e.R, m.n);
    e.certificate_degree = cert.d;
    return e;
}

EmpiricalPoint empirical_point(const curves2d::BettiStats& s, int n) {
    EmpiricalPoint p;
    p.d = s.d;
    p.trials = s.trials;
    p.mean_b0 = s.mean_b0;
    const double scale = std::pow(std::sqrt(double(s.d)), n) * fs_volume_rp(n);
    p.normalized = s.mean_b0 / scale;
    p.normalized_std_error = s.std_error / scale;
    p.harnack_ceiling = s.harnack_bound / scale;
    p.max_b0 = s.max_b0_observed;
    p.harnack_bound = s.harnack_bound;
    return p;
}

bool LowerBoundReport::passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

LowerBoundReport lower_bound_report(int n, int i, const std::vector<SigmaCatalogEntry>& catalog,
                                    const matrixstats::DetExpectationTable& table,
                                    const std::vector<curves2d::BettiStats>& curves) {
    if (n < 1 || i < 0 || i >= n) throw InvalidArgument("report: need 0 <= i < n");
    if (table.m != n - 1) throw InvalidArgument("report: matrix table size does not match n - 1");
    if (!curves.empty() && n != 2) throw InvalidArgument("report: curve statistics exist only for n = 2");
    for (const auto& e : catalog) {
        if (e.model.n != n) throw InvalidArgument("report: catalog entry '" + e.name + "' has a different n");
        if (static_cast<int>(e.betti.size()) <= i) throw InvalidArgument("report: missing b_i for '" + e.name + "'");
    }

    LowerBoundReport r;
    r.n = n;
    r.i = i;
    r.catalog = catalog;
    // log-sum-exp of c_sigma b_i
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& e : catalog)
        if (e.betti[i] > 0) top = std::max(top, e.log_c_sigma + std::log(double(e.betti[i])));
    if (std::isinf(top)) {
        r.log_partial_c_minus = top;
    } else {
        double s = 0;
        for (const auto& e : catalog)
            if (e.betti[i] > 0) s += std::exp(e.log_c_sigma + std::log(double(e.betti[i])) - top);
        r.log_partial_c_minus = top + std::log(s);
    }
    r.partial_c_minus = format_log_value(r.log_partial_c_minus);
    r.c_plus_i = table.c_plus.at(i);
    r.c_plus_total = table.total;
    r.c_plus_total_std_error = table.total_std_error;
    for (const auto& s : curves) r.empirical.push_back(empirical_point(s, n));

    const bool empty = catalog.empty();
    const double lp = r.log_partial_c_minus;
    r.verdicts.push_back({"partial lower bound positive", empty || std::isfinite(lp),
                          empty ? "empty catalog" : "log = " + format_double(lp)});
    r.verdicts.push_back({"partial lower bound <= c_i+", empty || lp <= std::log(r.c_plus_i),
                          "c_i+ = " + format_double(r.c_plus_i)});
    for (const auto& p : r.empirical) {
        const std::string at = "d = " + std::to_string(p.d);
        r.verdicts.push_back({"partial lower bound <= empirical (" + at + ")",
                              empty || (p.normalized > 0 && lp <= std::log(p.normalized)),
                              "empirical = " + format_double(p.normalized)});
        const double slack = 3 * std::hypot(p.normalized_std_error, r.c_plus_total_std_error);
        r.verdicts.push_back({"empirical <= sum c+ (" + at + ")", p.normalized <= r.c_plus_total + slack,
                              format_double(p.normalized) + " vs " + format_double(r.c_plus_total) + " + " +
                                  format_double(slack)});
        r.verdicts.push_back({"b0 <= Harnack (" + at + ")", p.max_b0 <= p.harnack_bound,
                              std::to_string(p.max_b0) + " <= " + std::to_string(p.harnack_bound)});
    }
    return r;
}

nlohmann::ordered_json to_json(const LowerBoundReport& r) {
    using J = nlohmann::ordered_json;
    J j;
    j["n"] = r.n;
    j["i"] = r.i;
    j["label"] = r.label;
    j["partial_c_minus"] = r.partial_c_minus;
    j["log_partial_c_minus"] = std::isfinite(r.log_partial_c_minus) ? J(r.log_partial_c_minus) : J(nullptr);
    j["c_plus_i"] = r.c_plus_i;
    j["c_plus_total"] = r.c_plus_total;
    j["c_plus_total_std_error"] = r.c_plus_total_std_error;
    J cat = J::array();
    for (const auto& e : r.catalog) {
        J x;
        x["name"] = e.name;
        x["model"] = e.model.name;
        x["signature"] = e.model.sigma.signature;
        x["betti"] = e.betti;
        x["R_fs"] = e.R;
        x["certificate_degree"] = e.certificate_degree;
        x["log_c_tilde"] = e.log_c_tilde;
        x["c_tilde"] = format_log_value(e.log_c_tilde);
        x["log_c_sigma"] = e.log_c_sigma;
        x["c_sigma"] = format_log_value(e.log_c_sigma);
        if (e.presence >= 0) {
            x["presence_degree"] = e.presence_degree;
            x["presence_probability"] = e.presence;
            x["presence_std_error"] = e.presence_std_error;
        }
        cat.push_back(x);
    }
    j["catalog"] = cat;
    J emp = J::array();
    for (const auto& p : r.empirical)
        emp.push_back({{"d", p.d},
                       {"trials", p.trials},
                       {"mean_b0", p.mean_b0},
                       {"normalized", p.normalized},
                       {"normalized_std_error", p.normalized_std_error},
                       {"harnack_ceiling", p.harnack_ceiling},
                       {"max_b0", p.max_b0}});
    j["empirical"] = emp;
    J ver = J::array();
    for (const auto& v : r.verdicts) ver.push_back({{"check", v.name}, {"passed", v.passed}, {"detail", v.detail}});
    j["verdicts"] = ver;
    j["passed"] = r.passed();
    return j;
}

}  // namespace rhlab::assembly
