// Acceptance suite: one PASS/FAIL line per criterion, indented detail lines below it.
// Usage: rhlab_acceptance [criterion...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/oracles.hpp"
#include "rhlab/assembly.hpp"
#include "rhlab/common.hpp"
#include "rhlab/curves2d.hpp"
#include "rhlab/experiment.hpp"
#include "rhlab/fubini.hpp"
#include "rhlab/matrixstats.hpp"
#include "rhlab/packing.hpp"
#include "rhlab/roots1d.hpp"
#include "rhlab/transversality.hpp"

using namespace rhlab;

namespace {

struct Criterion {
    std::vector<std::string> lines;
    bool ok = true;
    void check(bool cond, const std::string& what) {
        ok = ok && cond;
        lines.push_back(std::string(cond ? "ok   " : "FAIL ") + what);
    }
    void note(const std::string& what) { lines.push_back("     " + what); }
};

std::string f(double x, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void kostlan_exactness(Criterion& c) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int d : {1, 4, 16, 25, 100}) {
        const auto e = roots1d::expected_roots_mc({EnsembleKind::kostlan, 2, d, 1001}, 100000);
        const double target = std::sqrt(double(d));
        c.check(std::fabs(e.mean - target) <= 3 * e.std_error + 1e-12,
                "d = " + std::to_string(d) + ": mean " + f(e.mean) + " vs sqrt(d) " + f(target) + ", se " +
                    f(e.std_error, 3) + ", exact fallbacks " + std::to_string(e.exact_fallbacks));
    }
    const double t = seconds_since(t0);
    c.check(t < 600, "runtime " + f(t, 4) + " s < 600 s");
}

void crofton(Criterion& c) {
    double worst = 0;
    int worst_d = 0;
    for (int d = 1; d <= 400; ++d) {
        const double err = std::fabs(roots1d::expected_roots_crofton({EnsembleKind::kostlan, 2, d, 0}) - std::sqrt(d));
        if (err > worst) {
            worst = err;
            worst_d = d;
        }
    }
    c.check(worst <= 1e-6, "Kostlan quadrature, d = 1..400: max |value - sqrt(d)| = " + f(worst, 3) + " at d = " +
                               std::to_string(worst_d));
    const EnsembleSpec kac{EnsembleKind::kac, 2, 100, 2002};
    const double q = roots1d::expected_roots_crofton(kac);
    const auto mc = roots1d::expected_roots_mc(kac, 100000);
    c.check(std::fabs(q - mc.mean) <= 3 * mc.std_error,
            "Kac d = 100: quadrature " + f(q, 8) + " vs Monte Carlo " + f(mc.mean) + " (se " + f(mc.std_error, 3) + ")");
    const double big = roots1d::expected_roots_crofton({EnsembleKind::kac, 2, 10000, 0});
    const double lead = 2 / kPi * std::log(1e4);
    c.check(std::fabs(big - lead) <= 0.1 * lead,
            "Kac d = 10^4: quadrature " + f(big, 8) + " vs (2/pi) log d = " + f(lead, 8) + ", relative gap " +
                f(std::fabs(big - lead) / lead, 4));
}

void goe_constants(Criterion& c) {
    const auto t1 = matrixstats::estimate_e_table(1, 1000000, 3003);
    const double ea = std::sqrt(2 / kPi);
    c.check(std::fabs(t1.mean_abs_det - ea) <= 0.01 * ea,
            "m = 1: E|a| = " + f(t1.mean_abs_det) + " vs sqrt(2/pi) = " + f(ea));
    const auto t2 = matrixstats::estimate_e_table(2, 1000000, 3004);
    const double ref = oracle::goe2_mean_abs_det() / std::sqrt(kPi);
    c.check(std::fabs(t2.total - ref) <= 3 * t2.total_std_error,
            "m = 2: sum c+ = " + f(t2.total) + " vs quadrature " + f(ref) + " (se " + f(t2.total_std_error, 3) + ")");
    bool sym = true;
    double worst_z = 0;
    for (int m = 1; m <= 10; ++m) {
        const auto t = matrixstats::estimate_e_table(m, 200000, 3100 + m);
        for (int i = 0; i <= m; ++i) {
            if (t.upper_bound[i] || t.upper_bound[m - i]) continue;
            const double se = std::hypot(t.std_errors[i], t.std_errors[m - i]);
            const double z = se > 0 ? std::fabs(t.e_hat[i] - t.e_hat[m - i]) / se : 0.0;
            worst_z = std::max(worst_z, z);
            sym = sym && z <= 3;
        }
    }
    c.check(sym, "signature symmetry e(i) = e(m-i), m <= 10: max |z| = " + f(worst_z, 3));

    const auto r = matrixstats::asymptotic_ratio({1, 19}, 1000000, 3200);
    const double g2 = std::fabs(r[0].ratio - 1), g20 = std::fabs(r[1].ratio - 1);
    const double se = std::hypot(r[0].std_error, r[1].std_error);
    c.check(g20 < g2 && g2 - g20 > 3 * se,
            "ratio to (2 sqrt2/pi) Gamma((n+1)/2): n = 2 " + f(r[0].ratio) + ", n = 20 " + f(r[1].ratio) +
                "; |ratio - 1| must shrink by more than 3 se = " + f(3 * se, 3));

    std::vector<double> seq;
    std::string shown;
    bool upper = false;
    for (int n : {4, 8, 12, 16}) {
        const auto tail = matrixstats::low_index_tail(n - 1, 0.25, 1000000, 3300 + n);
        upper = upper || tail.upper_bound;
        seq.push_back(std::log(tail.value) / (n * n));
        shown += " n=" + std::to_string(n) + ":" + f(seq.back(), 4) + (tail.upper_bound ? "(bound)" : "");
    }
    bool dec = true;
    for (std::size_t k = 1; k < seq.size(); ++k) dec = dec && seq[k] < seq[k - 1];
    c.check(dec, "log(tail)/n^2, alpha = 0.25, decreasing:" + shown);
}

HomogeneousPolynomial kostlan_monomial(int d, std::size_t i) {
    std::vector<double> cf(d + 1, 0.0);
    cf[i] = std::exp(log_kostlan_weight(monomial_basis(2, d)->exponents(i), d, 1));
    return HomogeneousPolynomial(2, d, cf);
}

void fubini_norms(Criterion& c) {
    double worst = 0;
    std::mt19937_64 gen(4004);
    std::normal_distribution<double> g(0.0, 0.3);
    for (int d = 0; d <= 400; d += (d < 20 ? 1 : 20)) {
        for (int n : {1, 2}) {
            std::vector<double> cf(count_monomials(n + 1, d), 0.0);
            cf[0] = 1;
            const HomogeneousPolynomial q(n + 1, d, cf);
            for (int rep = 0; rep < 10; ++rep) {
                std::vector<double> x(n);
                double r2 = 0;
                for (double& t : x) r2 += (t = g(gen)) * t;
                const double expect = std::pow(1 + r2, -d);
                const double got = fubini::fs_pointwise_norm_sq(q, fubini::ProjectivePoint::from_chart(x));
                worst = std::max(worst, std::fabs(got - expect) / expect);
            }
        }
    }
    c.check(worst <= 1e-12, "|X0^d|^2 vs (1+|x|^2)^-d, d <= 400: max relative error " + f(worst, 3));

    double gram = 0;
    for (int d = 0; d <= 5; ++d)
        for (int i = 0; i <= d; ++i)
            for (int j = 0; j <= d; ++j)
                gram = std::max(gram, std::fabs(fubini::fs_l2_inner(kostlan_monomial(d, i), kostlan_monomial(d, j)) -
                                                (i == j ? 1.0 : 0.0)));
    c.check(gram <= 1e-4, "Kostlan Gram matrix, n = 1, d <= 5: max deviation from identity " + f(gram, 3));

    const auto P = AffinePolynomial::from_terms(1, {{1.0, {2}}, {-1.0, {0}}});
    const std::vector<double> xv{0.4};
    const auto x = fubini::ProjectivePoint::from_chart(xv);
    double l2worst = 0;
    for (int d : {50, 100, 200, 400}) {
        const auto ps = fubini::build_peak_section(P, d, x);
        l2worst = std::max(l2worst, std::fabs(std::sqrt(fubini::fs_l2_norm_sq(ps.section)) - 1));
    }
    c.check(l2worst <= 0.02, "normalized peak section of x^2 - 1, n = 1, d in {50,100,200,400}: max |L2 norm - 1| = " +
                                 f(l2worst, 3));
    const int d = 200;
    const auto ps = fubini::build_peak_section(P, d, x);
    const double mass = fubini::l2_mass_fraction(ps.section, x, 2 / std::sqrt(double(d)));
    c.check(mass >= 0.95, "d = 200: L2 mass in B(x, 2/sqrt(d)) = " + f(mass));
    const auto P2 = AffinePolynomial::from_terms(2, {{1.0, {2, 0}}, {1.0, {0, 2}}, {-1.0, {0, 0}}});
    const std::vector<double> x2c{0.3, -0.5};
    const auto x2 = fubini::ProjectivePoint::from_chart(x2c);
    const auto ps2 = fubini::build_peak_section(P2, d, x2);
    const double mass2 = fubini::l2_mass_fraction(ps2.section, x2, 2 / std::sqrt(double(d)));
    c.check(mass2 >= 0.95, "d = 200, n = 2 circle at [1:0.3:-0.5]: L2 mass in B(x, 2/sqrt(d)) = " + f(mass2));
}

void barrier(Criterion& c) {
    const auto m = transversality::HypersurfaceModel::unit_circle();
    m.validate();
    transversality::CertificateOptions opt;
    opt.sup_degrees = {20, 40, 60, 80};
    opt.sup_trials = 400;
    opt.seed = 5005;
    const auto cert = transversality::assemble_certificate(m, 60, opt);
    c.check(std::isfinite(cert.log_c_tilde),
            "certificate at d = 60: delta' " + f(cert.delta) + ", eps' " + f(cert.epsilon) + ", C1 " + f(cert.C1) +
                ", C2 " + f(cert.C2) + ", M " + f(cert.M) + ", c_tilde = " + format_log_value(cert.log_c_tilde) + " > 0");
    for (int d : opt.sup_degrees) {
        const auto mk = transversality::markov_filter_mass(2, d, cert.C1, cert.C2, 1000, m.R, 5100 + d);
        c.check(mk.mean >= 0.5, "Markov-filtered mass at d = " + std::to_string(d) + ": " + f(mk.mean));
    }
    const auto tr = transversality::isotopy_trap_check(m, cert, 200, 5200);
    c.check(tr.fraction == 1.0, "isotopy trap, d = 60, 200 samples from E_M: fraction " + f(tr.fraction) +
                                    ", chain violations " + std::to_string(tr.chain_violations));
    std::vector<transversality::PresenceEstimate> ps;
    for (int d : {20, 40, 80})
        ps.push_back(transversality::presence_probability_mc(m, d, 2000, fubini::ProjectivePoint::origin(2), 5300 + d));
    double lo = 1;
    std::string shown;
    for (const auto& p : ps) {
        lo = std::min(lo, p.probability);
        shown += " d=" + std::to_string(p.d) + ":" + f(p.probability, 4) + "(indet " + f(p.indeterminate_fraction, 2) + ")";
    }
    const double floor = std::max(cert.c_tilde, 0.5 * ps[0].probability);
    c.check(lo > 0 && lo >= floor, "presence probability" + shown + "; min " + f(lo, 4) + " >= " + f(floor, 4));
}

void curve_topology(Criterion& c) {
    std::int64_t samples = 0, parity = 0;
    bool harnack = true;
    std::vector<std::pair<int, double>> ratio;
    for (int d : {1, 2, 3, 4, 6, 8, 12, 16}) {
        const auto s = curves2d::betti_statistics(d, 1250, 6006);
        samples += s.trials;
        parity += s.parity_violations;
        harnack = harnack && s.max_b0_observed <= s.harnack_bound;
        if (d >= 8) ratio.push_back({d, s.mean_b0 / d});
        c.note("d = " + std::to_string(d) + ": mean b0 " + f(s.mean_b0, 4) + " (se " + f(s.std_error, 2) + "), max " +
               std::to_string(s.max_b0_observed) + " <= " + std::to_string(s.harnack_bound) + ", level " +
               std::to_string(s.level) + ", flagged " + f(s.flagged_fraction, 2));
    }
    c.check(samples >= 10000 && harnack, "b0 <= (d-1)(d-2)/2 + 1 on all " + std::to_string(samples) + " samples");
    c.check(parity == 0, "pseudoline parity rule: " + std::to_string(parity) + " violations");
    double worst = 0, worst_min = 0;
    for (std::size_t a = 0; a < ratio.size(); ++a)
        for (std::size_t b = a + 1; b < ratio.size(); ++b) {
            const double x = ratio[a].second, y = ratio[b].second;
            worst = std::max(worst, std::fabs(x - y) / std::max(x, y));
            worst_min = std::max(worst_min, std::fabs(x - y) / std::min(x, y));
        }
    c.check(worst <= 0.25, "mean_b0/d at d = 8, 12, 16: " + f(ratio[0].second, 4) + ", " + f(ratio[1].second, 4) +
                               ", " + f(ratio[2].second, 4) + "; max |a-b|/max(a,b) = " + f(worst, 3) +
                               " (|a-b|/min(a,b) = " + f(worst_min, 3) + ")");
    std::int64_t cmp = 0, agree = 0;
    for (int d : {6, 8, 12}) {
        const auto r = curves2d::refinement_agreement(d, 200, 6100 + d);
        cmp += r.compared;
        agree += r.agree;
    }
    const double frac = cmp ? double(agree) / cmp : 0.0;
    c.check(frac >= 0.99, "grid refinement agreement at d = 6, 8, 12: " + f(frac, 4) + " over " + std::to_string(cmp));
}

void packing_bounds(Criterion& c) {
    for (const auto& m : {packing::Manifold::sphere(2), packing::Manifold::projective(2)}) {
        const auto sweep = packing::packing_sweep(m, {0.2, 0.1, 0.05, 0.025}, 7007);
        bool cover = true;
        for (const auto& s : sweep) cover = cover && s.covering_passed;
        const auto& s = sweep.back();
        c.check(s.normalized >= 0.9 * s.bound && s.normalized <= 1.1 * s.ceiling,
                m.name() + ", eps = " + f(s.epsilon) + ": eps^2 N = " + f(s.normalized, 5) + " in [0.9 x " +
                    f(s.bound, 4) + ", 1.1 x " + f(s.ceiling, 4) + "], N = " + std::to_string(s.count));
        c.check(cover, m.name() + ": covering certificate passed on all " + std::to_string(sweep.size()) + " sets");
    }
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void assembly_sandwich(Criterion& c) {
    const std::string cfg =
        "experiment = report\nseed = 8008\nn = 2\ni = 0\ncatalog = 1 oval, 2 non-nested, 2 nested\n"
        "certificate_degree = 60 [degrees]\nsup_trials = 200 [trials]\ncurve_degrees = 8, 12, 16 [degrees]\n"
        "curve_trials = 400 [trials]\nmatrix_trials = 400000 [trials]\n";
    namespace fs = std::filesystem;
    const auto base = fs::temp_directory_path() / "rhlab_acceptance_report";
    fs::remove_all(base);
    experiment::RunOptions opt;
    opt.out_dir = (base / "a").string();
    const auto ra = experiment::run_experiment_text(cfg, opt);
    opt.out_dir = (base / "b").string();
    const auto rb = experiment::run_experiment_text(cfg, opt);
    c.check(ra.exit_code == 0 && rb.exit_code == 0, "report runs exit with status 0 " + ra.message);
    if (ra.exit_code != 0) return;
    const auto j = nlohmann::json::parse(slurp(base / "a" / "report.json"));
    const double lp = j["log_partial_c_minus"].is_null() ? -INFINITY : j["log_partial_c_minus"].get<double>();
    c.check(std::isfinite(lp), "partial c0- = " + j["partial_c_minus"].get<std::string>() + " > 0");
    const double cp = j["c_plus_total"], cpse = j["c_plus_total_std_error"];
    bool lower = true, upper = true;
    for (const auto& e : j["empirical"]) {
        const double v = e["normalized"], se = e["normalized_std_error"];
        lower = lower && lp <= std::log(v);
        upper = upper && v <= cp + 3 * std::hypot(se, cpse);
        c.note("d = " + std::to_string(e["d"].get<int>()) + ": empirical E(b0)/(d Vol_FS) = " + f(v, 4) + " (se " +
               f(se, 2) + ")");
    }
    c.check(lower, "partial c0- <= empirical normalized E(b0) at every d");
    c.check(upper, "empirical <= sum c+ = " + f(cp, 5) + " + 3 combined se at every d");
    const bool same = slurp(base / "a" / "report.csv") == slurp(base / "b" / "report.csv") &&
                      slurp(base / "a" / "report.json") == slurp(base / "b" / "report.json");
    c.check(same, "rerun with the same seed is byte-identical (report.csv, report.json)");
}

const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> kCriteria{
    {"Kostlan exactness", kostlan_exactness}, {"Crofton cross-check", crofton},
    {"GOE constants", goe_constants},         {"Fubini-Study norms", fubini_norms},
    {"barrier pipeline", barrier},            {"curve topology", curve_topology},
    {"packing", packing_bounds},              {"assembly sandwich", assembly_sandwich},
};

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    for (int k = 1; k < argc; ++k) which.push_back(std::atoi(argv[k]));
    if (which.empty())
        for (int k = 1; k <= static_cast<int>(kCriteria.size()); ++k) which.push_back(k);
    int failed = 0;
    for (int k : which) {
        if (k < 1 || k > static_cast<int>(kCriteria.size())) {
            std::fprintf(stderr, "no criterion %d\n", k);
            return 2;
        }
        Criterion c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            kCriteria[k - 1].second(c);
        } catch (const std::exception& e) {
            c.check(false, std::string("exception: ") + e.what());
        }
        std::printf("criterion %d %-20s %s (%.1f s)\n", k, kCriteria[k - 1].first.c_str(), c.ok ? "PASS" : "FAIL",
                    seconds_since(t0));
        for (const auto& l : c.lines) std::printf("    %s\n", l.c_str());
        std::fflush(stdout);
        failed += !c.ok;
    }
    return failed ? 1 : 0;
}
