#include "rhlab/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rhlab/assembly.hpp"
#include "rhlab/common.hpp"
#include "rhlab/config.hpp"
#include "rhlab/curves2d.hpp"
#include "rhlab/fubini.hpp"
#include "rhlab/matrixstats.hpp"
#include "rhlab/packing.hpp"
#include "rhlab/roots1d.hpp"
#include "rhlab/transversality.hpp"

namespace rhlab::experiment {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

struct Field {
    std::string key;
    std::string unit;  // expected unit; empty = dimensionless
    bool required;
};

const std::map<std::string, std::vector<Field>>& schema() {
    static const std::map<std::string, std::vector<Field>> s{
        {"roots1d",
         {{"ensemble", "", true}, {"degrees", "degrees", true}, {"trials", "trials", true}, {"crofton", "", false}}},
        {"matrixstats", {{"sizes", "", true}, {"trials", "trials", true}}},
        {"fubini", {{"n", "", true}, {"degrees", "degrees", true}, {"R", "scaled", true}}},
        {"barrier",
         {{"model", "", true},
          {"d", "degrees", true},
          {"sup_degrees", "degrees", false},
          {"sup_trials", "trials", false},
          {"markov_trials", "trials", false},
          {"presence_degrees", "degrees", false},
          {"presence_trials", "trials", false},
          {"trap_trials", "trials", false},
          {"grid_resolution", "", false}}},
        {"curves2d",
         {{"degrees", "degrees", true},
          {"trials", "trials", true},
          {"level", "", false},
          {"refinement_trials", "trials", false}}},
        {"packing", {{"manifold", "", true}, {"epsilons", "rad", true}, {"batch", "trials", false}}},
        {"report",
         {{"n", "", true},
          {"i", "", true},
          {"catalog", "", true},
          {"certificate_degree", "degrees", true},
          {"sup_trials", "trials", false},
          {"presence_trials", "trials", false},
          {"curve_degrees", "degrees", true},
          {"curve_trials", "trials", true},
          {"matrix_trials", "trials", true}}},
    };
    return s;
}

struct Context {
    const config::KeyValueFile& cfg;
    std::string experiment;
    std::uint64_t seed = 0;
    fs::path base_dir;  // relative model paths resolve here

    const config::Entry* get(const std::string& key) const { return cfg.find(key); }
    long long integer(const std::string& key, long long dflt) const {
        const auto* e = get(key);
        return e ? config::to_integer(*e) : dflt;
    }
    double real(const std::string& key) const { return config::to_double(*get(key)); }
    std::vector<int> ints(const std::string& key, std::vector<int> dflt = {}) const {
        const auto* e = get(key);
        if (!e) return dflt;
        std::vector<int> r;
        for (long long v : config::to_integer_list(*e)) r.push_back(static_cast<int>(v));
        return r;
    }
    std::string text(const std::string& key) const { return get(key)->value; }
    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        const auto* e = get(key);
        const int line = e ? e->line : 0;
        throw ConfigError("line " + std::to_string(line) + ", field '" + key + "': " + what, line, key);
    }
    long long positive(const std::string& key, long long dflt) const {
        const long long v = integer(key, dflt);
        if (v < 1) fail(key, "must be positive");
        return v;
    }
};

struct Output {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    Json json;  // null: no json artifact
    Json manifest_extra = Json::object();
};

std::string fmt(double x) { return format_double(x); }
std::string fmt(long long x) { return std::to_string(x); }
std::string fmt(int x) { return std::to_string(x); }
std::string fmt(bool x) { return x ? "true" : "false"; }

void check_schema(const Context& c) {
    const auto it = schema().find(c.experiment);
    if (it == schema().end()) throw ConfigError("unknown experiment '" + c.experiment + "'", 0, "experiment");
    std::set<std::string> allowed{"experiment", "seed"};
    for (const auto& f : it->second) {
        allowed.insert(f.key);
        const auto* e = c.cfg.find(f.key);  // also rejects repeats
        if (!e) {
            if (f.required) throw ConfigError("missing field '" + f.key + "' for " + c.experiment, 0, f.key);
            continue;
        }
        if (!e->unit.empty() && e->unit != f.unit)
            throw ConfigError("line " + std::to_string(e->line) + ", field '" + f.key + "': unit [" + e->unit +
                                  "] where [" + f.unit + "] is expected",
                              e->line, f.key);
    }
    for (const auto& e : c.cfg.entries())
        if (!allowed.count(e.key))
            throw ConfigError("line " + std::to_string(e.line) + ": unknown field '" + e.key + "' for " + c.experiment,
                              e.line, e.key);
}

Output run_roots1d(const Context& c) {
    EnsembleKind kind;
    try {
        kind = parse_ensemble_kind(c.text("ensemble"));
    } catch (const InvalidArgument& e) {
        c.fail("ensemble", e.what());
    }
    const auto trials = c.positive("trials", 0);
    const bool crofton = !c.get("crofton") || c.text("crofton") == "true";
    Output o;
    o.header = {"kind", "d", "trials", "mean", "std_error", "crofton_value"};
    for (int d : c.ints("degrees")) {
        if (d < 1) c.fail("degrees", "degrees must be positive");
        const EnsembleSpec spec{kind, 2, d, c.seed};
        const auto est = roots1d::expected_roots_mc(spec, trials);
        o.rows.push_back({to_string(kind), fmt(d), fmt((long long)trials), fmt(est.mean), fmt(est.std_error),
                          crofton ? fmt(roots1d::expected_roots_crofton(spec)) : ""});
    }
    return o;
}

Output run_matrixstats(const Context& c) {
    const auto trials = c.positive("trials", 0);
    Output o;
    o.header = {"m", "i", "hits", "e_hat", "std_error", "c_plus", "upper_bound"};
    Json totals = Json::array();
    for (int m : c.ints("sizes")) {
        if (m < 1) c.fail("sizes", "matrix sizes must be positive");
        const auto t = matrixstats::estimate_e_table(m, trials, c.seed);
        for (int i = 0; i <= m; ++i)
            o.rows.push_back({fmt(m), fmt(i), fmt((long long)t.hits[i]), fmt(t.e_hat[i]), fmt(t.std_errors[i]),
                              fmt(t.c_plus[i]), fmt(bool(t.upper_bound[i]))});
        totals.push_back({{"m", m},
                          {"trials", trials},
                          {"c_plus_total", t.total},
                          {"c_plus_total_std_error", t.total_std_error},
                          {"mean_abs_det", t.mean_abs_det},
                          {"asymptotic_total", matrixstats::asymptotic_total(m + 1)},
                          {"degenerate_fraction", t.degenerate_fraction}});
    }
    o.json = {{"totals", totals}};
    return o;
}

Output run_fubini(const Context& c) {
    const int n = static_cast<int>(c.integer("n", 0));
    if (n < 1 || n > 3) c.fail("n", "must be 1, 2 or 3");
    const double R = c.real("R");
    if (!(R > 0)) c.fail("R", "must be positive");
    Output o;
    o.header = {"n", "d", "R", "l2_norm", "mass_fraction"};
    const auto P = AffinePolynomial::from_terms(n, {{1.0, std::vector<int>(n, 0)}});
    const auto x = fubini::ProjectivePoint::origin(n);
    for (int d : c.ints("degrees")) {
        if (d < 1) c.fail("degrees", "degrees must be positive");
        const auto ps = fubini::build_peak_section(P, d, x);
        const double l2 = std::sqrt(fubini::coefficient_l2_inner(ps.section, ps.section));
        const double mass = fubini::l2_mass_fraction(ps.section, x, R / std::sqrt(double(d)));
        o.rows.push_back({fmt(n), fmt(d), fmt(R), fmt(l2), fmt(mass)});
    }
    return o;
}

transversality::HypersurfaceModel load_model(const Context& c) {
    const std::string v = c.text("model");
    try {
        return transversality::HypersurfaceModel::builtin(v);
    } catch (const InvalidArgument&) {
    }
    fs::path p(v);
    if (p.is_relative()) p = c.base_dir / p;
    return transversality::HypersurfaceModel::load(p.string());
}

Json certificate_json(const transversality::BarrierCertificate& cert) {
    return {{"delta", cert.delta},
            {"epsilon", cert.epsilon},
            {"C1", cert.C1},
            {"C2", cert.C2},
            {"M", cert.M},
            {"c_tilde", format_log_value(cert.log_c_tilde)},
            {"log_c_tilde", cert.log_c_tilde},
            {"d", cert.d},
            {"indeterminate_fraction", cert.indeterminate_fraction},
            {"limit_delta", cert.limit.delta},
            {"limit_epsilon", cert.limit.epsilon},
            {"delta_ratio", cert.rescaled.delta_ratio},
            {"epsilon_ratio", cert.rescaled.epsilon_ratio}};
}

Output run_barrier(const Context& c) {
    const auto m = load_model(c);
    m.validate();
    const int d = static_cast<int>(c.positive("d", 0));
    transversality::CertificateOptions opt;
    opt.sup_degrees = c.ints("sup_degrees", {d});
    opt.sup_trials = c.positive("sup_trials", 400);
    opt.seed = c.seed;
    opt.grid_resolution = static_cast<int>(c.positive("grid_resolution", 32));
    auto cert = transversality::assemble_certificate(m, d, opt);
    const auto markov_trials = c.integer("markov_trials", 400);
    Json extra = Json::object();
    if (markov_trials > 0) {
        const auto mk = transversality::markov_filter_mass(m.n, d, cert.C1, cert.C2, markov_trials, m.R, c.seed + 1);
        extra["markov_mass"] = mk.mean;
        extra["markov_std_error"] = mk.std_error;
    }
    Output o;
    o.header = {"model", "d", "trials", "hits", "indeterminate", "probability", "std_error", "indeterminate_fraction"};
    const auto ptrials = c.integer("presence_trials", 0);
    if (ptrials > 0 && m.n == 2) {
        double worst = 0;
        for (int pd : c.ints("presence_degrees", {d})) {
            const auto p = transversality::presence_probability_mc(m, pd, ptrials, fubini::ProjectivePoint::origin(2),
                                                                   c.seed + 2);
            worst = std::max(worst, p.indeterminate_fraction);
            o.rows.push_back({m.name, fmt(pd), fmt((long long)p.trials), fmt((long long)p.hits),
                              fmt((long long)p.indeterminate), fmt(p.probability), fmt(p.std_error),
                              fmt(p.indeterminate_fraction)});
        }
        cert.indeterminate_fraction = worst;
    }
    const auto trap_trials = c.integer("trap_trials", 0);
    if (trap_trials > 0 && m.n == 2) {
        const auto tr = transversality::isotopy_trap_check(m, cert, trap_trials, c.seed + 3);
        extra["trap_fraction"] = tr.fraction;
        extra["trap_trials"] = tr.trials;
        extra["trap_chain_violations"] = tr.chain_violations;
    }
    o.json = certificate_json(cert);
    o.json["model"] = m.name;
    for (auto& [k, v] : extra.items()) o.json[k] = v;
    return o;
}

Output run_curves2d(const Context& c) {
    const auto trials = c.positive("trials", 0);
    const int level = static_cast<int>(c.integer("level", -1));
    const auto rtrials = c.integer("refinement_trials", 0);
    Output o;
    o.header = {"d",     "trials",           "mean_b0",           "std_error",         "max_b0", "harnack_bound",
                "level", "flagged_fraction", "parity_violations", "refinement_agree"};
    Json levels = Json::array();
    for (int d : c.ints("degrees")) {
        if (d < 1) c.fail("degrees", "degrees must be positive");
        const auto s = curves2d::betti_statistics(d, trials, c.seed, level);
        std::string agree;
        if (rtrials > 0) agree = fmt(curves2d::refinement_agreement(d, rtrials, c.seed, level).fraction());
        levels.push_back(s.level);
        o.rows.push_back({fmt(d), fmt((long long)s.trials), fmt(s.mean_b0), fmt(s.std_error), fmt(s.max_b0_observed),
                          fmt(s.harnack_bound), fmt(s.level), fmt(s.flagged_fraction),
                          fmt((long long)s.parity_violations), agree});
    }
    o.manifest_extra["grid_levels"] = levels;
    return o;
}

packing::Manifold parse_manifold(const Context& c) {
    const std::string v = c.text("manifold");
    const bool proj = v.rfind("RP", 0) == 0;
    const std::string digits = v.substr(proj ? 2 : 1);
    if ((!proj && (v.empty() || v[0] != 'S')) || digits.empty() ||
        digits.find_first_not_of("0123456789") != std::string::npos)
        c.fail("manifold", "expected S<n> or RP<n>");
    const int n = std::stoi(digits);
    if (n < 1 || n > 3) c.fail("manifold", "dimension must be 1, 2 or 3");
    return proj ? packing::Manifold::projective(n) : packing::Manifold::sphere(n);
}

Output run_packing(const Context& c) {
    const auto m = parse_manifold(c);
    const auto eps = config::to_double_list(*c.get("epsilons"));
    for (std::size_t i = 0; i < eps.size(); ++i)
        if (!(eps[i] > 0 && eps[i] < kPi / 8) || (i && eps[i] >= eps[i - 1]))
            c.fail("epsilons", "need decreasing values in (0, pi/8)");
    const auto batch = c.positive("batch", 100000);
    Output o;
    o.header = {"manifold", "epsilon", "N", "normalized", "bound", "ceiling", "covering_passed"};
    for (const auto& s : packing::packing_sweep(m, eps, c.seed, batch))
        o.rows.push_back({m.name(), fmt(s.epsilon), fmt((long long)s.count), fmt(s.normalized), fmt(s.bound),
                          fmt(s.ceiling), fmt(s.covering_passed)});
    return o;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> r;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto a = item.find_first_not_of(" \t"), b = item.find_last_not_of(" \t");
        if (a != std::string::npos) r.push_back(item.substr(a, b - a + 1));
    }
    return r;
}

Output run_report(const Context& c) {
    const int n = static_cast<int>(c.integer("n", 0)), i = static_cast<int>(c.integer("i", -1));
    if (n != 2) c.fail("n", "the report pipeline is implemented for n = 2");
    if (i != 0 && i != 1) c.fail("i", "must be 0 or 1");
    const int d = static_cast<int>(c.positive("certificate_degree", 0));
    const auto sup_trials = c.positive("sup_trials", 400);
    const auto ptrials = c.integer("presence_trials", 0);
    std::vector<assembly::SigmaCatalogEntry> catalog;
    const auto names = c.text("catalog") == "none" ? std::vector<std::string>{} : split_commas(c.text("catalog"));
    for (const auto& name : names) {
        transversality::HypersurfaceModel m;
        try {
            m = transversality::HypersurfaceModel::builtin(name);
        } catch (const InvalidArgument& e) {
            c.fail("catalog", e.what());
        }
        m.validate();
        transversality::CertificateOptions opt;
        opt.sup_trials = sup_trials;
        opt.seed = c.seed;
        const auto cert = transversality::assemble_certificate(m, d, opt);
        auto entry = assembly::make_entry(m, cert);
        if (ptrials > 0) {
            const auto p =
                transversality::presence_probability_mc(m, d, ptrials, fubini::ProjectivePoint::origin(2), c.seed + 2);
            entry.presence = p.probability;
            entry.presence_std_error = p.std_error;
            entry.presence_degree = d;
        }
        catalog.push_back(entry);
    }
    const auto table = matrixstats::estimate_e_table(n - 1, c.positive("matrix_trials", 0), c.seed);
    std::vector<curves2d::BettiStats> curves;
    Json levels = Json::array();
    for (int cd : c.ints("curve_degrees")) {
        if (cd < 1) c.fail("curve_degrees", "degrees must be positive");
        auto s = curves2d::betti_statistics(cd, c.positive("curve_trials", 0), c.seed);
        s.records.clear();
        levels.push_back(s.level);
        curves.push_back(std::move(s));
    }
    const auto r = assembly::lower_bound_report(n, i, catalog, table, curves);
    Output o;
    o.header = {"quantity", "d", "value", "std_error"};
    o.rows.push_back({"partial_c_minus", "", r.partial_c_minus, ""});
    for (const auto& e : catalog) o.rows.push_back({"c_sigma:" + e.name, fmt(e.certificate_degree), format_log_value(e.log_c_sigma), ""});
    for (const auto& p : r.empirical)
        o.rows.push_back({"empirical_normalized_b0", fmt(p.d), fmt(p.normalized), fmt(p.normalized_std_error)});
    o.rows.push_back({"c_plus_total", "", fmt(r.c_plus_total), fmt(r.c_plus_total_std_error)});
    o.json = assembly::to_json(r);
    o.manifest_extra["grid_levels"] = levels;
    o.manifest_extra["report_passed"] = r.passed();
    return o;
}

Output dispatch(const Context& c) {
    static const std::map<std::string, std::function<Output(const Context&)>> table{
        {"roots1d", run_roots1d}, {"matrixstats", run_matrixstats}, {"fubini", run_fubini},
        {"barrier", run_barrier}, {"curves2d", run_curves2d},       {"packing", run_packing},
        {"report", run_report}};
    return table.at(c.experiment)(c);
}

void atomic_write(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw ConfigError("cannot write '" + tmp.string() + "'", 0, "out");
        f << content;
        if (!f.flush()) throw ConfigError("cannot write '" + tmp.string() + "'", 0, "out");
    }
    fs::rename(tmp, path);
}

std::string render_csv(const Output& o) {
    std::string s;
    auto line = [&](const std::vector<std::string>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + csv_field(v[i]);
        s += "\r\n";
    };
    line(o.header);
    for (const auto& r : o.rows) line(r);
    return s;
}

}  // namespace

std::vector<std::string> experiment_names() {
    std::vector<std::string> r;
    for (const auto& [k, v] : schema()) r.push_back(k);
    return r;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string r = "\"";
    for (char ch : s) {
        if (ch == '"') r += '"';
        r += ch;
    }
    return r + "\"";
}

RunResult run_experiment_text(const std::string& text, const RunOptions& opt, const std::string& source) {
    const auto start = std::chrono::steady_clock::now();
    RunResult res;
    Json manifest;
    manifest["config"] = source;
    manifest["config_hash"] = fnv1a_hex(text);
    manifest["versions"] = {{"rhlab", library_version()}, {"compiler", __VERSION__}, {"cxx", __cplusplus}};
    std::string experiment = opt.subcommand;
    const fs::path out(opt.out_dir);

    auto finish = [&](int code, const std::string& msg) {
        res.exit_code = code;
        res.message = msg;
        manifest["status"] = code == ok ? "ok" : code == config_error ? "config-error" : "numerical-failure";
        if (!msg.empty()) manifest["message"] = msg;
        manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        manifest["files"] = res.files;
        try {
            fs::create_directories(out);
            atomic_write(out / "manifest.json", manifest.dump(2) + "\n");
            res.files.push_back((out / "manifest.json").string());
        } catch (const std::exception& e) {
            if (res.exit_code == ok) res.exit_code = config_error;
            res.message += (res.message.empty() ? "" : "; ") + std::string(e.what());
        }
        return res;
    };

    try {
        const auto cfg = config::KeyValueFile::parse_string(text);
        if (const auto* e = cfg.find("experiment")) {
            if (!experiment.empty() && e->value != experiment)
                throw ConfigError("line " + std::to_string(e->line) + ": config is for '" + e->value +
                                      "', not '" + experiment + "'",
                                  e->line, "experiment");
            experiment = e->value;
        }
        if (experiment.empty()) throw ConfigError("no experiment given", 0, "experiment");
        manifest["experiment"] = experiment;
        Context c{cfg, experiment, 0, fs::path(source).parent_path()};
        check_schema(c);
        c.seed = opt.seed ? *opt.seed : static_cast<std::uint64_t>(c.integer("seed", 1));
        manifest["seed"] = c.seed;
        for (const auto& e : cfg.entries())
            if (e.unit == "trials") manifest["trials"][e.key] = config::to_integer(e);
        const auto o = dispatch(c);
        for (auto& [k, v] : o.manifest_extra.items()) manifest[k] = v;
        fs::create_directories(out);
        const auto csv = out / (experiment + ".csv");
        atomic_write(csv, render_csv(o));
        res.files.push_back(csv.string());
        if (!o.json.is_null()) {
            const auto js = out / (experiment + ".json");
            atomic_write(js, o.json.dump(2) + "\n");
            res.files.push_back(js.string());
        }
        return finish(ok, "");
    } catch (const ConfigError& e) {
        return finish(config_error, e.what());
    } catch (const InvalidArgument& e) {
        return finish(config_error, e.what());
    } catch (const fs::filesystem_error& e) {
        return finish(config_error, e.what());
    } catch (const std::exception& e) {
        return finish(numerical_failure, e.what());
    }
}

RunResult run_experiment(const std::string& config_path, const RunOptions& opt) {
    std::ifstream f(config_path, std::ios::binary);
    if (!f) {
        RunResult r;
        r.exit_code = config_error;
        r.message = "cannot read '" + config_path + "'";
        return r;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return run_experiment_text(ss.str(), opt, config_path);
}

}  // namespace rhlab::experiment
