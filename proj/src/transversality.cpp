#include "rhlab/transversality.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <sstream>

#include "rhlab/common.hpp"
#include "rhlab/rng.hpp"

namespace rhlab::transversality {
namespace {

constexpr double kSafety = 0.9;

std::string point_string(std::span<const double> y) {
    std::ostringstream s;
    s << "(";
    for (std::size_t i = 0; i < y.size(); ++i) s << (i ? ", " : "") << format_double(y[i]);
    s << ")";
    return s.str();
}

// Calls fn(y) for every point of the lattice h Z^n inside the closed ball of radius R.
template <class F>
void for_each_grid_point(int n, double R, double h, F&& fn) {
    const int k = static_cast<int>(std::floor(R / h + 1e-9));
    std::vector<double> y(n);
    if (n == 1) {
        for (int i = -k; i <= k; ++i) {
            y[0] = i * h;
            fn(std::span<const double>(y));
        }
        return;
    }
    if (n != 2) throw NotImplemented("grid search is implemented for n = 1, 2");
    for (int i = -k; i <= k; ++i)
        for (int j = -k; j <= k; ++j) {
            y[0] = j * h;
            y[1] = i * h;
            if (y[0] * y[0] + y[1] * y[1] <= R * R * (1 + 1e-12)) fn(std::span<const double>(y));
        }
}

double norm(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

void check_model_dimension(const HypersurfaceModel& m, int want) {
    if (m.n != want) throw InvalidArgument("model dimension must be " + std::to_string(want));
}

struct SparseTerm {
    double c;
    std::vector<int> e;
};

// Normalized value and y-gradient from chart data Q, grad_x Q at x = y / sqrt(d).
double normalize_chart(double Q, std::span<const double> gQ, std::span<const double> x, int d, int n,
                       std::span<double> grad) {
    double r2 = 0;
    for (double t : x) r2 += t * t;
    const double sd = std::sqrt(double(d));
    const double w = std::exp(-0.5 * d * std::log1p(r2));
    const double scale = w / std::pow(sd, n);
    for (std::size_t j = 0; j < x.size(); ++j) grad[j] = (gQ[j] - d * Q * x[j] / (1 + r2)) * scale / sd;
    return Q * scale;
}

}  // namespace

HypersurfaceModel HypersurfaceModel::unit_circle() {
    HypersurfaceModel m;
    m.name = "circle";
    m.P = AffinePolynomial::from_terms(2, {{1.0, {2, 0}}, {1.0, {0, 2}}, {-1.0, {0, 0}}});
    m.sigma = curves2d::parse_sigma("1 oval");
    return m;
}

HypersurfaceModel HypersurfaceModel::two_circles() {
    // ((y1 - 1)^2 + y2^2 - 1/4) ((y1 + 1)^2 + y2^2 - 1/4) expanded
    HypersurfaceModel m;
    m.name = "two-circles";
    m.R = 3.0;
    m.P = AffinePolynomial::from_terms(2, {{1.0, {4, 0}}, {2.0, {2, 2}}, {1.0, {0, 4}}, {-2.5, {2, 0}},
                                           {1.5, {0, 2}}, {0.5625, {0, 0}}});
    m.delta_K = 0.1;
    m.delta_U = 0.2;
    m.sigma = curves2d::parse_sigma("2 non-nested");
    return m;
}

HypersurfaceModel HypersurfaceModel::nested_circles() {
    // (|y|^2 - 1) (|y|^2 - 1/4); |P| peaks at 9/64 between the ovals
    HypersurfaceModel m;
    m.name = "nested-circles";
    m.P = AffinePolynomial::from_terms(2, {{1.0, {4, 0}}, {2.0, {2, 2}}, {1.0, {0, 4}}, {-1.25, {2, 0}},
                                           {-1.25, {0, 2}}, {0.25, {0, 0}}});
    m.delta_K = 0.05;
    m.delta_U = 0.1;
    m.sigma = curves2d::parse_sigma("2 nested");
    return m;
}

HypersurfaceModel HypersurfaceModel::builtin(const std::string& name) {
    if (name == "circle" || name == "1 oval") return unit_circle();
    if (name == "two-circles" || name == "2 non-nested") return two_circles();
    if (name == "nested-circles" || name == "2 nested") return nested_circles();
    if (name == "empty") return empty();
    throw InvalidArgument("unknown builtin model '" + name + "'");
}

HypersurfaceModel HypersurfaceModel::empty() {
    HypersurfaceModel m;
    m.name = "empty";
    m.P = AffinePolynomial::from_terms(2, {{1.0, {0, 0}}});
    m.sigma = curves2d::parse_sigma("empty");
    return m;
}

HypersurfaceModel HypersurfaceModel::parse(const config::KeyValueFile& f) {
    static const std::vector<std::string> known{"name", "n", "R", "delta_K", "delta_U", "sigma", "term"};
    for (const auto& e : f.entries())
        if (std::find(known.begin(), known.end(), e.key) == known.end())
            throw ConfigError("line " + std::to_string(e.line) + ": unknown model field '" + e.key + "'", e.line, e.key);
    auto need = [&](const char* key) {
        const auto* e = f.find(key);
        if (!e) throw ConfigError(std::string("model: missing field '") + key + "'", 0, key);
        return e;
    };
    HypersurfaceModel m;
    m.name = f.find("name") ? f.find("name")->value : "model";
    const auto* ne = need("n");
    m.n = static_cast<int>(config::to_integer(*ne));
    if (m.n < 1 || m.n > 2) throw ConfigError("model: n must be 1 or 2", ne->line, "n");
    m.R = config::to_double(*need("R"));
    m.delta_K = config::to_double(*need("delta_K"));
    m.delta_U = config::to_double(*need("delta_U"));
    const auto* se = need("sigma");
    try {
        m.sigma = curves2d::parse_sigma(se->value);
    } catch (const InvalidArgument& ex) {
        throw ConfigError(std::string("model: ") + ex.what(), se->line, "sigma");
    }
    std::vector<std::pair<double, std::vector<int>>> terms;
    for (const auto* t : f.all("term")) {
        const auto v = config::to_double_list(*t);
        if (static_cast<int>(v.size()) != m.n + 1)
            throw ConfigError("line " + std::to_string(t->line) + ": term needs a coefficient and " + std::to_string(m.n) +
                                  " exponents",
                              t->line, "term");
        std::vector<int> e;
        for (int j = 1; j <= m.n; ++j) {
            if (v[j] < 0 || v[j] != std::floor(v[j]))
                throw ConfigError("line " + std::to_string(t->line) + ": exponents must be nonnegative integers", t->line,
                                  "term");
            e.push_back(static_cast<int>(v[j]));
        }
        terms.push_back({v[0], e});
    }
    if (terms.empty()) throw ConfigError("model: no 'term' lines", 0, "term");
    m.P = AffinePolynomial::from_terms(m.n, terms);
    if (!(m.R > 0) || !(m.delta_K > 0) || !(m.delta_K < m.delta_U))
        throw ConfigError("model: need R > 0 and 0 < delta_K < delta_U", 0, "delta_K");
    return m;
}

HypersurfaceModel HypersurfaceModel::load(const std::string& path) { return parse(config::KeyValueFile::load(path)); }

void HypersurfaceModel::validate(int resolution) const {
    if (P.nvars() != n) throw InvalidArgument("model: P has the wrong number of variables");
    if (!(R > 0) || !(delta_K > 0) || !(delta_K < delta_U)) throw InvalidArgument("model: need R > 0, 0 < delta_K < delta_U");
    // U must stay inside the ball: |P| >= delta_U on the sphere of radius R
    const int samples = n == 1 ? 2 : 1440;
    for (int k = 0; k < samples; ++k) {
        std::vector<double> y = n == 1 ? std::vector<double>{k == 0 ? -R : R}
                                       : std::vector<double>{R * std::cos(2 * kPi * k / samples), R * std::sin(2 * kPi * k / samples)};
        if (std::fabs(P.evaluate(y)) < delta_U)
            throw CertificateFailure("model: U reaches the boundary of B(0, R) at " + point_string(y), y);
    }
    // 0 regular on U
    const double h = R / resolution;
    double gmin = std::numeric_limits<double>::infinity();
    std::vector<double> arg;
    for_each_grid_point(n, R, h, [&](std::span<const double> y) {
        if (std::fabs(P.evaluate(y)) >= delta_U) return;
        const auto g = P.gradient(y);
        const double gn = norm(g);
        if (gn < gmin) {
            gmin = gn;
            arg.assign(y.begin(), y.end());
        }
    });
    if (gmin == 0.0) throw CertificateFailure("model: grad P vanishes in U at " + point_string(arg), arg);
    if (n == 2) {
        const auto sig = curves2d::disk_topology(homogenize(P, std::max(P.actual_degree(), 0)), R, R / 256).signature;
        if (sig != sigma.signature)
            throw InvalidArgument("model: zero set has configuration '" + sig + "', declared '" + sigma.signature + "'");
    }
}

Field polynomial_field(const AffinePolynomial& P) {
    return [P](std::span<const double> y, std::span<double> grad) {
        const auto g = P.gradient(y);
        std::copy(g.begin(), g.end(), grad.begin());
        return P.evaluate(y);
    };
}

Field limit_field(const HypersurfaceModel& m) {
    const double N = fubini::gaussian_normalization(m.P);
    const double inv = 1.0 / std::sqrt(N);
    const AffinePolynomial P = m.P;
    return [P, inv](std::span<const double> y, std::span<double> grad) {
        double r2 = 0;
        for (double t : y) r2 += t * t;
        const double e = std::exp(-0.5 * r2) * inv;
        const double v = P.evaluate(y);
        const auto g = P.gradient(y);
        for (std::size_t j = 0; j < y.size(); ++j) grad[j] = (g[j] - v * y[j]) * e;
        return v * e;
    };
}

Field section_field(const HomogeneousPolynomial& s) {
    const int n = s.nvars() - 1, d = s.degree();
    std::vector<SparseTerm> terms;
    const auto& b = s.basis();
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (s.coeff(i) == 0.0) continue;
        auto e = b.exponents(i);
        terms.push_back({s.coeff(i), std::vector<int>(e.begin() + 1, e.end())});
    }
    return [terms, n, d](std::span<const double> y, std::span<double> grad) {
        const double sd = std::sqrt(double(d));
        std::vector<double> x(n), gQ(n, 0.0);
        for (int j = 0; j < n; ++j) x[j] = y[j] / sd;
        double Q = 0;
        for (const auto& t : terms) {
            double mono = t.c;
            for (int j = 0; j < n; ++j) mono *= std::pow(x[j], t.e[j]);
            Q += mono;
            for (int j = 0; j < n; ++j) {
                if (t.e[j] == 0) continue;
                double dm = t.c * t.e[j] * std::pow(x[j], t.e[j] - 1);
                for (int k = 0; k < n; ++k)
                    if (k != j) dm *= std::pow(x[k], t.e[k]);
                gQ[j] += dm;
            }
        }
        return normalize_chart(Q, gQ, x, d, n, grad);
    };
}

DeltaEpsilon delta_epsilon_at(const HypersurfaceModel& m, const Field& f, double h) {
    const int n = m.n;
    std::vector<double> grad(n);
    DeltaEpsilon out;
    out.spacing = h;
    double vmin = std::numeric_limits<double>::infinity();
    for_each_grid_point(n, m.R, h, [&](std::span<const double> y) {
        const double p = std::fabs(m.P.evaluate(y));
        if (!(p > m.delta_K && p < m.delta_U)) return;
        const double v = std::fabs(f(y, grad));
        if (v < vmin) {
            vmin = v;
            out.argmin_delta.assign(y.begin(), y.end());
        }
    });
    if (std::isinf(vmin)) throw CertificateFailure("U \\ K contains no grid point; refine the grid or widen U", {});
    if (vmin == 0.0)
        throw CertificateFailure("field vanishes on U \\ K at " + point_string(out.argmin_delta), out.argmin_delta);
    out.delta = kSafety * vmin;
    double gmin = std::numeric_limits<double>::infinity();
    for_each_grid_point(n, m.R, h, [&](std::span<const double> y) {
        if (!(std::fabs(m.P.evaluate(y)) < m.delta_U)) return;
        const double v = std::fabs(f(y, grad));
        if (v > out.delta) return;
        const double g = norm(grad);
        if (g < gmin) {
            gmin = g;
            out.argmin_epsilon.assign(y.begin(), y.end());
        }
    });
    if (std::isinf(gmin)) throw CertificateFailure("no grid point of U has |F| <= delta", {});
    if (gmin == 0.0)
        throw CertificateFailure("gradient vanishes where |F| <= delta at " + point_string(out.argmin_epsilon),
                                 out.argmin_epsilon);
    out.epsilon = kSafety * gmin;
    return out;
}

DeltaEpsilon estimate_delta_epsilon(const HypersurfaceModel& m, const Field& f, int res) {
    if (res < 2) throw InvalidArgument("grid resolution must be at least 2");
    double h = m.R / res;
    auto prev = delta_epsilon_at(m, f, h);
    for (int k = 1; k <= 5; ++k) {
        h *= 0.5;
        auto cur = delta_epsilon_at(m, f, h);
        cur.refinements = k;
        if (std::fabs(cur.delta - prev.delta) < 0.01 * prev.delta &&
            std::fabs(cur.epsilon - prev.epsilon) < 0.01 * prev.epsilon)
            return cur;
        prev = std::move(cur);
    }
    throw CertificateFailure("delta/epsilon did not converge under grid refinement (K, U too tight?)",
                             prev.argmin_epsilon);
}

DeltaEpsilon estimate_delta_epsilon(const HypersurfaceModel& m, int res) {
    return estimate_delta_epsilon(m, polynomial_field(m.P), res);
}

RescaledConstants rescaled_constants(const HypersurfaceModel& m, const DeltaEpsilon& limit, int d) {
    if (d < std::max(m.P.actual_degree(), 0)) throw InvalidArgument("rescaled_constants: d below deg P");
    const auto ps = fubini::build_peak_section(m.P, d, fubini::ProjectivePoint::origin(m.n));
    const auto at = delta_epsilon_at(m, section_field(ps.section), limit.spacing);
    RescaledConstants r;
    r.d = d;
    r.delta_prime = at.delta;
    r.epsilon_prime = at.epsilon;
    r.delta_scaled = at.delta * std::pow(std::sqrt(double(d)), m.n);
    r.epsilon_scaled = at.epsilon * std::pow(std::sqrt(double(d)), m.n + 1);
    r.delta_ratio = at.delta / limit.delta;
    r.epsilon_ratio = at.epsilon / limit.epsilon;
    r.meets_floor = r.delta_ratio >= 0.5 && r.epsilon_ratio >= 0.5;
    return r;
}

SupSample sup_norms(const HomogeneousPolynomial& q, double R, double spacing) {
    const int n = q.nvars() - 1, d = q.degree();
    if (d < 1) throw InvalidArgument("sup_norms: degree must be positive");
    const double sd = std::sqrt(double(d));
    SupSample s;
    if (n == 2) {
        const auto g = curves2d::chart_grid(q, R / sd, spacing / sd, true);
        double x[2], gq[2], gr[2];
        for (int k = 0; k < g.m * g.m; ++k) {
            const auto p = g.point(k);
            if (p[0] * p[0] + p[1] * p[1] > (R / sd) * (R / sd) * (1 + 1e-12)) continue;
            x[0] = p[0];
            x[1] = p[1];
            gq[0] = g.d1[k];
            gq[1] = g.d2[k];
            const double v = normalize_chart(g.value[k], gq, x, d, 2, gr);
            s.sup_value = std::max(s.sup_value, std::fabs(v));
            s.sup_grad = std::max(s.sup_grad, std::hypot(gr[0], gr[1]));
        }
        return s;
    }
    if (n != 1) throw NotImplemented("sup_norms: n must be 1 or 2");
    std::vector<double> c(d + 1, 0.0);
    const auto& b = q.basis();
    for (std::size_t i = 0; i < b.size(); ++i) c[b.exponents(i)[1]] = q.coeff(i);
    const int k = static_cast<int>(std::floor(R / spacing + 1e-9));
    for (int i = -k; i <= k; ++i) {
        const double x = i * spacing / sd;
        double v = 0, dv = 0;
        for (int a = d; a >= 0; --a) {
            dv = dv * x + v;
            v = v * x + c[a];
        }
        double gr[1];
        const double xs[1] = {x}, gq[1] = {dv};
        const double f = normalize_chart(v, gq, xs, d, 1, gr);
        s.sup_value = std::max(s.sup_value, std::fabs(f));
        s.sup_grad = std::max(s.sup_grad, std::fabs(gr[0]));
    }
    return s;
}

namespace {

std::uint64_t degree_seed(std::uint64_t seed, int d) { return splitmix64(seed ^ (0x5u + static_cast<std::uint64_t>(d) * 0x9E37u)); }

SupConstants finish_constants(const std::vector<int>& ds, std::vector<std::vector<SupSample>>& all) {
    SupConstants c;
    c.d_values = ds;
    for (auto& v : all) {
        std::vector<double> a(v.size()), b(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            a[i] = v[i].sup_value;
            b[i] = v[i].sup_grad;
        }
        c.sup_value.push_back(summarize(a));
        c.sup_grad.push_back(summarize(b));
        c.C1 = std::max(c.C1, c.sup_value.back().mean + 3 * c.sup_value.back().std_error);
        c.C2 = std::max(c.C2, c.sup_grad.back().mean + 3 * c.sup_grad.back().std_error);
    }
    return c;
}

void check_sup_args(int n, const std::vector<int>& ds, std::int64_t trials) {
    if (n < 1 || n > 2) throw NotImplemented("estimate_C1_C2: n must be 1 or 2");
    if (ds.empty() || trials < 2) throw InvalidArgument("estimate_C1_C2: need degrees and at least two trials");
    for (int d : ds)
        if (d < 1) throw InvalidArgument("estimate_C1_C2: degrees must be positive");
}

}  // namespace

SupConstants estimate_C1_C2_serial(int n, const std::vector<int>& ds, std::int64_t trials, double R, std::uint64_t seed,
                                   double spacing) {
    check_sup_args(n, ds, trials);
    std::vector<std::vector<SupSample>> all;
    for (int d : ds) {
        const EnsembleSpec spec{EnsembleKind::kostlan, n + 1, d, degree_seed(seed, d)};
        std::vector<SupSample> v(trials);
        for (std::int64_t t = 0; t < trials; ++t) v[t] = sup_norms(sample(spec, t), R, spacing);
        all.push_back(std::move(v));
    }
    return finish_constants(ds, all);
}

SupConstants estimate_C1_C2(int n, const std::vector<int>& ds, std::int64_t trials, double R, std::uint64_t seed,
                            double spacing) {
    check_sup_args(n, ds, trials);
    std::vector<std::vector<SupSample>> all;
    for (int d : ds) {
        const EnsembleSpec spec{EnsembleKind::kostlan, n + 1, d, degree_seed(seed, d)};
        std::vector<SupSample> v(trials);
#pragma omp parallel for schedule(static)
        for (std::int64_t t = 0; t < trials; ++t) v[t] = sup_norms(sample(spec, t), R, spacing);
        all.push_back(std::move(v));
    }
    return finish_constants(ds, all);
}

Estimate markov_filter_mass(int n, int d, double C1, double C2, std::int64_t trials, double R, std::uint64_t seed,
                            double factor, double spacing) {
    check_sup_args(n, {d}, trials);
    const EnsembleSpec spec{EnsembleKind::kostlan, n + 1, d, degree_seed(seed ^ 0x4d61726bULL, d)};
    std::vector<double> in(trials);
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < trials; ++t) {
        const auto s = sup_norms(sample(spec, t), R, spacing);
        in[t] = (s.sup_value <= factor * C1 && s.sup_grad <= factor * C2) ? 1.0 : 0.0;
    }
    return summarize(in);
}

double c_tilde(double M) { return 0.25 * std::erfc(M); }

double log_c_tilde(double M) { return std::log(0.25) + log_erfc(M); }

BarrierCertificate certificate_from_constants(double delta, double epsilon, double C1, double C2, int d) {
    if (!(delta > 0) || !(epsilon > 0) || !(C1 > 0) || !(C2 > 0))
        throw InvalidArgument("certificate constants must be positive");
    BarrierCertificate c;
    c.delta = delta;
    c.epsilon = epsilon;
    c.C1 = C1;
    c.C2 = C2;
    c.d = d;
    c.M = std::max(4 * C1 / delta, 4 * C2 / epsilon);
    c.c_tilde = c_tilde(c.M);
    c.log_c_tilde = log_c_tilde(c.M);
    return c;
}

BarrierCertificate assemble_certificate(const HypersurfaceModel& m, int d, const CertificateOptions& opt) {
    const auto limit = estimate_delta_epsilon(m, limit_field(m), opt.grid_resolution);
    const auto resc = rescaled_constants(m, limit, d);
    if (d >= opt.floor_degree && !resc.meets_floor)
        throw CertificateFailure("rescaled constants fall below half the limit constants at d = " + std::to_string(d),
                                 limit.argmin_delta);
    const auto ds = opt.sup_degrees.empty() ? std::vector<int>{d} : opt.sup_degrees;
    const auto sup = estimate_C1_C2(m.n, ds, opt.sup_trials, m.R, opt.seed, opt.sup_spacing);
    auto c = certificate_from_constants(resc.delta_prime, resc.epsilon_prime, sup.C1, sup.C2, d);
    c.limit = limit;
    c.rescaled = resc;
    c.sup = sup;
    return c;
}

namespace {

struct PresenceTrial {
    bool hit = false;
    bool indeterminate = false;
};

PresenceTrial presence_trial(const HypersurfaceModel& m, int d, const std::vector<double>* rot, std::uint64_t seed,
                             std::int64_t t, double spacing) {
    auto q = sample(EnsembleSpec{EnsembleKind::kostlan, 3, d, seed}, static_cast<std::uint64_t>(t));
    if (rot) q = rotate_orthogonal(q, *rot);
    const double sd = std::sqrt(double(d));
    const auto topo = curves2d::disk_topology(q, m.R / sd, spacing / sd);
    if (topo.flagged) return {false, true};
    return {topo.signature == m.sigma.signature, false};
}

PresenceEstimate reduce_presence(int d, const std::vector<PresenceTrial>& v) {
    PresenceEstimate e;
    e.d = d;
    e.trials = static_cast<std::int64_t>(v.size());
    for (const auto& t : v) {
        e.hits += t.hit;
        e.indeterminate += t.indeterminate;
    }
    const auto det = e.trials - e.indeterminate;
    e.probability = det ? double(e.hits) / det : 0.0;
    e.std_error = det > 1 ? std::sqrt(e.probability * (1 - e.probability) / det) : 0.0;
    e.indeterminate_fraction = e.trials ? double(e.indeterminate) / e.trials : 0.0;
    return e;
}

std::vector<double> presence_rotation(const fubini::ProjectivePoint& x) {
    if (x.n() != 2) throw InvalidArgument("presence: point must lie in RP^2");
    if (x.same_point(fubini::ProjectivePoint::origin(2), 0.0)) return {};
    return fubini::rotation_to(x.real_coords());
}

void check_presence_args(const HypersurfaceModel& m, int d, std::int64_t trials) {
    check_model_dimension(m, 2);
    if (d < 1 || trials < 1) throw InvalidArgument("presence: need d >= 1 and trials >= 1");
}

}  // namespace

PresenceEstimate presence_probability_mc_serial(const HypersurfaceModel& m, int d, std::int64_t trials,
                                                const fubini::ProjectivePoint& x, std::uint64_t seed, double spacing) {
    check_presence_args(m, d, trials);
    const auto rot = presence_rotation(x);
    std::vector<PresenceTrial> v(trials);
    for (std::int64_t t = 0; t < trials; ++t) v[t] = presence_trial(m, d, rot.empty() ? nullptr : &rot, seed, t, spacing);
    return reduce_presence(d, v);
}

PresenceEstimate presence_probability_mc(const HypersurfaceModel& m, int d, std::int64_t trials,
                                         const fubini::ProjectivePoint& x, std::uint64_t seed, double spacing) {
    check_presence_args(m, d, trials);
    const auto rot = presence_rotation(x);
    curves2d::square_mesh(2 * (static_cast<int>(std::ceil(m.R / spacing)) + 2) + 1);  // build before the workers
    std::vector<PresenceTrial> v(trials);
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t t = 0; t < trials; ++t) {
        try {
            v[t] = presence_trial(m, d, rot.empty() ? nullptr : &rot, seed, t, spacing);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return reduce_presence(d, v);
}

TrapResult isotopy_trap_check(const HypersurfaceModel& m, const BarrierCertificate& cert, std::int64_t trials,
                              std::uint64_t seed, const TrapOptions& opt) {
    check_model_dimension(m, 2);
    const int d = cert.d;
    if (d < 1 || trials < 1) throw InvalidArgument("isotopy_trap_check: need d >= 1 and trials >= 1");
    const auto ps = fubini::build_peak_section(m.P, d, fubini::ProjectivePoint::origin(2));
    const auto& sP = ps.section;
    const double nP = fubini::coefficient_l2_inner(sP, sP);
    if (!(nP > 1e-300) || !std::isfinite(nP)) throw InvalidState("isotopy_trap_check: peak section is numerically zero");
    const double sd = std::sqrt(double(d));
    const double Rc = m.R / sd, hc = opt.spacing / sd;
    const auto gP = curves2d::chart_grid(sP, Rc, hc, true);
    const int np = gP.m * gP.m;
    // per grid point: position in y, region, normalized f_P and |grad f_P|
    std::vector<double> Py(np), fP(np), gfP(np);
    std::vector<char> in_ball(np);
    for (int k = 0; k < np; ++k) {
        const auto p = gP.point(k);
        const double y[2] = {p[0] * sd, p[1] * sd};
        in_ball[k] = y[0] * y[0] + y[1] * y[1] <= m.R * m.R;
        Py[k] = std::fabs(m.P.evaluate(std::span<const double>(y, 2)));
        double gr[2];
        const double x[2] = {p[0], p[1]}, gq[2] = {gP.d1[k], gP.d2[k]};
        fP[k] = normalize_chart(gP.value[k], gq, x, d, 2, gr);
        gfP[k] = std::hypot(gr[0], gr[1]);
    }
    const auto& mesh = curves2d::square_mesh(gP.m);
    const EnsembleSpec spec{EnsembleKind::kostlan, 3, d, seed};
    TrapResult res;
    res.trials = trials;
    std::vector<double> vals(np);
    for (std::int64_t t = 0; t < trials; ++t) {
        CounterRng rng(seed, static_cast<std::uint64_t>(t), 0xa11);
        std::normal_distribution<double> half(0.0, std::sqrt(0.5));
        const double a = opt.a_override >= 0 ? opt.a_override : cert.M + std::fabs(half(rng));
        HomogeneousPolynomial tau(3, d);
        if (!opt.zero_tau) {
            int r = 0;
            for (;; ++r) {
                if (r >= opt.max_rejections) throw InvalidState("isotopy_trap_check: E_M rejection sampling stalled");
                auto s = sample(spec, (static_cast<std::uint64_t>(t) << 20) + r);
                tau = axpy(-fubini::coefficient_l2_inner(s, sP) / nP, sP, s);
                const auto sup = sup_norms(tau, m.R, opt.spacing);
                if (sup.sup_value <= 4 * cert.C1 && sup.sup_grad <= 4 * cert.C2) break;
            }
            res.rejected_tau += r;
        }
        const auto gT = curves2d::chart_grid(tau, Rc, hc);
        bool ok = true;
        for (int step = 0; step <= 10 && ok; ++step) {
            const double tt = 0.1 * step;
            for (int k = 0; k < np; ++k) vals[k] = a * gP.value[k] + tt * gT.value[k];
            // no zero on U \ K: the sign of sigma_P persists there
            for (int k = 0; k < np && ok; ++k)
                if (in_ball[k] && Py[k] > m.delta_K && Py[k] < m.delta_U && !(vals[k] * gP.value[k] > 0)) ok = false;
            // zeros inside U stay in K, and the chain of implications holds at them
            for (std::size_t e = 0; e < mesh.edges.size() && ok; ++e) {
                const auto [u, v] = mesh.edges[e];
                if ((vals[u] >= 0) == (vals[v] >= 0)) continue;
                const double s = vals[u] / (vals[u] - vals[v]);
                const auto pu = gP.point(u), pv = gP.point(v);
                const double y[2] = {(pu[0] + s * (pv[0] - pu[0])) * sd, (pu[1] + s * (pv[1] - pu[1])) * sd};
                if (y[0] * y[0] + y[1] * y[1] > m.R * m.R) continue;
                const double p = std::fabs(m.P.evaluate(std::span<const double>(y, 2)));
                if (p >= m.delta_U) continue;
                if (p > m.delta_K) ok = false;
                const double f = std::fabs(fP[u] + s * (fP[v] - fP[u]));
                const double g = std::min(gfP[u], gfP[v]);
                if (!(f <= cert.delta && g > cert.epsilon)) ++res.chain_violations;
            }
            if (!ok) break;
            const auto topo = curves2d::disk_topology(gP, vals, Rc);
            if (topo.flagged || topo.signature != m.sigma.signature) ok = false;
        }
        if (ok) ++res.verified;
    }
    res.fraction = double(res.verified) / trials;
    return res;
}

}  // namespace rhlab::transversality
