#include "rhlab/roots1d.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include "rhlab/common.hpp"
#include "rhlab/quadrature.hpp"

namespace rhlab::roots1d {
namespace {

using ZPoly = std::vector<mpz_class>;

int deg(const ZPoly& p) { return static_cast<int>(p.size()) - 1; }

void trim(ZPoly& p) {
    while (!p.empty() && p.back() == 0) p.pop_back();
}

void make_primitive(ZPoly& p) {
    mpz_class g = 0;
    for (const auto& c : p) {
        mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_mpz_t());
        if (g == 1) return;
    }
    if (g > 1)
        for (auto& c : p) mpz_divexact(c.get_mpz_t(), c.get_mpz_t(), g.get_mpz_t());
}

// lc(b)^(delta+1) * a = q*b + r; returns r.
ZPoly pseudo_remainder(ZPoly r, const ZPoly& b) {
    const int db = deg(b);
    const int delta = deg(r) - db;
    const mpz_class& lc = b.back();
    for (int k = delta; k >= 0; --k) {
        const mpz_class q = r[db + k];
        for (auto& c : r) c *= lc;
        for (int j = 0; j <= db; ++j) r[j + k] -= q * b[j];
    }
    r.resize(db);
    trim(r);
    return r;
}

int sign_changes(const std::vector<int>& s) {
    int v = 0, prev = 0;
    for (int x : s) {
        if (x == 0) continue;
        if (prev != 0 && x != prev) ++v;
        prev = x;
    }
    return v;
}

std::vector<double> trimmed(std::span<const double> a) {
    std::vector<double> v(a.begin(), a.end());
    while (!v.empty() && v.back() == 0.0) v.pop_back();
    if (v.empty()) throw InvalidArgument("root counting: zero polynomial");
    for (double x : v)
        if (!std::isfinite(x)) throw InvalidArgument("root counting: non-finite coefficient");
    return v;
}

template <class T>
constexpr T unit_roundoff() {
    return std::numeric_limits<T>::epsilon() / 2;
}

template <class T>
struct Cx {
    T re, im;
};

// p(z) and p'(z)/p(z) style quantities by Horner, plain doubles.
template <class T>
inline void horner2(const T* a, int d, T zr, T zi, Cx<T>& p, Cx<T>& dp) {
    T pr = a[d], pi = 0, qr = 0, qi = 0;
    for (int k = d - 1; k >= 0; --k) {
        const T nqr = qr * zr - qi * zi + pr, nqi = qr * zi + qi * zr + pi;
        qr = nqr;
        qi = nqi;
        const T npr = pr * zr - pi * zi + a[k], npi = pr * zi + pi * zr;
        pr = npr;
        pi = npi;
    }
    p = {pr, pi};
    dp = {qr, qi};
}

template <class T>
inline T abs_horner(const T* a, int d, T r) {
    T s = std::fabs(a[d]);
    for (int k = d - 1; k >= 0; --k) s = s * r + std::fabs(a[k]);
    return s;
}

// Initial approximations from the upper convex hull of (k, log|a_k|).
std::vector<Cx<double>> initial_guesses(const std::vector<double>& a) {
    const int d = static_cast<int>(a.size()) - 1;
    std::vector<int> hull;
    for (int k = 0; k <= d; ++k) {
        if (a[k] == 0.0) continue;
        const double yk = std::log(std::fabs(a[k]));
        while (hull.size() >= 2) {
            const int i = hull[hull.size() - 2], j = hull.back();
            const double yi = std::log(std::fabs(a[i])), yj = std::log(std::fabs(a[j]));
            if ((yj - yi) * (k - i) <= (yk - yi) * (j - i)) hull.pop_back();
            else break;
        }
        hull.push_back(k);
    }
    std::vector<Cx<double>> z;
    z.reserve(d);
    const double sigma = 0.7;
    for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
        const int i = hull[h], j = hull[h + 1], m = j - i;
        const double u = std::exp((std::log(std::fabs(a[i])) - std::log(std::fabs(a[j]))) / m);
        for (int l = 0; l < m; ++l) {
            const double ang = 2.0 * kPi * l / m + 2.0 * kPi * h / d + sigma;
            z.push_back({u * std::cos(ang), u * std::sin(ang)});
        }
    }
    return z;
}

template <class T>
bool aberth(const std::vector<T>& a, std::vector<Cx<T>>& z) {
    constexpr T kUnit = unit_roundoff<T>();
    const int d = static_cast<int>(a.size()) - 1;
    std::vector<T> rev(a.rbegin(), a.rend());
    std::vector<char> done(d, 0);
    int remaining = d;
    for (int it = 0; it < 80 && remaining > 0; ++it) {
        for (int i = 0; i < d; ++i) {
            if (done[i]) continue;
            const T zr = z[i].re, zi = z[i].im;
            const T mod = std::hypot(zr, zi);
            Cx<T> p, dp;
            T ratio_r, ratio_i;  // p / p'
            bool converged;
            if (mod <= T(1)) {
                horner2(a.data(), d, zr, zi, p, dp);
                const T pm = std::hypot(p.re, p.im);
                converged = pm <= T(4) * d * kUnit * abs_horner(a.data(), d, mod);
                const T den = dp.re * dp.re + dp.im * dp.im;
                ratio_r = (p.re * dp.re + p.im * dp.im) / den;
                ratio_i = (p.im * dp.re - p.re * dp.im) / den;
            } else {
                const T inv = T(1) / (mod * mod);
                const T wr = zr * inv, wi = -zi * inv;
                horner2(rev.data(), d, wr, wi, p, dp);
                const T pm = std::hypot(p.re, p.im);
                converged = pm <= T(4) * d * kUnit * abs_horner(rev.data(), d, T(1) / mod);
                // p'(z)/p(z) = w * (d - w * rev'(w)/rev(w))
                const T den = p.re * p.re + p.im * p.im;
                const T qr = (dp.re * p.re + dp.im * p.im) / den, qi = (dp.im * p.re - dp.re * p.im) / den;
                const T tr = d - (wr * qr - wi * qi), ti = -(wr * qi + wi * qr);
                const T lr = wr * tr - wi * ti, li = wr * ti + wi * tr;
                const T lden = lr * lr + li * li;
                ratio_r = lr / lden;
                ratio_i = -li / lden;
            }
            if (converged) {
                done[i] = 1;
                --remaining;
                continue;
            }
            T sr = T(0), si = T(0);
            for (int j = 0; j < d; ++j) {
                if (j == i) continue;
                const T dx = zr - z[j].re, dy = zi - z[j].im;
                const T inv = T(1) / (dx * dx + dy * dy);
                sr += dx * inv;
                si -= dy * inv;
            }
            // correction = N / (1 - N*S)
            const T nr = ratio_r, ni = ratio_i;
            const T br = T(1) - (nr * sr - ni * si), bi = -(nr * si + ni * sr);
            const T bden = br * br + bi * bi;
            const T cr = (nr * br + ni * bi) / bden, ci = (ni * br - nr * bi) / bden;
            if (!std::isfinite(cr) || !std::isfinite(ci)) return false;
            z[i].re -= cr;
            z[i].im -= ci;
            if (std::hypot(cr, ci) <= T(2) * kUnit * std::hypot(z[i].re, z[i].im)) {
                done[i] = 1;
                --remaining;
            }
        }
    }
    return remaining == 0;
}

}  // namespace

int SturmChain::variations_at_pos_inf() const {
    std::vector<int> s;
    for (const auto& p : polys) s.push_back(sgn(p.back()));
    return sign_changes(s);
}

int SturmChain::variations_at_neg_inf() const {
    std::vector<int> s;
    for (const auto& p : polys) s.push_back(sgn(p.back()) * ((deg(p) % 2) ? -1 : 1));
    return sign_changes(s);
}

SturmChain build_sturm_chain(std::span<const double> a_in) {
    const auto a = trimmed(a_in);
    // a[k] = m_k * 2^e_k exactly; scale every coefficient by 2^-min(e).
    int emin = 0;
    bool first = true;
    std::vector<std::pair<mpz_class, int>> parts;
    for (double x : a) {
        if (x == 0.0) {
            parts.push_back({0, 0});
            continue;
        }
        int e;
        const double m = std::frexp(x, &e);
        mpz_class mi;
        mpz_set_d(mi.get_mpz_t(), std::ldexp(m, 53));
        parts.push_back({mi, e - 53});
        if (first || e - 53 < emin) emin = e - 53;
        first = false;
    }
    ZPoly p0;
    for (auto& [m, e] : parts) {
        mpz_class v = m;
        if (m != 0) mpz_mul_2exp(v.get_mpz_t(), v.get_mpz_t(), static_cast<mp_bitcnt_t>(e - emin));
        p0.push_back(v);
    }
    make_primitive(p0);
    SturmChain chain;
    chain.polys.push_back(p0);
    if (deg(p0) == 0) return chain;
    ZPoly p1(deg(p0));
    for (int k = 1; k <= deg(p0); ++k) p1[k - 1] = p0[k] * k;
    make_primitive(p1);
    chain.polys.push_back(p1);
    while (deg(chain.polys.back()) > 0) {
        const auto& prev = chain.polys[chain.polys.size() - 2];
        const auto& cur = chain.polys.back();
        ZPoly r = pseudo_remainder(prev, cur);
        if (r.empty()) break;
        // rem = r / lc^(delta+1); next = -rem
        const int delta = deg(prev) - deg(cur);
        const bool lc_pos = sgn(cur.back()) > 0 || (delta + 1) % 2 == 0;
        if (lc_pos)
            for (auto& c : r) c = -c;
        make_primitive(r);
        chain.polys.push_back(std::move(r));
    }
    return chain;
}

RootCountResult count_real_roots(std::span<const double> a) {
    auto chain = build_sturm_chain(a);
    const int d = deg(chain.polys.front());
    return {chain.variations_at_neg_inf() - chain.variations_at_pos_inf(), d, true};
}

namespace {

// Aberth in precision T, then a Gershgorin-type inclusion: the roots lie in disjoint
// discs, the real ones on the axis. -1 when the inclusion cannot be certified.
template <class T>
int certified_count(const std::vector<double>& a_d) {
    constexpr T kUnit = unit_roundoff<T>();
    const std::vector<T> a(a_d.begin(), a_d.end());
    const int d = static_cast<int>(a.size()) - 1;
    const auto z0 = initial_guesses(a_d);
    if (static_cast<int>(z0.size()) != d) return -1;
    std::vector<Cx<T>> z;
    for (const auto& w : z0) z.push_back({w.re, w.im});
    if (!aberth(a, z)) return -1;

    // Snap near-real approximations onto the axis and force conjugate symmetry.
    std::vector<Cx<T>> upper, centers;
    int lower = 0;
    for (const auto& w : z) {
        if (std::fabs(w.im) <= T(1e-8) * std::hypot(w.re, w.im)) centers.push_back({w.re, T(0)});
        else if (w.im > 0) upper.push_back(w);
        else ++lower;
    }
    if (lower != static_cast<int>(upper.size())) return -1;
    const int nreal = static_cast<int>(centers.size());
    for (const auto& w : upper) {
        centers.push_back(w);
        centers.push_back({w.re, -w.im});
    }

    // Radii d*|W_i| bound the discs D(z_i - W_i, (d-1)|W_i|) of the matrix
    // diag(z) - W 1^T, whose characteristic polynomial is P / a_d.
    std::vector<T> rad(d);
    const T ad = std::fabs(a[d]);
    for (int i = 0; i < d; ++i) {
        const T zr = centers[i].re, zi = centers[i].im;
        Cx<T> p, dp;
        horner2(a.data(), d, zr, zi, p, dp);
        const T s = abs_horner(a.data(), d, std::hypot(zr, zi)) / (1 - 4 * d * kUnit);
        const T pbound = (std::hypot(p.re, p.im) + 12 * d * kUnit * s) * (1 + 4 * kUnit);
        T prod = ad;
        for (int j = 0; j < d; ++j)
            if (j != i) prod *= std::hypot(zr - centers[j].re, zi - centers[j].im);
        const T dlow = prod * (1 - 6 * d * kUnit);
        if (!(dlow > 0) || !std::isfinite(dlow) || !std::isfinite(pbound)) return -1;
        rad[i] = d * pbound / dlow * (1 + T(1e-12));
        if (!std::isfinite(rad[i])) return -1;
        if (i >= nreal && !(std::fabs(zi) * (1 - 4 * kUnit) > rad[i])) return -1;
    }
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const T dist = std::hypot(centers[i].re - centers[j].re, centers[i].im - centers[j].im);
            if (!(dist * (1 - 8 * kUnit) > (rad[i] + rad[j]) * (1 + 4 * kUnit))) return -1;
        }
    return nreal;
}

}  // namespace

int certified_real_root_count(std::span<const double> a_in, bool extended_retry) {
    const auto a = trimmed(a_in);
    const int d = static_cast<int>(a.size()) - 1;
    if (d < 3 || a[0] == 0.0) return -1;
    const int c = certified_count<double>(a);
    if (c >= 0 || !extended_retry || std::numeric_limits<long double>::digits <= 53) return c;
    return certified_count<long double>(a);
}

RootCountResult count_real_roots_fast(std::span<const double> a, bool* used_fallback) {
    const auto t = trimmed(a);
    const int d = static_cast<int>(t.size()) - 1;
    const int c = certified_real_root_count(t);
    if (used_fallback) *used_fallback = c < 0;
    if (c >= 0) return {c, d, true};
    return count_real_roots(t);
}

std::vector<double> affine_coefficients(const HomogeneousPolynomial& q) {
    if (q.nvars() != 2) throw InvalidArgument("affine_coefficients: need a two-variable polynomial");
    return {q.coeffs().begin(), q.coeffs().end()};
}

namespace {

void check_univariate(const EnsembleSpec& spec) {
    spec.validate();
    if (spec.nvars != 2) throw InvalidArgument("root statistics need a univariate ensemble (nvars = 2)");
}

// One trial: sample, count, assert the parity and range facts.
int trial_count(const EnsembleSpec& spec, std::span<const double> scales, std::uint64_t t, std::vector<double>& buf,
                bool& fallback) {
    sample_into(spec, scales, t, buf);
    const auto r = count_real_roots_fast(buf, &fallback);
    const int d = spec.degree;
    if (buf[d] != 0.0 && (r.count < 0 || r.count > d || (r.count - d) % 2 != 0))
        throw InvalidState("root count violates parity/range: count " + std::to_string(r.count) + " at degree " +
                           std::to_string(d));
    return r.count;
}

ExpectationEstimate finish(const EnsembleSpec& spec, const std::vector<double>& counts, std::int64_t fallbacks) {
    ExpectationEstimate e;
    static_cast<Estimate&>(e) = summarize(counts);
    e.spec = spec;
    e.exact_fallbacks = fallbacks;
    return e;
}

}  // namespace

ExpectationEstimate expected_roots_mc_serial(const EnsembleSpec& spec, std::int64_t trials) {
    check_univariate(spec);
    if (trials <= 0) throw InvalidArgument("expected_roots_mc: trials must be positive");
    const auto scales = coefficient_scales(spec);
    std::vector<double> counts(trials), buf(scales.size());
    std::int64_t fb = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
        bool f = false;
        counts[t] = trial_count(spec, scales, t, buf, f);
        fb += f;
    }
    return finish(spec, counts, fb);
}

ExpectationEstimate expected_roots_mc(const EnsembleSpec& spec, std::int64_t trials) {
    check_univariate(spec);
    if (trials <= 0) throw InvalidArgument("expected_roots_mc: trials must be positive");
    const auto scales = coefficient_scales(spec);
    std::vector<double> counts(trials);
    std::int64_t fb = 0;
    std::exception_ptr err;
#pragma omp parallel reduction(+ : fb)
    {
        std::vector<double> buf(scales.size());
#pragma omp for schedule(dynamic, 256)
        for (std::int64_t t = 0; t < trials; ++t) {
            try {
                bool f = false;
                counts[t] = trial_count(spec, scales, t, buf, f);
                fb += f;
            } catch (...) {
#pragma omp critical
                err = std::current_exception();
            }
        }
    }
    if (err) std::rethrow_exception(err);
    return finish(spec, counts, fb);
}

double gamma_speed(const EnsembleSpec& spec, double t) {
    check_univariate(spec);
    const int d = spec.degree;
    if (d == 0) return 0.0;
    // log w_k^2
    auto logw2 = [&](int k) { return spec.kind == EnsembleKind::kac ? 0.0 : log_binomial(d, k); };
    t = std::fabs(t);
    if (t * t < 1e-150) return std::exp(0.5 * (logw2(1) - logw2(0)));
    const double lt = 2.0 * std::log(t);
    std::vector<double> e(d + 1);
    double emax = -INFINITY;
    for (int k = 0; k <= d; ++k) {
        e[k] = logw2(k) + k * lt;
        emax = std::max(emax, e[k]);
    }
    // p_k proportional to w_k^2 t^(2k); speed^2 = Var_p(k) / t^2
    double z = 0.0, m1 = 0.0;
    for (int k = 0; k <= d; ++k) {
        if (e[k] < emax - 45.0) {
            e[k] = 0.0;
            continue;
        }
        e[k] = std::exp(e[k] - emax);
        z += e[k];
        m1 += k * e[k];
    }
    const double mu = m1 / z;
    double var = 0.0;
    for (int k = 0; k <= d; ++k)
        if (e[k] != 0.0) var += e[k] * (k - mu) * (k - mu);
    var /= z;
    return std::sqrt(var) / t;
}

double expected_roots_crofton(const EnsembleSpec& spec) {
    check_univariate(spec);
    // even integrand: (2/pi) * int_0^{pi/2} speed(tan u) sec^2 u du
    auto f = [&](double u) {
        const double c = std::cos(u);
        return gamma_speed(spec, std::tan(u)) / (c * c);
    };
    const double scale = 2.0 / kPi;
    try {
        const auto r = quad::integrate(f, 0.0, kPi / 2, 1e-9 / scale);
        return scale * r.value;
    } catch (const NumericalFailure& e) {
        throw NumericalFailure(e.what(), scale * e.partial_estimate);
    }
}

}  // namespace rhlab::roots1d
