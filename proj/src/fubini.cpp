#include "rhlab/fubini.hpp"

#include <cmath>
#include <random>

#include "rhlab/common.hpp"
#include "rhlab/quadrature.hpp"
#include "rhlab/rng.hpp"

namespace rhlab::fubini {
namespace {

using cd = std::complex<double>;

// n! * int over {s_1 + ... + s_n <= S} of the phase average of Re(a conj(b)),
// with v = (sqrt(s0), sqrt(s1) e^{i psi_1}, ...). Distinct monomials are
// orthogonal on the torus, so the phase average is sum_alpha a_alpha b_alpha s^alpha;
// that polynomial is integrated exactly by Gauss-Legendre.
double toric_integral(const HomogeneousPolynomial& a, const HomogeneousPolynomial& b, double S) {
    const int nv = a.nvars(), n = nv - 1, d = a.degree();
    if (b.nvars() != nv || b.degree() != d) throw InvalidArgument("L2 product: polynomials of different shape");
    S = std::clamp(S, 0.0, 1.0);
    if (S == 0.0) return 0.0;
    const auto& basis = a.basis();
    std::vector<double> c;
    std::vector<int> ex;
    for (std::size_t i = 0; i < basis.size(); ++i) {
        const double p = a.coeff(i) * b.coeff(i);
        if (p == 0.0) continue;
        c.push_back(p);
        for (int e : basis.exponents(i)) ex.push_back(e);
    }
    if (c.empty()) return 0.0;
    const auto& gt = quad::gauss_legendre(d / 2 + 3);
    const auto& gw = quad::gauss_legendre(d / 2 + 2);
    std::vector<double> pw(static_cast<std::size_t>(nv) * (d + 1));
    auto avg = [&](std::span<const double> s) {
        double s0 = 1.0;
        for (double x : s) s0 -= x;
        for (int j = 0; j < nv; ++j) {
            const double base = j == 0 ? std::max(s0, 0.0) : s[j - 1];
            double* row = &pw[static_cast<std::size_t>(j) * (d + 1)];
            row[0] = 1.0;
            for (int k = 1; k <= d; ++k) row[k] = row[k - 1] * base;
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            double t = c[i];
            for (int j = 0; j < nv; ++j) t *= pw[static_cast<std::size_t>(j) * (d + 1) + ex[i * nv + j]];
            acc += t;
        }
        return acc;
    };
    double total = 0.0;
    for (std::size_t i = 0; i < gt.nodes.size(); ++i) {
        const double t = 0.5 * S * (gt.nodes[i] + 1.0), wt = 0.5 * S * gt.weights[i];
        if (n == 1) {
            const double s[1] = {t};
            total += wt * avg(s);
        } else {
            double inner = 0.0;
            for (std::size_t j = 0; j < gw.nodes.size(); ++j) {
                const double w = 0.5 * (gw.nodes[j] + 1.0);
                const double s[2] = {t * w, t * (1.0 - w)};
                inner += 0.5 * gw.weights[j] * avg(s);
            }
            total += wt * t * inner;
        }
    }
    return total * std::exp(log_factorial(n));
}

double mc_inner_cp3(const HomogeneousPolynomial& a, const HomogeneousPolynomial& b) {
    const int T = 400000;
    CounterRng rng(0x5eed, 3);
    std::normal_distribution<double> g;
    std::vector<cd> v(4);
    double acc = 0.0;
    for (int t = 0; t < T; ++t) {
        double nrm = 0.0;
        for (auto& z : v) {
            z = cd(g(rng), g(rng));
            nrm += std::norm(z);
        }
        for (auto& z : v) z /= std::sqrt(nrm);
        acc += std::real(evaluate<cd>(a, v) * std::conj(evaluate<cd>(b, v)));
    }
    return acc / T;
}

double inner(const HomogeneousPolynomial& a, const HomogeneousPolynomial& b, double S) {
    const int n = a.nvars() - 1;
    if (n == 1 || n == 2) return toric_integral(a, b, S);
    if (n == 3 && S >= 1.0) return mc_inner_cp3(a, b);
    throw NotImplemented("L2 integration over CP^" + std::to_string(n) + " is not supported");
}

std::vector<double> unit_real(std::span<const double> v) {
    double nrm = 0.0;
    for (double x : v) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0)) throw InvalidArgument("zero vector is not a projective point");
    std::vector<double> u(v.begin(), v.end());
    for (double& x : u) x /= nrm;
    return u;
}

}  // namespace

ProjectivePoint ProjectivePoint::from_complex(std::span<const std::complex<double>> v) {
    if (v.size() < 2) throw InvalidArgument("projective point needs at least two coordinates");
    double nrm = 0.0;
    for (const auto& z : v) nrm += std::norm(z);
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0)) throw InvalidArgument("zero vector is not a projective point");
    ProjectivePoint p;
    p.homog_.assign(v.begin(), v.end());
    std::size_t first = 0;
    while (std::abs(p.homog_[first]) == 0.0) ++first;
    const cd rot = std::conj(p.homog_[first]) / std::abs(p.homog_[first]) / nrm;
    double best = -1.0;
    p.real_ = true;
    for (std::size_t j = 0; j < p.homog_.size(); ++j) {
        p.homog_[j] *= rot;
        if (j == first) p.homog_[j] = std::abs(p.homog_[j]);
        if (std::abs(p.homog_[j]) > best) {
            best = std::abs(p.homog_[j]);
            p.chart_ = static_cast<int>(j);
        }
        if (p.homog_[j].imag() != 0.0) p.real_ = false;
    }
    return p;
}

ProjectivePoint ProjectivePoint::from_real(std::span<const double> v) {
    std::vector<cd> c(v.begin(), v.end());
    return from_complex(c);
}

ProjectivePoint ProjectivePoint::from_chart(std::span<const double> x) {
    std::vector<double> v{1.0};
    v.insert(v.end(), x.begin(), x.end());
    return from_real(v);
}

ProjectivePoint ProjectivePoint::origin(int n) {
    std::vector<double> v(n + 1, 0.0);
    v[0] = 1.0;
    return from_real(v);
}

std::vector<double> ProjectivePoint::real_coords() const {
    if (!real_) throw InvalidArgument("projective point is not real");
    std::vector<double> r;
    for (const auto& z : homog_) r.push_back(z.real());
    return r;
}

bool ProjectivePoint::same_point(const ProjectivePoint& o, double tol) const {
    if (o.homog_.size() != homog_.size()) return false;
    cd ip = 0.0;
    for (std::size_t j = 0; j < homog_.size(); ++j) ip += std::conj(homog_[j]) * o.homog_[j];
    return std::abs(ip) >= 1.0 - tol;
}

double fs_pointwise_norm_sq(const HomogeneousPolynomial& q, const ProjectivePoint& x) {
    if (x.n() + 1 != q.nvars()) throw InvalidArgument("point dimension does not match polynomial");
    if (x.is_real()) {
        const auto v = x.real_coords();
        const double val = evaluate<double>(q, v);
        return val * val;
    }
    return std::norm(evaluate<cd>(q, x.homog()));
}

double fs_pointwise_norm_sq(const HomogeneousPolynomial& q, std::span<const double> v) {
    // rescale to the unit representative first: |Q(v)|/|v|^d = |Q(v/|v|)|
    const auto u = unit_real(v);
    const double val = evaluate<double>(q, u);
    return val * val;
}

double fs_log_pointwise_norm_sq(const HomogeneousPolynomial& q, std::span<const double> v) {
    const auto u = unit_real(v);
    std::vector<long double> ul(u.begin(), u.end());
    const long double val = evaluate<long double>(q, ul);
    return static_cast<double>(2.0L * std::log(std::fabs(val)));
}

double fs_l2_inner(const HomogeneousPolynomial& a, const HomogeneousPolynomial& b) { return inner(a, b, 1.0); }

double coefficient_l2_inner(const HomogeneousPolynomial& a, const HomogeneousPolynomial& b) {
    if (a.nvars() != b.nvars() || a.degree() != b.degree()) throw InvalidArgument("L2 product: polynomials of different shape");
    const auto& basis = a.basis();
    const int n = a.nvars() - 1, d = a.degree();
    std::vector<double> terms;
    terms.reserve(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
        if (a.coeff(i) == 0.0 || b.coeff(i) == 0.0) continue;
        terms.push_back(a.coeff(i) * b.coeff(i) * std::exp(-2.0 * log_kostlan_weight(basis.exponents(i), d, n)));
    }
    return pairwise_sum(terms);
}

double fs_l2_norm_sq(const HomogeneousPolynomial& q) {
    if (q.is_zero()) return 0.0;
    return inner(q, q, 1.0);
}

double fs_distance_from_origin(std::span<const double> x) {
    double r2 = 0.0;
    for (double t : x) r2 += t * t;
    return std::atan(std::sqrt(r2)) / std::sqrt(kPi);
}

double chart_radius_of_fs_ball(double fs_radius) {
    const double theta = fs_radius * std::sqrt(kPi);
    if (theta >= kPi / 2) return INFINITY;
    return std::tan(theta);
}

double l2_mass_fraction(const HomogeneousPolynomial& q, const ProjectivePoint& center, double fs_radius) {
    if (center.n() + 1 != q.nvars()) throw InvalidArgument("center dimension does not match polynomial");
    const auto rot = rotation_to(center.real_coords());
    const auto qc = rotate_orthogonal(q, rot);  // qc(e0) = q(center)
    const double total = inner(qc, qc, 1.0);
    if (!(total > 0.0)) throw InvalidArgument("mass fraction of the zero section");
    const double theta = fs_radius * std::sqrt(kPi);
    // ball about [1:0..0] of FS angle theta is {|v_0|^2 > cos^2 theta}
    const double S = theta >= kPi / 2 ? 1.0 : std::pow(std::sin(theta), 2);
    return inner(qc, qc, S) / total;
}

double gaussian_normalization(const AffinePolynomial& p) {
    const int n = p.nvars(), k = std::max(p.degree(), 0);
    if (n > 3) throw NotImplemented("gaussian_normalization: n > 3");
    // Z_j = sqrt(t_j) e^{i psi_j}, t_j ~ Exp(1): Gauss-Laguerre in t, trapezoid in psi.
    const auto& gl = quad::gauss_laguerre(k / 2 + 2);
    const int M = k + 1;
    const int q = static_cast<int>(gl.nodes.size());
    std::vector<int> ti(n, 0), pi(n, 0);
    std::vector<cd> z(n);
    double total = 0.0;
    long long tcount = 1, pcount = 1;
    for (int j = 0; j < n; ++j) {
        tcount *= q;
        pcount *= M;
    }
    for (long long a = 0; a < tcount; ++a) {
        long long r = a;
        double w = 1.0;
        for (int j = 0; j < n; ++j) {
            ti[j] = static_cast<int>(r % q);
            r /= q;
            w *= gl.weights[ti[j]];
        }
        double acc = 0.0;
        for (long long b = 0; b < pcount; ++b) {
            long long s = b;
            for (int j = 0; j < n; ++j) {
                pi[j] = static_cast<int>(s % M);
                s /= M;
                z[j] = std::polar(std::sqrt(gl.nodes[ti[j]]), 2.0 * kPi * pi[j] / M);
            }
            cd val = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) {
                if (p.coeffs()[i] == 0.0) continue;
                cd t = p.coeffs()[i];
                auto e = p.exponents(i);
                for (int j = 0; j < n; ++j)
                    for (int m = 0; m < e[j]; ++m) t *= z[j];
                val += t;
            }
            acc += std::norm(val);
        }
        total += w * acc / static_cast<double>(pcount);
    }
    return total * std::exp(log_factorial(n));
}

std::vector<double> rotation_to(std::span<const double> x) {
    const int N = static_cast<int>(x.size());
    const auto u = unit_real(x);
    std::vector<std::vector<double>> cols{u};
    for (int e = 0; e < N && static_cast<int>(cols.size()) < N; ++e) {
        std::vector<double> v(N, 0.0);
        v[e] = 1.0;
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& c : cols) {
                double dot = 0.0;
                for (int i = 0; i < N; ++i) dot += c[i] * v[i];
                for (int i = 0; i < N; ++i) v[i] -= dot * c[i];
            }
        double nrm = 0.0;
        for (double t : v) nrm += t * t;
        nrm = std::sqrt(nrm);
        if (nrm < 1e-8) continue;
        for (double& t : v) t /= nrm;
        cols.push_back(v);
    }
    std::vector<double> r(N * N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) r[i * N + j] = cols[j][i];
    return r;
}

PeakSection build_peak_section(const AffinePolynomial& p, int d, const ProjectivePoint& x) {
    const int k = std::max(p.actual_degree(), 0);
    const int n = p.nvars();
    if (d < k) throw InvalidArgument("build_peak_section: d below deg P");
    if (x.n() != n) throw InvalidArgument("build_peak_section: point dimension mismatch");
    const auto xr = x.real_coords();
    const double norm2 = gaussian_normalization(p);
    if (!(norm2 > 0.0)) throw InvalidArgument("build_peak_section: P is zero");
    const double nrm = std::sqrt(norm2);
    // coefficient of X0^{d-|b|} X^b is a_b sqrt(d)^{|b|} * sqrt(d)^n / nrm
    std::vector<std::pair<double, std::vector<int>>> terms;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.coeffs()[i] == 0.0) continue;
        auto e = p.exponents(i);
        int t = 0;
        for (int v : e) t += v;
        terms.push_back({p.coeffs()[i] * std::pow(std::sqrt(double(d)), t + n) / nrm, {e.begin(), e.end()}});
    }
    auto centered = homogenize(AffinePolynomial::from_terms(n, terms), d);
    const bool at_origin = x.same_point(ProjectivePoint::origin(n), 0.0);
    std::vector<double> rot(static_cast<std::size_t>((n + 1) * (n + 1)), 0.0);
    if (at_origin) {
        for (int i = 0; i <= n; ++i) rot[i * (n + 1) + i] = 1.0;
    } else {
        rot = rotation_to(xr);
    }
    // section = centered o r^{-1} = centered o r^T
    std::vector<double> rt(rot.size());
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) rt[i * (n + 1) + j] = rot[j * (n + 1) + i];
    auto section = rotate_orthogonal(centered, rt);
    return PeakSection{p, d, rot, nrm, centered, section};
}

namespace {

void check_pointwise_args(const EnsembleSpec& spec, const ProjectivePoint& x, std::int64_t trials) {
    spec.validate();
    if (spec.kind != EnsembleKind::kostlan) throw InvalidArgument("expected_pointwise_value: Kostlan ensemble only");
    if (x.n() + 1 != spec.nvars) throw InvalidArgument("expected_pointwise_value: dimension mismatch");
    if (trials < 1) throw InvalidArgument("expected_pointwise_value: trials must be positive");
}

}  // namespace

Estimate expected_pointwise_value_serial(const EnsembleSpec& spec, const ProjectivePoint& x, std::int64_t trials) {
    check_pointwise_args(spec, x, trials);
    const auto v = x.real_coords();
    const auto scales = coefficient_scales(spec);
    std::vector<double> vals(trials), buf(scales.size());
    for (std::int64_t t = 0; t < trials; ++t) {
        sample_into(spec, scales, t, buf);
        vals[t] = std::fabs(evaluate<double>(HomogeneousPolynomial(spec.nvars, spec.degree, buf), v));
    }
    return summarize(vals);
}

Estimate expected_pointwise_value(const EnsembleSpec& spec, const ProjectivePoint& x, std::int64_t trials) {
    check_pointwise_args(spec, x, trials);
    const auto v = x.real_coords();
    const auto scales = coefficient_scales(spec);
    std::vector<double> vals(trials);
#pragma omp parallel
    {
        std::vector<double> buf(scales.size());
#pragma omp for schedule(static)
        for (std::int64_t t = 0; t < trials; ++t) {
            sample_into(spec, scales, t, buf);
            vals[t] = std::fabs(evaluate<double>(HomogeneousPolynomial(spec.nvars, spec.degree, buf), v));
        }
    }
    return summarize(vals);
}

}  // namespace rhlab::fubini
