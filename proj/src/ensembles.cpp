#include "rhlab/ensembles.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <random>

#include "rhlab/common.hpp"
#include "rhlab/rng.hpp"

namespace rhlab {
namespace {

std::size_t binom(std::size_t n, std::size_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::size_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

void enumerate(int nvars, int remaining, int pos, std::vector<int>& cur, std::vector<int>& out) {
    if (pos == nvars - 1) {
        cur[pos] = remaining;
        out.insert(out.end(), cur.begin(), cur.end());
        return;
    }
    for (int a = remaining; a >= 0; --a) {
        cur[pos] = a;
        enumerate(nvars, remaining - a, pos + 1, cur, out);
    }
}

void check_len(const HomogeneousPolynomial& q, std::size_t len) {
    if (len != static_cast<std::size_t>(q.nvars()))
        throw InvalidArgument("evaluation point has wrong dimension");
}

std::vector<double> mul_linear(std::span<const double> p, int nv, int deg, std::span<const double> ell) {
    const auto& from = *monomial_basis(nv, deg);
    const auto& to = *monomial_basis(nv, deg + 1);
    std::vector<double> out(to.size(), 0.0);
    std::vector<int> e(nv);
    for (std::size_t i = 0; i < from.size(); ++i) {
        if (p[i] == 0.0) continue;
        auto a = from.exponents(i);
        std::copy(a.begin(), a.end(), e.begin());
        for (int j = 0; j < nv; ++j) {
            if (ell[j] == 0.0) continue;
            ++e[j];
            out[to.rank(e)] += p[i] * ell[j];
            --e[j];
        }
    }
    return out;
}

// R is homogeneous of degree D in m variables; forms holds m linear forms in
// N variables (row-major m x N). Returns R(forms) in N variables.
std::vector<double> compose_rec(std::span<const double> R, int m, int D, std::span<const double> forms, int N) {
    const auto& out_basis = *monomial_basis(N, D);
    if (m == 1) {
        std::vector<double> acc{R[0]};
        for (int e = 0; e < D; ++e) acc = mul_linear(acc, N, e, forms.first(N));
        (void)out_basis;
        return acc;
    }
    const auto& basis = *monomial_basis(m, D);
    std::vector<std::vector<double>> parts(D + 1);
    for (int a = 0; a <= D; ++a) parts[a].assign(count_monomials(m - 1, D - a), 0.0);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        auto al = basis.exponents(i);
        const int a = al[0];
        parts[a][monomial_basis(m - 1, D - a)->rank(al.subspan(1))] = R[i];
    }
    auto rest = forms.subspan(N);
    std::vector<double> acc = compose_rec(parts[D], m - 1, 0, rest, N);
    for (int a = D - 1; a >= 0; --a) {
        acc = mul_linear(acc, N, D - a - 1, forms.first(N));
        auto s = compose_rec(parts[a], m - 1, D - a, rest, N);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += s[i];
    }
    return acc;
}

}  // namespace

int MultiIndex::total() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }

MonomialBasis::MonomialBasis(int nvars, int degree) : nvars_(nvars), degree_(degree) {
    if (nvars < 1 || degree < 0) throw InvalidArgument("MonomialBasis: bad nvars/degree");
    size_ = count_monomials(nvars, degree);
    exps_.reserve(size_ * nvars);
    std::vector<int> cur(nvars);
    enumerate(nvars, degree, 0, cur, exps_);
}

std::size_t MonomialBasis::rank(std::span<const int> alpha) const {
    std::size_t r = 0;
    int s = degree_;
    for (int j = 0; j + 1 < nvars_; ++j) {
        const int rem = nvars_ - j - 1;
        const int gap = s - alpha[j];
        if (gap > 0) r += binom(static_cast<std::size_t>(gap - 1 + rem), static_cast<std::size_t>(rem));
        s -= alpha[j];
    }
    return r;
}

std::size_t count_monomials(int nvars, int degree) {
    return binom(static_cast<std::size_t>(degree + nvars - 1), static_cast<std::size_t>(nvars - 1));
}

std::shared_ptr<const MonomialBasis> monomial_basis(int nvars, int degree) {
    static std::map<std::pair<int, int>, std::shared_ptr<const MonomialBasis>> cache;
    static std::mutex mu;
    std::lock_guard lock(mu);
    auto& slot = cache[{nvars, degree}];
    if (!slot) slot = std::make_shared<const MonomialBasis>(nvars, degree);
    return slot;
}

HomogeneousPolynomial::HomogeneousPolynomial(int nvars, int degree)
    : basis_(monomial_basis(nvars, degree)), coeffs_(basis_->size(), 0.0) {}

HomogeneousPolynomial::HomogeneousPolynomial(int nvars, int degree, std::vector<double> coeffs)
    : basis_(monomial_basis(nvars, degree)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != basis_->size())
        throw InvalidArgument("HomogeneousPolynomial: coefficient count does not match binomial(d+n, n)");
}

bool HomogeneousPolynomial::is_zero() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return c == 0.0; });
}

AffinePolynomial::AffinePolynomial(int nvars, int degree, std::vector<double> coeffs)
    : n_(nvars), k_(degree), basis_(monomial_basis(nvars + 1, degree)), coeffs_(std::move(coeffs)) {
    if (nvars < 1) throw InvalidArgument("AffinePolynomial: nvars < 1");
    if (coeffs_.size() != basis_->size()) throw InvalidArgument("AffinePolynomial: wrong coefficient count");
}

AffinePolynomial AffinePolynomial::from_terms(int nvars,
                                              const std::vector<std::pair<double, std::vector<int>>>& terms) {
    int k = 0;
    for (const auto& [c, e] : terms) {
        if (static_cast<int>(e.size()) != nvars) throw InvalidArgument("term has wrong number of exponents");
        int t = 0;
        for (int x : e) {
            if (x < 0) throw InvalidArgument("negative exponent");
            t += x;
        }
        k = std::max(k, t);
    }
    auto basis = monomial_basis(nvars + 1, k);
    std::vector<double> c(basis->size(), 0.0);
    std::vector<int> full(nvars + 1);
    for (const auto& [coef, e] : terms) {
        int t = 0;
        for (int j = 0; j < nvars; ++j) {
            full[j + 1] = e[j];
            t += e[j];
        }
        full[0] = k - t;
        c[basis->rank(full)] += coef;
    }
    return AffinePolynomial(nvars, k, std::move(c));
}

std::span<const int> AffinePolynomial::exponents(std::size_t i) const { return basis_->exponents(i).subspan(1); }

int AffinePolynomial::actual_degree() const {
    int deg = -1;
    for (std::size_t i = 0; i < coeffs_.size(); ++i)
        if (coeffs_[i] != 0.0) deg = std::max(deg, k_ - basis_->exponents(i)[0]);
    return deg;
}

double AffinePolynomial::evaluate(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_) throw InvalidArgument("AffinePolynomial::evaluate: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        if (coeffs_[i] == 0.0) continue;
        double t = coeffs_[i];
        auto e = exponents(i);
        for (int j = 0; j < n_; ++j)
            for (int p = 0; p < e[j]; ++p) t *= x[j];
        s += t;
    }
    return s;
}

std::vector<double> AffinePolynomial::gradient(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != n_) throw InvalidArgument("AffinePolynomial::gradient: dimension mismatch");
    std::vector<double> g(n_, 0.0);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        if (coeffs_[i] == 0.0) continue;
        auto e = exponents(i);
        for (int j = 0; j < n_; ++j) {
            if (e[j] == 0) continue;
            double t = coeffs_[i] * e[j];
            for (int l = 0; l < n_; ++l) {
                const int pw = e[l] - (l == j ? 1 : 0);
                for (int p = 0; p < pw; ++p) t *= x[l];
            }
            g[j] += t;
        }
    }
    return g;
}

void EnsembleSpec::validate() const {
    if (nvars < 2) throw InvalidArgument("EnsembleSpec: nvars must be >= 2");
    if (degree < 0) throw InvalidArgument("EnsembleSpec: negative degree");
    if (kind == EnsembleKind::kac && nvars != 2) throw InvalidArgument("Kac ensemble needs nvars = 2");
}

const char* to_string(EnsembleKind k) { return k == EnsembleKind::kac ? "kac" : "kostlan"; }

EnsembleKind parse_ensemble_kind(const std::string& s) {
    if (s == "kac") return EnsembleKind::kac;
    if (s == "kostlan") return EnsembleKind::kostlan;
    throw InvalidArgument("unknown ensemble '" + s + "'");
}

double log_kostlan_weight(std::span<const int> alpha, int d, int n) {
    if (static_cast<int>(alpha.size()) != n + 1) throw InvalidArgument("kostlan_weight: alpha has wrong length");
    int t = 0;
    double l = log_factorial(d + n) - log_factorial(n);
    for (int a : alpha) {
        if (a < 0) throw InvalidArgument("kostlan_weight: negative exponent");
        t += a;
        l -= log_factorial(a);
    }
    if (t != d) throw InvalidArgument("kostlan_weight: |alpha| != d");
    return 0.5 * l;
}

double kostlan_weight(const MultiIndex& alpha, int d, int n) {
    return std::exp(log_kostlan_weight(alpha.exponents, d, n));
}

std::vector<double> coefficient_scales(const EnsembleSpec& spec) {
    spec.validate();
    const auto& b = *monomial_basis(spec.nvars, spec.degree);
    std::vector<double> s(b.size());
    const double sd = std::sqrt(EnsembleSpec::variance);
    for (std::size_t i = 0; i < b.size(); ++i)
        s[i] = spec.kind == EnsembleKind::kac ? sd
                                              : sd * std::exp(log_kostlan_weight(b.exponents(i), spec.degree, spec.nvars - 1));
    return s;
}

void sample_into(const EnsembleSpec& spec, std::span<const double> scales, std::uint64_t stream_index,
                 std::span<double> out) {
    CounterRng rng(spec.seed, stream_index);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scales[i] * g(rng);
}

HomogeneousPolynomial sample(const EnsembleSpec& spec, std::uint64_t stream_index) {
    auto scales = coefficient_scales(spec);
    std::vector<double> c(scales.size());
    sample_into(spec, scales, stream_index, c);
    return HomogeneousPolynomial(spec.nvars, spec.degree, std::move(c));
}

template <class T>
T evaluate(const HomogeneousPolynomial& q, std::span<const T> v) {
    check_len(q, v.size());
    const int nv = q.nvars(), d = q.degree();
    std::vector<T> pw(static_cast<std::size_t>(nv) * (d + 1));
    for (int j = 0; j < nv; ++j) {
        pw[j * (d + 1)] = T(1);
        for (int e = 1; e <= d; ++e) pw[j * (d + 1) + e] = pw[j * (d + 1) + e - 1] * v[j];
    }
    const auto& b = q.basis();
    T s = T(0);
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double c = q.coeff(i);
        if (c == 0.0) continue;
        auto a = b.exponents(i);
        T t = T(c);
        for (int j = 0; j < nv; ++j) t *= pw[j * (d + 1) + a[j]];
        s += t;
    }
    return s;
}

template double evaluate<double>(const HomogeneousPolynomial&, std::span<const double>);
template long double evaluate<long double>(const HomogeneousPolynomial&, std::span<const long double>);
template std::complex<double> evaluate<std::complex<double>>(const HomogeneousPolynomial&,
                                                             std::span<const std::complex<double>>);

double evaluate(const HomogeneousPolynomial& q, std::initializer_list<double> v) {
    return evaluate<double>(q, std::span<const double>(v.begin(), v.size()));
}

std::vector<double> gradient(const HomogeneousPolynomial& q, std::span<const double> v) {
    check_len(q, v.size());
    const int nv = q.nvars(), d = q.degree();
    std::vector<double> g(nv, 0.0);
    if (d == 0) return g;
    std::vector<double> pw(static_cast<std::size_t>(nv) * (d + 1));
    for (int j = 0; j < nv; ++j) {
        pw[j * (d + 1)] = 1.0;
        for (int e = 1; e <= d; ++e) pw[j * (d + 1) + e] = pw[j * (d + 1) + e - 1] * v[j];
    }
    const auto& b = q.basis();
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double c = q.coeff(i);
        if (c == 0.0) continue;
        auto a = b.exponents(i);
        for (int j = 0; j < nv; ++j) {
            if (a[j] == 0) continue;
            double t = c * a[j];
            for (int l = 0; l < nv; ++l) t *= pw[l * (d + 1) + a[l] - (l == j ? 1 : 0)];
            g[j] += t;
        }
    }
    return g;
}

HomogeneousPolynomial homogenize(const AffinePolynomial& p, int target_degree) {
    const int k = p.actual_degree();
    if (target_degree < std::max(k, 0)) throw InvalidArgument("homogenize: target degree below polynomial degree");
    const int n = p.nvars();
    const auto& to = *monomial_basis(n + 1, target_degree);
    std::vector<double> c(to.size(), 0.0);
    std::vector<int> full(n + 1);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.coeffs()[i] == 0.0) continue;
        auto e = p.exponents(i);
        int t = 0;
        for (int j = 0; j < n; ++j) {
            full[j + 1] = e[j];
            t += e[j];
        }
        full[0] = target_degree - t;
        c[to.rank(full)] = p.coeffs()[i];
    }
    return HomogeneousPolynomial(n + 1, target_degree, std::move(c));
}

AffinePolynomial dehomogenize(const HomogeneousPolynomial& q) {
    return AffinePolynomial(q.nvars() - 1, q.degree(), std::vector<double>(q.coeffs().begin(), q.coeffs().end()));
}

HomogeneousPolynomial compose_linear(const HomogeneousPolynomial& q, std::span<const double> L) {
    const int N = q.nvars();
    if (L.size() != static_cast<std::size_t>(N * N)) throw InvalidArgument("compose_linear: matrix has wrong size");
    bool identity = true;
    for (int i = 0; i < N && identity; ++i)
        for (int j = 0; j < N; ++j)
            if (L[i * N + j] != (i == j ? 1.0 : 0.0)) identity = false;
    if (identity) return q;
    return HomogeneousPolynomial(N, q.degree(), compose_rec(q.coeffs(), N, q.degree(), L, N));
}

namespace {

// Substitution X_i -> a X_i + b X_j, X_j -> c X_i + e X_j on Kostlan-scaled
// coefficients. On each binary block of degree m the action is an orthogonal
// (m+1)x(m+1) matrix, built level by level; row k is peeled on the X_i side
// when 2k < m and on the X_j side otherwise, so every step multiplies by at most sqrt(2).
void givens_scaled(std::vector<double>& b, const MonomialBasis& basis, int i, int j, double a, double bb, double c,
                   double e) {
    const int nv = basis.nvars(), d = basis.degree();
    std::vector<double> prev{1.0}, cur, out(b.size(), 0.0);
    std::vector<double> sq(d + 2);
    for (int k = 0; k <= d + 1; ++k) sq[k] = std::sqrt(double(k));
    std::vector<int> ex(nv);
    for (int m = 0; m <= d; ++m) {
        const int w = m + 1;
        if (m > 0) {
            cur.assign(static_cast<std::size_t>(w) * w, 0.0);
            const int pw = m;
            for (int k = 0; k <= m; ++k) {
                const bool xside = 2 * k < m;
                const int r = xside ? k : k - 1;
                const double f = 1.0 / (xside ? sq[m - k] : sq[k]);
                const double u = xside ? a : c, v = xside ? bb : e;
                for (int l = 0; l <= m; ++l) {
                    double t = 0.0;
                    if (l < m) t += u * sq[m - l] * prev[r * pw + l];
                    if (l > 0) t += v * sq[l] * prev[r * pw + l - 1];
                    cur[k * w + l] = f * t;
                }
            }
            prev.swap(cur);
        }
        // every block whose (X_i, X_j) degree is m
        for (std::size_t idx = 0; idx < basis.size(); ++idx) {
            auto al = basis.exponents(idx);
            if (al[i] + al[j] != m || al[j] != 0) continue;
            std::copy(al.begin(), al.end(), ex.begin());
            std::vector<std::size_t> rank(w);
            for (int k = 0; k <= m; ++k) {
                ex[i] = m - k;
                ex[j] = k;
                rank[k] = basis.rank(ex);
            }
            for (int k = 0; k <= m; ++k) {
                const double bk = b[rank[k]];
                if (bk == 0.0) continue;
                for (int l = 0; l <= m; ++l) out[rank[l]] += bk * prev[k * w + l];
            }
        }
    }
    b.swap(out);
}

}  // namespace

HomogeneousPolynomial rotate_orthogonal(const HomogeneousPolynomial& q, std::span<const double> R) {
    const int N = q.nvars(), d = q.degree();
    if (R.size() != static_cast<std::size_t>(N * N)) throw InvalidArgument("rotate_orthogonal: matrix has wrong size");
    for (int r = 0; r < N; ++r)
        for (int s = 0; s < N; ++s) {
            double dot = 0.0;
            for (int k = 0; k < N; ++k) dot += R[k * N + r] * R[k * N + s];
            if (std::fabs(dot - (r == s ? 1.0 : 0.0)) > 1e-10)
                throw InvalidArgument("rotate_orthogonal: matrix is not orthogonal");
        }
    const auto& basis = q.basis();
    std::vector<double> lw(basis.size()), b(basis.size());
    for (std::size_t i = 0; i < basis.size(); ++i) {
        lw[i] = log_kostlan_weight(basis.exponents(i), d, N - 1);
        b[i] = q.coeff(i) * std::exp(-lw[i]);
    }
    // R = G_1 G_2 ... D with Givens factors G and D diagonal of signs; q o R applies them in that order
    std::vector<double> M(R.begin(), R.end());
    for (int col = 0; col < N; ++col)
        for (int row = N - 1; row > col; --row) {
            const double x = M[col * N + col], y = M[row * N + col];
            const double h = std::hypot(x, y);
            if (y == 0.0) continue;
            const double c = x / h, s = y / h;
            // G in plane (col, row): G v = (c v_col - s v_row, s v_col + c v_row); M <- G^T M
            for (int k = 0; k < N; ++k) {
                const double p = M[col * N + k], r = M[row * N + k];
                M[col * N + k] = c * p + s * r;
                M[row * N + k] = -s * p + c * r;
            }
            givens_scaled(b, basis, col, row, c, -s, s, c);
        }
    for (std::size_t i = 0; i < basis.size(); ++i) {
        auto al = basis.exponents(i);
        int flips = 0;
        for (int j = 0; j < N; ++j)
            if (M[j * N + j] < 0) flips += al[j];
        b[i] *= std::exp(lw[i]) * ((flips & 1) ? -1.0 : 1.0);
    }
    return HomogeneousPolynomial(N, d, std::move(b));
}

HomogeneousPolynomial scaled(const HomogeneousPolynomial& q, double s) {
    std::vector<double> c(q.coeffs().begin(), q.coeffs().end());
    for (double& x : c) x *= s;
    return HomogeneousPolynomial(q.nvars(), q.degree(), std::move(c));
}

HomogeneousPolynomial axpy(double a, const HomogeneousPolynomial& x, const HomogeneousPolynomial& y) {
    if (x.nvars() != y.nvars() || x.degree() != y.degree()) throw InvalidArgument("axpy: shape mismatch");
    std::vector<double> c(y.coeffs().begin(), y.coeffs().end());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += a * x.coeff(i);
    return HomogeneousPolynomial(x.nvars(), x.degree(), std::move(c));
}

nlohmann::json to_json(const HomogeneousPolynomial& q) {
    return {{"nvars", q.nvars()}, {"degree", q.degree()}, {"coeffs", std::vector<double>(q.coeffs().begin(), q.coeffs().end())}};
}

HomogeneousPolynomial polynomial_from_json(const nlohmann::json& j) {
    try {
        return HomogeneousPolynomial(j.at("nvars").get<int>(), j.at("degree").get<int>(),
                                     j.at("coeffs").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("polynomial JSON: ") + e.what());
    }
}

}  // namespace rhlab
