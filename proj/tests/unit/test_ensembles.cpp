#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rhlab/common.hpp"
#include "rhlab/ensembles.hpp"

using namespace rhlab;

namespace {

// Direct multinomial oracle for the Kostlan weight.
double weight_oracle(const std::vector<int>& a, int d, int n) {
    long double r = oracle::factorial(d + n) / oracle::factorial(n);
    for (int x : a) r /= oracle::factorial(x);
    return std::sqrt(double(r));
}

long double eval_oracle(const HomogeneousPolynomial& q, const std::vector<double>& v) {
    oracle::CompensatedSum s;
    for (std::size_t i = 0; i < q.basis().size(); ++i) {
        long double t = q.coeff(i);
        auto a = q.basis().exponents(i);
        for (int j = 0; j < q.nvars(); ++j)
            for (int p = 0; p < a[j]; ++p) t *= v[j];
        s.add(t);
    }
    return s.value();
}

std::vector<double> random_point(int n, std::mt19937_64& gen) {
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (double& x : v) x = g(gen);
    return v;
}

}  // namespace

TEST_CASE("kostlan weights") {
    CHECK(kostlan_weight({{1, 1}}, 2, 1) == doctest::Approx(std::sqrt(6.0)).epsilon(1e-14));
    CHECK(kostlan_weight({{1, 1, 1}}, 3, 2) == doctest::Approx(std::sqrt(60.0)).epsilon(1e-14));
    for (int d : {0, 1, 5, 12})
        for (int n : {1, 2, 3}) {
            std::vector<int> a(n + 1, 0);
            a[0] = d;
            CHECK(kostlan_weight({a}, d, n) == doctest::Approx(weight_oracle(a, d, n)).epsilon(1e-13));
        }
    CHECK(kostlan_weight({{3, 4, 2}}, 9, 2) == doctest::Approx(weight_oracle({3, 4, 2}, 9, 2)).epsilon(1e-13));
    CHECK_THROWS_AS(kostlan_weight({{1, 1}}, 3, 1), InvalidArgument);
    const double big = log_kostlan_weight(std::vector<int>{250, 250}, 500, 1);
    CHECK(std::isfinite(big));
    CHECK(big == doctest::Approx(0.5 * (std::lgamma(502.0) - 2 * std::lgamma(251.0))).epsilon(1e-12));
}

TEST_CASE("monomial basis order and rank") {
    auto b = monomial_basis(2, 7);
    REQUIRE(b->size() == 8);
    for (int k = 0; k <= 7; ++k) {
        CHECK(b->exponents(k)[0] == 7 - k);
        CHECK(b->exponents(k)[1] == k);
    }
    for (int nv : {2, 3, 4}) {
        auto bb = monomial_basis(nv, 6);
        long double expect = oracle::factorial(6 + nv - 1) / (oracle::factorial(6) * oracle::factorial(nv - 1));
        CHECK(bb->size() == std::size_t(expect));
        for (std::size_t i = 0; i < bb->size(); ++i) CHECK(bb->rank(bb->exponents(i)) == i);
    }
    auto b3 = monomial_basis(3, 2);
    CHECK(std::vector<int>(b3->exponents(0).begin(), b3->exponents(0).end()) == std::vector<int>{2, 0, 0});
    CHECK(std::vector<int>(b3->exponents(5).begin(), b3->exponents(5).end()) == std::vector<int>{0, 0, 2});
    CHECK_THROWS_AS(HomogeneousPolynomial(3, 2, {1.0, 2.0}), InvalidArgument);
}

TEST_CASE("evaluation") {
    HomogeneousPolynomial x0d(3, 5);
    {
        std::vector<double> c(x0d.basis().size(), 0.0);
        c[0] = 1.0;
        x0d = HomogeneousPolynomial(3, 5, c);
    }
    CHECK(evaluate(x0d, {1.0, 0.0, 0.0}) == 1.0);
    HomogeneousPolynomial x0x1(2, 2, {0.0, 1.0, 0.0});
    CHECK(evaluate(x0x1, {2.0, 3.0}) == 6.0);
    CHECK_THROWS_AS(evaluate(x0x1, {1.0, 2.0, 3.0}), InvalidArgument);

    std::mt19937_64 gen(11);
    for (int trial = 0; trial < 50; ++trial) {
        const int nv = 2 + trial % 3, d = 1 + trial % 9;
        auto q = sample({EnsembleKind::kostlan, nv, d, 99}, trial);
        auto v = random_point(nv, gen);
        const double val = evaluate<double>(q, v);
        const long double ref = eval_oracle(q, v);
        long double scale = 0;
        for (std::size_t i = 0; i < q.basis().size(); ++i) {
            long double t = std::fabs(q.coeff(i));
            for (int j = 0; j < nv; ++j) t *= std::pow(std::fabs(v[j]), q.basis().exponents(i)[j]);
            scale += t;
        }
        // well-conditioned cases must meet 1e-12 relative; all must meet the a-priori bound
        CHECK(std::fabs(val - ref) <= 1e-14 * double(scale) + 1e-300);
        if (scale < 50 * std::fabs(ref)) CHECK(std::fabs(val - ref) <= 1e-12 * std::fabs(double(ref)));
        const double lambda = 1.7;
        std::vector<double> w = v;
        for (double& x : w) x *= lambda;
        CHECK(evaluate<double>(q, w) / val == doctest::Approx(std::pow(lambda, d)).epsilon(1e-12));
    }
}

TEST_CASE("gradient") {
    HomogeneousPolynomial x0sq(2, 2, {1.0, 0.0, 0.0});
    auto g = gradient(x0sq, std::vector<double>{1.0, 0.0});
    CHECK(g[0] == 2.0);
    CHECK(g[1] == 0.0);
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto q = sample({EnsembleKind::kostlan, 3, 5, 3}, trial);
        auto v = random_point(3, gen);
        auto gr = gradient(q, v);
        double euler = 0;
        for (int j = 0; j < 3; ++j) euler += gr[j] * v[j];
        CHECK(euler == doctest::Approx(5 * evaluate<double>(q, v)).epsilon(1e-10));
        for (int j = 0; j < 3; ++j) {
            const double h = 1e-6;
            auto vp = v, vm = v;
            vp[j] += h;
            vm[j] -= h;
            const double fd = (evaluate<double>(q, vp) - evaluate<double>(q, vm)) / (2 * h);
            double norm = 0;
            for (double x : gr) norm += x * x;
            CHECK(std::fabs(fd - gr[j]) <= 1e-5 * std::max(std::fabs(gr[j]), std::sqrt(norm)));
        }
    }
}

TEST_CASE("homogenize and dehomogenize") {
    auto p = AffinePolynomial::from_terms(1, {{1.0, {2}}, {-1.0, {0}}});
    auto q = homogenize(p, 2);
    CHECK(q.coeff(0) == -1.0);  // X0^2
    CHECK(q.coeff(1) == 0.0);
    CHECK(q.coeff(2) == 1.0);   // X1^2
    auto one = homogenize(AffinePolynomial::from_terms(2, {{1.0, {0, 0}}}), 3);
    CHECK(one.coeff(0) == 1.0);
    for (std::size_t i = 1; i < one.basis().size(); ++i) CHECK(one.coeff(i) == 0.0);
    CHECK_THROWS_AS(homogenize(p, 1), InvalidArgument);

    std::mt19937_64 gen(17);
    std::normal_distribution<double> g;
    std::vector<std::pair<double, std::vector<int>>> terms;
    for (int a = 0; a <= 4; ++a)
        for (int b = 0; a + b <= 4; ++b) terms.push_back({g(gen), {a, b}});
    auto P = AffinePolynomial::from_terms(2, terms);
    auto Q = homogenize(P, 9);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> x = random_point(2, gen);
        long double ref = 0;
        for (auto& [c, e] : terms) ref += c * std::pow((long double)x[0], e[0]) * std::pow((long double)x[1], e[1]);
        const double val = evaluate(Q, {1.0, x[0], x[1]});
        CHECK(std::fabs(val - double(ref)) <= 1e-12 * std::max(1.0, std::fabs(double(ref))) * 10);
        CHECK(P.evaluate(x) == doctest::Approx(double(ref)).epsilon(1e-12));
    }
    auto back = dehomogenize(Q);
    auto Q2 = homogenize(back, 9);
    for (std::size_t i = 0; i < Q.basis().size(); ++i) CHECK(Q2.coeff(i) == Q.coeff(i));
}

TEST_CASE("sampling: variances, determinism, degree zero") {
    EnsembleSpec s0{EnsembleKind::kostlan, 3, 0, 1};
    CHECK(sample(s0, 0).basis().size() == 1);
    CHECK_THROWS_AS((EnsembleSpec{EnsembleKind::kac, 3, 2, 0}.validate()), InvalidArgument);

    auto a = sample({EnsembleKind::kostlan, 3, 7, 42}, 9);
    auto b = sample({EnsembleKind::kostlan, 3, 7, 42}, 9);
    auto c = sample({EnsembleKind::kostlan, 3, 7, 42}, 10);
    CHECK(std::equal(a.coeffs().begin(), a.coeffs().end(), b.coeffs().begin()));
    CHECK_FALSE(std::equal(a.coeffs().begin(), a.coeffs().end(), c.coeffs().begin()));

    // n=1, d=2: variance of the X0^{2-k} X1^k coefficient is 1/2 * 3!/((2-k)! k!)
    EnsembleSpec spec{EnsembleKind::kostlan, 2, 2, 7};
    auto scales = coefficient_scales(spec);
    const int T = 1000000;
    double ss[3] = {0, 0, 0};
    std::vector<double> buf(3);
    for (int t = 0; t < T; ++t) {
        sample_into(spec, scales, t, buf);
        for (int k = 0; k < 3; ++k) ss[k] += buf[k] * buf[k];
    }
    for (int k = 0; k < 3; ++k) {
        const double expect = 0.5 * double(oracle::factorial(3) / (oracle::factorial(2 - k) * oracle::factorial(k)));
        CHECK(ss[k] / T == doctest::Approx(expect).epsilon(0.01));
    }
}

TEST_CASE("covariance kernel") {
    std::mt19937_64 gen(3);
    for (int n : {1, 2})
        for (int d : {1, 3, 6}) {
            auto x = random_point(n + 1, gen), y = random_point(n + 1, gen);
            double nx = 0, ny = 0, xy = 0;
            for (int j = 0; j <= n; ++j) {
                nx += x[j] * x[j];
                ny += y[j] * y[j];
            }
            for (int j = 0; j <= n; ++j) {
                x[j] /= std::sqrt(nx);
                y[j] /= std::sqrt(ny);
                xy += x[j] * y[j];
            }
            EnsembleSpec spec{EnsembleKind::kostlan, n + 1, d, 1234};
            const int T = 200000;
            std::vector<double> prod(T);
            for (int t = 0; t < T; ++t) {
                auto q = sample(spec, t);
                prod[t] = evaluate<double>(q, x) * evaluate<double>(q, y);
            }
            const double expect =
                0.5 * double(oracle::factorial(d + n) / (oracle::factorial(n) * oracle::factorial(d))) * std::pow(xy, d);
            CHECK(std::fabs(oracle::mean(prod) - expect) <= 3 * oracle::std_error(prod));
        }
}

TEST_CASE("orthogonal invariance (KS)") {
    std::mt19937_64 gen(77);
    const int n = 2, d = 4;
    std::vector<double> x0 = {0.6, 0.0, 0.8};
    for (int seed = 0; seed < 20; ++seed) {
        Eigen::MatrixXd h = oracle::random_orthogonal(n + 1, gen);
        Eigen::MatrixXd hinv = h.transpose();
        std::vector<double> L(9);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) L[i * 3 + j] = hinv(i, j);
        EnsembleSpec spec{EnsembleKind::kostlan, n + 1, d, std::uint64_t(1000 + seed)};
        std::vector<double> a, b;
        for (int t = 0; t < 2000; ++t) {
            auto q = sample(spec, t);
            a.push_back(evaluate<double>(q, x0));
            auto qr = compose_linear(sample(spec, t + 100000), L);
            b.push_back(evaluate<double>(qr, x0));
        }
        CHECK(oracle::ks_pvalue(a, b) > 0.001);
    }
}

TEST_CASE("compose_linear matches evaluation at the mapped point") {
    std::mt19937_64 gen(8);
    for (int nv : {2, 3, 4}) {
        auto q = sample({EnsembleKind::kostlan, nv, 6, 5}, nv);
        std::vector<double> L(nv * nv);
        for (double& v : L) v = std::normal_distribution<double>()(gen);
        auto ql = compose_linear(q, L);
        for (int i = 0; i < 10; ++i) {
            auto v = random_point(nv, gen);
            std::vector<double> Lv(nv, 0.0);
            for (int r = 0; r < nv; ++r)
                for (int c = 0; c < nv; ++c) Lv[r] += L[r * nv + c] * v[c];
            CHECK(evaluate<double>(ql, v) == doctest::Approx(evaluate<double>(q, Lv)).epsilon(1e-10));
        }
    }
}

TEST_CASE("rotate_orthogonal agrees with compose_linear and stays accurate at high degree") {
    std::mt19937_64 gen(19);
    for (int nv : {2, 3}) {
        for (int d : {1, 3, 8}) {
            auto q = sample({EnsembleKind::kostlan, nv, d, 2}, d);
            Eigen::MatrixXd h = oracle::random_orthogonal(nv, gen);
            if (d == 3) h.col(0) *= -1.0;  // reflection
            std::vector<double> R(nv * nv);
            for (int i = 0; i < nv; ++i)
                for (int j = 0; j < nv; ++j) R[i * nv + j] = h(i, j);
            auto a = rotate_orthogonal(q, R), b = compose_linear(q, R);
            for (std::size_t i = 0; i < a.coeffs().size(); ++i)
                CHECK(a.coeff(i) == doctest::Approx(b.coeff(i)).epsilon(1e-10).scale(1.0));
        }
    }
    // high degree: the Kostlan-scaled coefficient norm is preserved and R^T undoes R
    auto q = sample({EnsembleKind::kostlan, 3, 150, 5}, 0);
    Eigen::MatrixXd h = oracle::random_orthogonal(3, gen);
    std::vector<double> R(9), Rt(9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            R[i * 3 + j] = h(i, j);
            Rt[i * 3 + j] = h(j, i);
        }
    auto scaled_norm = [](const HomogeneousPolynomial& p) {
        double s = 0;
        for (std::size_t i = 0; i < p.coeffs().size(); ++i)
            s += std::pow(p.coeff(i) * std::exp(-log_kostlan_weight(p.basis().exponents(i), p.degree(), 2)), 2);
        return s;
    };
    auto r = rotate_orthogonal(q, R);
    CHECK(scaled_norm(r) == doctest::Approx(scaled_norm(q)).epsilon(1e-9));
    auto back = rotate_orthogonal(r, Rt);
    CHECK(scaled_norm(axpy(-1.0, back, q)) < 1e-14 * scaled_norm(q));
    std::vector<double> v{0.3, -0.5, 0.8}, Rv(3, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) Rv[i] += R[i * 3 + j] * v[j];
    const double ref = evaluate<double>(q, Rv);
    CHECK(evaluate<double>(r, v) == doctest::Approx(ref).epsilon(1e-7).scale(1e-3));
    CHECK_THROWS_AS(rotate_orthogonal(q, std::vector<double>{1, 0, 0, 0, 2, 0, 0, 0, 1}), InvalidArgument);
}

TEST_CASE("json round trip") {
    auto q = sample({EnsembleKind::kostlan, 3, 4, 1}, 2);
    auto j = to_json(q);
    CHECK(j["nvars"] == 3);
    CHECK(j["degree"] == 4);
    auto r = polynomial_from_json(nlohmann::json::parse(j.dump()));
    CHECK(std::equal(q.coeffs().begin(), q.coeffs().end(), r.coeffs().begin()));
    CHECK_THROWS_AS(polynomial_from_json(nlohmann::json{{"nvars", 2}}), InvalidArgument);
}
