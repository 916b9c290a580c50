#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rhlab/common.hpp"
#include "rhlab/transversality.hpp"

using namespace rhlab;
using namespace rhlab::transversality;

namespace {

const auto kOrigin = fubini::ProjectivePoint::origin(2);

// Normalized chart value s(1, x) (1 + |x|^2)^(-d/2) / sqrt(d)^n at x = y / sqrt(d), via the generic evaluator.
double chart_value(const HomogeneousPolynomial& q, std::vector<double> y) {
    const int n = q.nvars() - 1, d = q.degree();
    const double sd = std::sqrt(double(d));
    std::vector<double> v{1.0};
    double r2 = 0;
    for (double t : y) {
        v.push_back(t / sd);
        r2 += t * t / d;
    }
    return evaluate<double>(q, v) * std::pow(1 + r2, -0.5 * d) / std::pow(sd, n);
}

// Brute-force sup over the y-grid of the ball with central-difference gradients.
SupSample oracle_sup(const HomogeneousPolynomial& q, double R, double h) {
    const int n = q.nvars() - 1;
    const int k = static_cast<int>(std::floor(R / h + 1e-9));
    const double e = 1e-5;
    SupSample s;
    for (int i = -k; i <= k; ++i)
        for (int j = (n == 2 ? -k : 0); j <= (n == 2 ? k : 0); ++j) {
            std::vector<double> y = n == 2 ? std::vector<double>{i * h, j * h} : std::vector<double>{i * h};
            double r2 = 0;
            for (double t : y) r2 += t * t;
            if (r2 > R * R * (1 + 1e-12)) continue;
            s.sup_value = std::max(s.sup_value, std::fabs(chart_value(q, y)));
            double g2 = 0;
            for (int c = 0; c < n; ++c) {
                auto yp = y, ym = y;
                yp[c] += e;
                ym[c] -= e;
                const double g = (chart_value(q, yp) - chart_value(q, ym)) / (2 * e);
                g2 += g * g;
            }
            s.sup_grad = std::max(s.sup_grad, std::sqrt(g2));
        }
    return s;
}

HypersurfaceModel scaled_model(const HypersurfaceModel& m, double c) {
    HypersurfaceModel r = m;
    std::vector<double> coeffs(m.P.coeffs().begin(), m.P.coeffs().end());
    for (double& x : coeffs) x *= c;
    r.P = AffinePolynomial(m.P.nvars(), m.P.degree(), coeffs);
    r.delta_K *= c;
    r.delta_U *= c;
    return r;
}

}  // namespace

TEST_CASE("model parsing and validation") {
    const auto f = config::KeyValueFile::parse_string(
        "name = circle\nn = 2\nR = 2\ndelta_K = 0.2\ndelta_U = 0.4\nsigma = 1 oval\n"
        "term = 1 2 0\nterm = 1 0 2\nterm = -1 0 0\n");
    const auto m = HypersurfaceModel::parse(f);
    CHECK(m.sigma.signature == "()");
    const double y[2] = {0.3, -0.7};
    CHECK(m.P.evaluate(std::span<const double>(y, 2)) == doctest::Approx(0.09 + 0.49 - 1));
    m.validate();
    HypersurfaceModel::two_circles().validate();
    HypersurfaceModel::empty().validate();

    CHECK_THROWS_AS(HypersurfaceModel::parse(config::KeyValueFile::parse_string("n = 2\nR = 2\n")), ConfigError);
    CHECK_THROWS_AS(HypersurfaceModel::parse(config::KeyValueFile::parse_string(
                        "n = 2\nR = 2\ndelta_K = 0.2\ndelta_U = 0.4\nsigma = ()\nterm = 1 2\n")),
                    ConfigError);
    CHECK_THROWS_AS(HypersurfaceModel::parse(config::KeyValueFile::parse_string(
                        "n = 2\nR = 2\ndelta_K = 0.2\ndelta_U = 0.4\nsigma = ()\nterm = 1 2 0\ncolour = red\n")),
                    ConfigError);

    auto wrong_sigma = HypersurfaceModel::unit_circle();
    wrong_sigma.sigma = curves2d::parse_sigma("2 nested");
    CHECK_THROWS_AS(wrong_sigma.validate(), InvalidArgument);
    auto small_ball = HypersurfaceModel::unit_circle();
    small_ball.R = 1.1;
    CHECK_THROWS_AS(small_ball.validate(), CertificateFailure);
}

TEST_CASE("delta and epsilon of the circle model") {
    const auto m = HypersurfaceModel::unit_circle();
    const auto de = estimate_delta_epsilon(m);
    // |P| on U \ K has infimum delta_K; |grad P| = 2|y| is smallest on the inner edge |y|^2 = 1 - delta
    const double delta = 0.9 * 0.2;
    const double epsilon = 0.9 * 2 * std::sqrt(1 - delta);
    CHECK(de.delta == doctest::Approx(delta).epsilon(0.01));
    CHECK(de.epsilon == doctest::Approx(epsilon).epsilon(0.01));
    CHECK(de.delta >= delta);
    CHECK(de.epsilon >= epsilon * (1 - 1e-12));

    const auto de2 = estimate_delta_epsilon(scaled_model(m, 2.0));
    CHECK(de2.delta == doctest::Approx(2 * de.delta).epsilon(0.01));
    CHECK(de2.epsilon == doctest::Approx(2 * de.epsilon).epsilon(0.01));

    HypersurfaceModel degenerate = m;
    degenerate.P = AffinePolynomial::from_terms(2, {{1.0, {2, 0}}});
    CHECK_THROWS_AS(estimate_delta_epsilon(degenerate), CertificateFailure);
    CHECK_THROWS_AS(degenerate.validate(), CertificateFailure);
}

TEST_CASE("field gradients match finite differences") {
    const auto m = HypersurfaceModel::two_circles();
    const auto ps = fubini::build_peak_section(m.P, 40, kOrigin);
    const Field fields[] = {polynomial_field(m.P), limit_field(m), section_field(ps.section)};
    for (const auto& f : fields) {
        for (auto y : {std::vector<double>{0.3, -0.2}, std::vector<double>{1.4, 0.9}}) {
            double g[2], tmp[2];
            f(y, g);
            for (int c = 0; c < 2; ++c) {
                auto yp = y, ym = y;
                yp[c] += 1e-6;
                ym[c] -= 1e-6;
                CHECK(g[c] == doctest::Approx((f(yp, tmp) - f(ym, tmp)) / 2e-6).epsilon(1e-6).scale(1e-6));
            }
        }
    }
    // section field agrees with the generic chart evaluation and approaches the limit field
    const auto sf = section_field(ps.section);
    const auto lf = limit_field(m);
    double g[2];
    for (auto y : {std::vector<double>{0.5, 0.5}, std::vector<double>{-1.2, 0.1}}) {
        CHECK(sf(y, g) == doctest::Approx(chart_value(ps.section, y)).epsilon(1e-10));
        CHECK(sf(y, g) == doctest::Approx(lf(y, g)).epsilon(0.1));
    }
}

TEST_CASE("rescaled constants of the peak section") {
    const auto m = HypersurfaceModel::unit_circle();
    const auto limit = estimate_delta_epsilon(m, limit_field(m));
    const auto r60 = rescaled_constants(m, limit, 60);
    CHECK(r60.meets_floor);
    CHECK(r60.delta_scaled == doctest::Approx(r60.delta_prime * 60));
    CHECK(r60.epsilon_scaled == doctest::Approx(r60.epsilon_prime * std::pow(60, 1.5)));

    // d = deg P: the section has no X0 padding but is still verified
    const auto r2 = rescaled_constants(m, limit, 2);
    CHECK(r2.delta_prime > 0);
    CHECK(r2.epsilon_prime > 0);
    CHECK_THROWS_AS(rescaled_constants(m, limit, 1), InvalidArgument);

    double prev = 1e9;
    for (int d : {30, 60, 120}) {
        const auto r = rescaled_constants(m, limit, d);
        CHECK(r.delta_ratio >= 1 - 5.0 / d);
        CHECK(r.epsilon_ratio >= 1 - 5.0 / d);
        CHECK(std::fabs(r.delta_ratio - 1) < prev);
        prev = std::fabs(r.delta_ratio - 1);
    }
}

TEST_CASE("sup norms against brute force") {
    std::mt19937_64 gen(11);
    for (int n : {1, 2}) {
        const int d = 24;
        const auto q = sample(EnsembleSpec{EnsembleKind::kostlan, n + 1, d, 5}, 3);
        const auto s = sup_norms(q, 2.0, 1.0 / 8);
        const auto o = oracle_sup(q, 2.0, 1.0 / 8);
        CHECK(s.sup_value == doctest::Approx(o.sup_value).epsilon(1e-9));
        CHECK(s.sup_grad == doctest::Approx(o.sup_grad).epsilon(1e-5));
    }
}

TEST_CASE("C1 and C2 estimates") {
    const auto c = estimate_C1_C2(2, {30, 60}, 200, 2.0, 3);
    // E|f(0)| = sqrt(C(d+2, 2) / pi) / d exactly, and the sup dominates it
    for (int d : {30, 60}) CHECK(c.C1 >= std::sqrt((d + 2) * (d + 1) / 2.0 / kPi) / d);
    CHECK(c.C1 >= 1 / std::sqrt(2.0) - 0.05);
    CHECK(c.C2 > 0);

    // n = 1: normalized sups are stable in d
    const auto c1 = estimate_C1_C2(1, {30, 60, 120}, 2000, 2.0, 4);
    double lo = 1e9, hi = 0;
    for (const auto& e : c1.sup_value) {
        lo = std::min(lo, e.mean);
        hi = std::max(hi, e.mean);
    }
    CHECK((hi - lo) / hi < 0.15);

    // halving the sup-grid spacing moves the estimate by < 2%
    const auto coarse = estimate_C1_C2(2, {40}, 100, 2.0, 6, 1.0 / 16);
    const auto fine = estimate_C1_C2(2, {40}, 100, 2.0, 6, 1.0 / 32);
    CHECK(fine.sup_value[0].mean == doctest::Approx(coarse.sup_value[0].mean).epsilon(0.02));
    CHECK(fine.sup_grad[0].mean == doctest::Approx(coarse.sup_grad[0].mean).epsilon(0.02));
    CHECK(fine.sup_value[0].mean >= coarse.sup_value[0].mean * (1 - 1e-12));
}

TEST_CASE("C1 C2 serial equals parallel") {
    const auto a = estimate_C1_C2(2, {20}, 40, 2.0, 9);
    const auto b = estimate_C1_C2_serial(2, {20}, 40, 2.0, 9);
    CHECK(a.C1 == b.C1);
    CHECK(a.C2 == b.C2);
}

TEST_CASE("Markov filter mass") {
    const auto c = estimate_C1_C2(2, {30}, 200, 2.0, 3);
    const auto m4 = markov_filter_mass(2, 30, c.C1, c.C2, 400, 2.0, 17);
    CHECK(m4.mean >= 0.5);
    const auto a = markov_filter_mass(2, 30, c.C1, c.C2, 400, 2.0, 18, 1.0);
    const auto b = markov_filter_mass(2, 30, c.C1, c.C2, 400, 2.0, 19, 1.0);
    CHECK(a.mean >= 0.0);
    CHECK(a.mean <= 1.0);
    CHECK(std::fabs(a.mean - b.mean) <= 3 * std::hypot(a.std_error, b.std_error) + 1e-12);
}

TEST_CASE("barrier mass") {
    CHECK(c_tilde(0) == 0.25);
    CHECK(log_c_tilde(0) == doctest::Approx(std::log(0.25)));
    double prev = 1;
    for (double M : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        CHECK(c_tilde(M) < prev);
        prev = c_tilde(M);
    }
    // asymptotic erfc(M) ~ exp(-M^2) / (M sqrt(pi)) (1 - 1/(2M^2))
    const double M = 150;
    CHECK(log_c_tilde(M) == doctest::Approx(std::log(0.25) - M * M - std::log(M * std::sqrt(kPi)) - 1 / (2 * M * M))
                                .epsilon(1e-9));
    const auto cert = certificate_from_constants(0.1, 0.2, 1.0, 3.0, 60);
    CHECK(cert.M == doctest::Approx(60));
    CHECK(cert.log_c_tilde == doctest::Approx(log_c_tilde(60)));
    CHECK_THROWS_AS(certificate_from_constants(0, 0.2, 1, 1, 10), InvalidArgument);
}

TEST_CASE("certificate and isotopy trapping for the circle") {
    const auto m = HypersurfaceModel::unit_circle();
    CertificateOptions opt;
    opt.sup_trials = 200;
    const auto cert = assemble_certificate(m, 60, opt);
    CHECK(cert.M == doctest::Approx(std::max(4 * cert.C1 / cert.delta, 4 * cert.C2 / cert.epsilon)));
    CHECK(std::isfinite(cert.log_c_tilde));
    CHECK(cert.delta == cert.rescaled.delta_prime);

    const auto tr = isotopy_trap_check(m, cert, 100, 21);
    CHECK(tr.fraction == 1.0);
    CHECK(tr.chain_violations == 0);

    TrapOptions zero;
    zero.zero_tau = true;
    CHECK(isotopy_trap_check(m, cert, 5, 22, zero).fraction == 1.0);

    TrapOptions weak;
    weak.a_override = 0.5;
    CHECK(isotopy_trap_check(m, cert, 50, 23, weak).fraction < 1.0);
}

TEST_CASE("presence probabilities") {
    const auto circle = HypersurfaceModel::unit_circle();
    const auto p = presence_probability_mc(circle, 20, 1000, kOrigin, 31);
    CHECK(p.probability > 0);
    CHECK(p.indeterminate_fraction < 0.02);
    CHECK(p.hits + p.indeterminate <= p.trials);

    // relocation leaves the distribution unchanged
    const std::vector<double> xv{0.3, -0.5, 0.8};
    const auto x = fubini::ProjectivePoint::from_real(xv);
    const auto q = presence_probability_mc(circle, 20, 1000, x, 32);
    CHECK(std::fabs(p.probability - q.probability) <= 3 * std::hypot(p.std_error, q.std_error));

    // two ovals are rarer than one at the same radius
    auto one = circle;
    one.R = 3.0;
    const auto two = HypersurfaceModel::two_circles();
    const auto p1 = presence_probability_mc(one, 40, 2000, kOrigin, 33);
    const auto p2 = presence_probability_mc(two, 40, 2000, kOrigin, 34);
    CHECK(p2.probability > 0);
    CHECK(p1.probability - p2.probability > 3 * std::hypot(p1.std_error, p2.std_error));

    // empty: hit iff no closed component inside the ball
    const auto e = presence_probability_mc(HypersurfaceModel::empty(), 20, 500, kOrigin, 35);
    CHECK(e.probability > 0);
    std::int64_t none = 0, det = 0;
    for (std::int64_t t = 0; t < 500; ++t) {
        const auto s = sample(EnsembleSpec{EnsembleKind::kostlan, 3, 20, 35}, t);
        const auto topo = curves2d::disk_topology(s, 2 / std::sqrt(20.0), 1 / (16 * std::sqrt(20.0)));
        if (topo.flagged) continue;
        ++det;
        none += topo.closed_inside == 0;
    }
    CHECK(e.hits == none);
    CHECK(e.trials - e.indeterminate == det);
}

TEST_CASE("presence serial equals parallel") {
    const auto m = HypersurfaceModel::unit_circle();
    const auto a = presence_probability_mc(m, 16, 200, kOrigin, 41);
    const auto b = presence_probability_mc_serial(m, 16, 200, kOrigin, 41);
    CHECK(a.hits == b.hits);
    CHECK(a.indeterminate == b.indeterminate);
    CHECK_THROWS_AS(presence_probability_mc(m, 16, 10, fubini::ProjectivePoint::origin(1), 1), InvalidArgument);
}
