#include "rhlab/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <queue>

#include "rhlab/common.hpp"

namespace rhlab::quad {
namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
using G = boost::math::quadrature::gauss<double, 10>;

struct Piece {
    double a, b, value, error;
    bool operator<(const Piece& o) const { return error < o.error; }
};

Piece gk_piece(const std::function<double(double)>& f, double a, double b) {
    const auto& xk = GK::abscissa();
    const auto& wk = GK::weights();
    const auto& wg = G::weights();
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    const double f0 = f(mid);
    double k = wk[0] * f0, g = 0.0;
    for (std::size_t i = 1; i < xk.size(); ++i) {
        const double s = f(mid - half * xk[i]) + f(mid + half * xk[i]);
        k += wk[i] * s;
        if (i % 2 == 1) g += wg[(i - 1) / 2] * s;
    }
    return {a, b, k * half, std::abs((k - g) * half)};
}

template <class Build>
const Rule& cached(std::map<int, std::unique_ptr<Rule>>& cache, std::mutex& mu, int q, Build build) {
    std::lock_guard lock(mu);
    auto& slot = cache[q];
    if (!slot) slot = std::make_unique<Rule>(build(q));
    return *slot;
}

}  // namespace

AdaptiveResult integrate(const std::function<double(double)>& f, double a, double b,
                         double abs_tol, int max_intervals) {
    std::priority_queue<Piece> heap;
    heap.push(gk_piece(f, a, b));
    double value = heap.top().value, error = heap.top().error;
    int count = 1;
    while (error > abs_tol) {
        if (count >= max_intervals)
            throw NumericalFailure("adaptive quadrature did not reach tolerance", value);
        Piece worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Piece l = gk_piece(f, worst.a, mid), r = gk_piece(f, mid, worst.b);
        heap.push(l);
        heap.push(r);
        ++count;
        // re-sum to avoid drift from repeated subtraction
        value = 0.0;
        error = 0.0;
        auto copy = heap;
        std::vector<double> vals;
        while (!copy.empty()) {
            vals.push_back(copy.top().value);
            error += copy.top().error;
            copy.pop();
        }
        for (double v : vals) value += v;
        if (!std::isfinite(value)) throw NumericalFailure("non-finite integrand", value);
    }
    return {value, error, count};
}

const Rule& gauss_legendre(int q) {
    static std::map<int, std::unique_ptr<Rule>> cache;
    static std::mutex mu;
    if (q < 1) throw InvalidArgument("gauss_legendre: q < 1");
    return cached(cache, mu, q, [](int n) {
        Rule r;
        for (double x : boost::math::legendre_p_zeros<double>(n)) {
            const double dp = boost::math::legendre_p_prime(n, x);
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            r.nodes.push_back(x);
            r.weights.push_back(w);
            if (x != 0.0) {
                r.nodes.push_back(-x);
                r.weights.push_back(w);
            }
        }
        return r;
    });
}

const Rule& gauss_laguerre(int q) {
    static std::map<int, std::unique_ptr<Rule>> cache;
    static std::mutex mu;
    if (q < 1) throw InvalidArgument("gauss_laguerre: q < 1");
    return cached(cache, mu, q, [](int n) {
        // Golub-Welsch: Jacobi matrix of the Laguerre recurrence.
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            J(i, i) = 2.0 * i + 1.0;
            if (i + 1 < n) J(i, i + 1) = J(i + 1, i) = i + 1.0;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
        Rule r;
        for (int i = 0; i < n; ++i) {
            r.nodes.push_back(es.eigenvalues()(i));
            const double v0 = es.eigenvectors()(0, i);
            r.weights.push_back(v0 * v0);
        }
        return r;
    });
}

}  // namespace rhlab::quad
