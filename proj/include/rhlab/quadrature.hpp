#pragma once

#include <functional>
#include <vector>

namespace rhlab::quad {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

struct AdaptiveResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
};

// Globally adaptive 10/21-point Gauss-Kronrod on [a, b]. Bisects the interval
// with the largest error estimate until the summed estimate is <= abs_tol.
// Throws NumericalFailure (with the current value) if max_intervals is hit.
AdaptiveResult integrate(const std::function<double(double)>& f, double a, double b,
                         double abs_tol, int max_intervals = 20000);

// Gauss-Legendre on [-1, 1]; exact for polynomials of degree <= 2q-1.
const Rule& gauss_legendre(int q);
// Gauss-Laguerre for weight exp(-s) on [0, inf).
const Rule& gauss_laguerre(int q);

}  // namespace rhlab::quad
