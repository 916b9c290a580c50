#include "rhlab/common.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace rhlab {

double log_factorial(int k) {
    if (k < 0) throw InvalidArgument("log_factorial: negative argument");
    return std::lgamma(static_cast<double>(k) + 1.0);
}

double log_binomial(int n, int k) {
    if (k < 0 || k > n) throw InvalidArgument("log_binomial: k out of range");
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double log_erfc(double x) {
    if (x < 20.0) return std::log(std::erfc(x));
    // erfc(x) = exp(-x^2)/(x sqrt(pi)) * (1 - 1/(2x^2) + 3/(4x^4) - ...)
    const double inv2 = 1.0 / (2.0 * x * x);
    double term = 1.0, series = 1.0;
    for (int k = 1; k < 12; ++k) {
        term *= -(2.0 * k - 1.0) * inv2;
        series += term;
    }
    return -x * x - std::log(x) - 0.5 * std::log(kPi) + std::log(series);
}

double unit_ball_volume(int n) {
    return std::exp(0.5 * n * std::log(kPi) - std::lgamma(0.5 * n + 1.0));
}

double unit_sphere_volume(int n) {
    return 2.0 * std::exp(0.5 * (n + 1) * std::log(kPi) - std::lgamma(0.5 * (n + 1)));
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

std::string format_log_value(double lv) {
    if (std::isinf(lv) && lv < 0) return "0";
    const double l10 = lv / std::log(10.0);
    double e = std::floor(l10);
    double m = std::pow(10.0, l10 - e);
    if (m >= 9.9999995) { m /= 10.0; e += 1.0; }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6fe%+.0f", m, e);
    return buf;
}

const char* library_version() { return "0.1.0"; }

}  // namespace rhlab
