#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rhlab {

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Carries whatever estimate was available when the computation gave up.
struct NumericalFailure : std::runtime_error {
    double partial_estimate;
    NumericalFailure(const std::string& what, double partial)
        : std::runtime_error(what), partial_estimate(partial) {}
};

struct CertificateFailure : std::runtime_error {
    std::vector<double> offending_point;
    explicit CertificateFailure(const std::string& what, std::vector<double> pt = {})
        : std::runtime_error(what), offending_point(std::move(pt)) {}
};

struct ConfigError : std::runtime_error {
    int line;
    std::string field;
    ConfigError(const std::string& what, int line_ = 0, std::string field_ = {})
        : std::runtime_error(what), line(line_), field(std::move(field_)) {}
};

struct NotImplemented : std::logic_error {
    using std::logic_error::logic_error;
};

struct InvalidState : std::logic_error {
    using std::logic_error::logic_error;
};

struct ResourceLimit : std::runtime_error {
    int max_feasible;
    ResourceLimit(const std::string& what, int max_feasible_)
        : std::runtime_error(what), max_feasible(max_feasible_) {}
};

inline constexpr double kPi = 3.14159265358979323846;

double log_factorial(int k);
double log_binomial(int n, int k);

// log(erfc(x)), finite far past the point where erfc underflows.
double log_erfc(double x);

// Volume of the Euclidean unit ball in R^n.
double unit_ball_volume(int n);
// Round volume of the unit sphere S^n in R^{n+1}.
double unit_sphere_volume(int n);

std::string format_double(double x);
std::string format_log_value(double log_value);  // exp(log_value) as a decimal string

const char* library_version();

}  // namespace rhlab
