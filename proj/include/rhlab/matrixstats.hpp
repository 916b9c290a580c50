#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace rhlab::matrixstats {

struct SymMatrixSample {
    int size = 0;
    Eigen::MatrixXd entries;
    std::vector<double> eigenvalues;  // ascending
    int positive = 0, negative = 0;   // signature (i, j)
    double det = 0.0;                 // product of eigenvalues
    bool degenerate() const { return positive + negative != size; }
};

struct DetExpectationTable {
    int m = 0;
    std::int64_t trials = 0;
    std::vector<double> e_hat;             // index i = number of positive eigenvalues
    std::vector<double> std_errors;
    std::vector<std::int64_t> hits;
    std::vector<bool> upper_bound;         // zero-hit bin: e_hat holds a rule-of-three bound
    std::vector<double> c_plus;            // e_hat / sqrt(pi)
    double total = 0.0;                    // sum of c_plus over bins with hits
    double total_std_error = 0.0;
    double mean_abs_det = 0.0;             // plain sample mean of |det|
    double degenerate_fraction = 0.0;
};

// Diagonal entries have variance 1, off-diagonal variance 1/2.
SymMatrixSample sample_sym(int m, std::uint64_t seed, std::uint64_t stream_index);

DetExpectationTable estimate_e_table(int m, std::int64_t trials, std::uint64_t seed);
DetExpectationTable estimate_e_table_serial(int m, std::int64_t trials, std::uint64_t seed);

// (2 sqrt 2 / pi) Gamma((n+1)/2)
double asymptotic_total(int n);

struct RatioPoint {
    int m = 0;
    double ratio = 0.0;
    double std_error = 0.0;
};
std::vector<RatioPoint> asymptotic_ratio(const std::vector<int>& m_values, std::int64_t trials, std::uint64_t seed);

struct TailEstimate {
    double value = 0.0;
    double std_error = 0.0;
    bool upper_bound = false;  // every bin in range had zero hits
};
// Sum of c_i^+ for i <= floor(alpha * n), n = m + 1, from an existing table.
TailEstimate low_index_tail(const DetExpectationTable& table, double alpha);
TailEstimate low_index_tail(int m, double alpha, std::int64_t trials, std::uint64_t seed);

}  // namespace rhlab::matrixstats
