#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rhlab {

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t trials = 0;
};

// Pairwise summation; the result depends only on the input order.
double pairwise_sum(std::span<const double> xs);

// Mean and standard error (sample sd / sqrt(n)) by two passes of pairwise sums.
Estimate summarize(std::span<const double> xs);

// Two-sided agreement test: |a - b| <= k * sqrt(se_a^2 + se_b^2).
bool within_joint_se(const Estimate& a, const Estimate& b, double k = 3.0);

}  // namespace rhlab
