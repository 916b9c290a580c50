#include "rhlab/stats.hpp"

#include <cmath>

namespace rhlab {

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 16) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

Estimate summarize(std::span<const double> xs) {
    Estimate e;
    e.trials = static_cast<std::int64_t>(xs.size());
    if (xs.empty()) return e;
    e.mean = pairwise_sum(xs) / static_cast<double>(xs.size());
    if (xs.size() < 2) return e;
    std::vector<double> dev(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) dev[i] = (xs[i] - e.mean) * (xs[i] - e.mean);
    const double var = pairwise_sum(dev) / static_cast<double>(xs.size() - 1);
    e.std_error = std::sqrt(var / static_cast<double>(xs.size()));
    return e;
}

bool within_joint_se(const Estimate& a, const Estimate& b, double k) {
    return std::abs(a.mean - b.mean) <= k * std::hypot(a.std_error, b.std_error);
}

}  // namespace rhlab
