#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rhlab::packing {

// Round unit sphere S^n, or RP^n = S^n / {+-1} with the quotient metric.
struct Manifold {
    enum class Kind { sphere, projective };
    Kind kind = Kind::sphere;
    int n = 2;

    static Manifold sphere(int n) { return {Kind::sphere, n}; }
    static Manifold projective(int n) { return {Kind::projective, n}; }
    double volume() const;  // round volume; half the sphere for RP^n
    std::string name() const;
};

// Geodesic distance; on RP^n the smaller of the two antipodal spherical distances.
double distance(const Manifold& m, const std::vector<double>& a, const std::vector<double>& b);

struct SeparatedSet {
    Manifold manifold;
    double epsilon = 0.0;
    std::vector<std::vector<double>> points;  // unit vectors; projective points have first nonzero coord > 0
};

struct CoveringCertificate {
    bool passed = false;
    std::int64_t tested = 0;
    double max_gap = 0.0;  // largest distance from a test point to the set
};

struct PackingStats {
    double epsilon = 0.0;
    std::int64_t count = 0;
    double normalized = 0.0;  // epsilon^n * count
    double bound = 0.0;       // Vol / (2^n Vol B^n)
    double ceiling = 0.0;     // Vol / Vol B^n
    bool covering_passed = false;
};

// Greedy insertion of uniform random points, stopped after `batch` consecutive
// rejections (20x that for n > 2). For n <= 2 the remaining holes are then filled
// exactly by probing the vertices of the 2-epsilon cap arrangement.
// Requires 0 < epsilon < pi/8.
SeparatedSet greedy_separated_set(const Manifold& m, double epsilon, std::uint64_t seed,
                                  std::int64_t batch = 100000);

// Every one of `batch` fresh uniform points lies within 2 epsilon of the set.
CoveringCertificate covering_certificate(const SeparatedSet& s, std::uint64_t seed, std::int64_t batch = 100000);
CoveringCertificate covering_certificate_serial(const SeparatedSet& s, std::uint64_t seed,
                                                std::int64_t batch = 100000);

// Minimum pairwise distance (brute force over hash-grid neighbours); infinity if < 2 points.
double min_pairwise_distance(const SeparatedSet& s);

std::vector<PackingStats> packing_sweep(const Manifold& m, const std::vector<double>& epsilons, std::uint64_t seed,
                                        std::int64_t batch = 100000);

}  // namespace rhlab::packing
