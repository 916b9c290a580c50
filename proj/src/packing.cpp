#include "rhlab/packing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include "rhlab/common.hpp"
#include "rhlab/rng.hpp"

namespace rhlab::packing {
namespace {

constexpr double kSlack = 1e-12;

void check_manifold(const Manifold& m) {
    if (m.n < 1) throw InvalidArgument("manifold dimension must be positive");
}

void canonicalize(const Manifold& m, std::vector<double>& p) {
    if (m.kind != Manifold::Kind::projective) return;
    for (double x : p) {
        if (x == 0.0) continue;
        if (x < 0.0)
            for (double& y : p) y = -y;
        return;
    }
}

std::vector<double> uniform_point(const Manifold& m, CounterRng& rng) {
    std::normal_distribution<double> g;
    std::vector<double> p(m.n + 1);
    double nrm = 0.0;
    do {
        nrm = 0.0;
        for (double& x : p) {
            x = g(rng);
            nrm += x * x;
        }
    } while (nrm < 1e-300);
    nrm = std::sqrt(nrm);
    for (double& x : p) x /= nrm;
    canonicalize(m, p);
    return p;
}

double angle(const std::vector<double>& a, const std::vector<double>& b) {
    // atan2 form keeps accuracy for nearby points
    double dot = 0.0, cross2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double c = a[i] - dot * b[i];
        cross2 += c * c;
    }
    return std::atan2(std::sqrt(cross2), dot);
}

// Uniform hash grid in the ambient R^{n+1}; cell side equals the chord of 2 epsilon.
class HashGrid {
public:
    HashGrid(int dim, double cell) : dim_(dim), cell_(cell) {}

    void insert(const std::vector<double>& p, int id) { cells_[key(cell_of(p))].push_back(id); }

    template <class F>
    bool any_neighbour(const std::vector<double>& p, F&& f) const {
        const auto c = cell_of(p);
        std::vector<long> off(dim_, -1);
        while (true) {
            std::vector<long> q(dim_);
            for (int i = 0; i < dim_; ++i) q[i] = c[i] + off[i];
            auto it = cells_.find(key(q));
            if (it != cells_.end())
                for (int id : it->second)
                    if (f(id)) return true;
            int i = 0;
            while (i < dim_ && off[i] == 1) off[i++] = -1;
            if (i == dim_) return false;
            ++off[i];
        }
    }

private:
    std::vector<long> cell_of(const std::vector<double>& p) const {
        std::vector<long> c(dim_);
        for (int i = 0; i < dim_; ++i) c[i] = static_cast<long>(std::floor(p[i] / cell_));
        return c;
    }
    static std::uint64_t key(const std::vector<long>& c) {
        std::uint64_t h = 0x12345;
        for (long v : c) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
        return h;
    }

    int dim_;
    double cell_;
    std::unordered_map<std::uint64_t, std::vector<int>> cells_;
};

HashGrid build_grid(const SeparatedSet& s) {
    const double chord = 2.0 * std::sin(std::min(2.0 * s.epsilon, kPi / 2) / 2.0) * 1.0000001;
    HashGrid g(s.manifold.n + 1, chord);
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        g.insert(s.points[i], static_cast<int>(i));
        if (s.manifold.kind == Manifold::Kind::projective) {
            auto q = s.points[i];
            for (double& x : q) x = -x;
            g.insert(q, static_cast<int>(i));
        }
    }
    return g;
}

// distance from p to the set if some member is within radius, else +inf
double near_distance(const SeparatedSet& s, const HashGrid& g, const std::vector<double>& p, double radius) {
    double best = std::numeric_limits<double>::infinity();
    g.any_neighbour(p, [&](int id) {
        const double dd = distance(s.manifold, p, s.points[id]);
        best = std::min(best, dd);
        return false;
    });
    return best <= radius ? best : std::numeric_limits<double>::infinity();
}

// Points of the doubled (antipodally closed for RP^n) set on the sphere.
std::vector<std::vector<double>> doubled(const SeparatedSet& s) {
    std::vector<std::vector<double>> d = s.points;
    if (s.manifold.kind == Manifold::Kind::projective)
        for (const auto& p : s.points) {
            auto q = p;
            for (double& x : q) x = -x;
            d.push_back(std::move(q));
        }
    return d;
}

bool far_from_all(const SeparatedSet& s, const HashGrid& g, const std::vector<double>& p) {
    return !g.any_neighbour(p, [&](int id) { return distance(s.manifold, p, s.points[id]) <= 2 * s.epsilon + kSlack; });
}

void insert(SeparatedSet& s, HashGrid& g, std::vector<double> p) {
    canonicalize(s.manifold, p);
    const int id = static_cast<int>(s.points.size());
    g.insert(p, id);
    if (s.manifold.kind == Manifold::Kind::projective) {
        auto q = p;
        for (double& x : q) x = -x;
        g.insert(q, id);
    }
    s.points.push_back(std::move(p));
}

// Circle: any arc gap wider than 4 epsilon gets a point.
bool fill_holes_1d(SeparatedSet& s, HashGrid& g) {
    const double eps = s.epsilon, step = 1e-7;
    std::vector<double> ang;
    for (const auto& p : doubled(s)) ang.push_back(std::atan2(p[1], p[0]));
    std::sort(ang.begin(), ang.end());
    bool added = false;
    for (std::size_t i = 0; i < ang.size(); ++i) {
        const double a = ang[i], b = i + 1 < ang.size() ? ang[i + 1] : ang[0] + 2 * kPi;
        if (b - a > 4 * eps + 2 * step) {
            const double t = a + 2 * eps + step;
            std::vector<double> p{std::cos(t), std::sin(t)};
            if (far_from_all(s, g, p)) {
                insert(s, g, p);
                added = true;
            }
        }
    }
    return added;
}

// S^2: an uncovered region has a boundary vertex where two 2-epsilon circles meet
// outside every other cap (or is bounded by a single circle). Probe just beyond those.
bool fill_holes_2d(SeparatedSet& s, HashGrid& g) {
    const double eps = s.epsilon, C = std::cos(2 * eps), step = 1e-7;
    const auto D = doubled(s);
    HashGrid near(3, 2.0 * std::sin(2 * eps) * 1.0000001);
    for (std::size_t i = 0; i < D.size(); ++i) near.insert(D[i], static_cast<int>(i));
    bool added = false;
    auto try_point = [&](std::vector<double> y) {
        double nrm = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
        for (double& v : y) v /= nrm;
        if (far_from_all(s, g, y)) {
            insert(s, g, y);
            added = true;
        }
    };
    for (std::size_t i = 0; i < D.size(); ++i) {
        const auto& pi = D[i];
        int neighbours = 0;
        near.any_neighbour(pi, [&](int jd) {
            const auto j = static_cast<std::size_t>(jd);
            if (j == i) return false;
            const auto& pj = D[j];
            const double gdot = pi[0] * pj[0] + pi[1] * pj[1] + pi[2] * pj[2];
            if (gdot < std::cos(4 * eps) || gdot > 1 - 1e-15) return false;
            ++neighbours;
            if (j < i) return false;
            const double a = C / (1 + gdot);
            const double c2 = (1 - 2 * a * a * (1 + gdot)) / (1 - gdot * gdot);
            if (c2 < 0) return false;
            const std::vector<double> cr{pi[1] * pj[2] - pi[2] * pj[1], pi[2] * pj[0] - pi[0] * pj[2],
                                         pi[0] * pj[1] - pi[1] * pj[0]};
            for (double sg : {-1.0, 1.0}) {
                std::vector<double> x(3), y(3);
                for (int k = 0; k < 3; ++k) x[k] = a * (pi[k] + pj[k]) + sg * std::sqrt(c2) * cr[k];
                // push away from both centres
                double m[3], dm = 0;
                for (int k = 0; k < 3; ++k) m[k] = pi[k] + pj[k];
                for (int k = 0; k < 3; ++k) dm += m[k] * x[k];
                double un = 0;
                for (int k = 0; k < 3; ++k) un += std::pow(dm * x[k] - m[k], 2);
                un = std::sqrt(un);
                for (int k = 0; k < 3; ++k) y[k] = x[k] + step * (dm * x[k] - m[k]) / un;
                try_point(y);
            }
            return false;
        });
        if (neighbours == 0) {
            // isolated cap: probe its boundary
            std::vector<double> t{-pi[1], pi[0], 0.0};
            if (std::fabs(pi[2]) > 0.9) t = {0.0, -pi[2], pi[1]};
            double tn = std::sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
            const double r = 2 * eps + step;
            std::vector<double> y(3);
            for (int k = 0; k < 3; ++k) y[k] = std::cos(r) * pi[k] + std::sin(r) * t[k] / tn;
            try_point(y);
        }
    }
    return added;
}

void check_epsilon(double eps) {
    if (!(eps > 0.0) || !(eps < kPi / 8)) throw InvalidArgument("epsilon must lie in (0, pi/8)");
}

}  // namespace

double Manifold::volume() const {
    const double v = unit_sphere_volume(n);
    return kind == Kind::projective ? 0.5 * v : v;
}

std::string Manifold::name() const {
    return (kind == Kind::projective ? "RP" : "S") + std::to_string(n);
}

double distance(const Manifold& m, const std::vector<double>& a, const std::vector<double>& b) {
    const double t = angle(a, b);
    return m.kind == Manifold::Kind::projective ? std::min(t, kPi - t) : t;
}

SeparatedSet greedy_separated_set(const Manifold& m, double epsilon, std::uint64_t seed, std::int64_t batch) {
    check_manifold(m);
    check_epsilon(epsilon);
    if (batch < 1) throw InvalidArgument("batch must be positive");
    const double expected = m.volume() / (unit_ball_volume(m.n) * std::pow(epsilon, m.n));
    if (expected > 5e6) throw ResourceLimit("separated set would exceed 5e6 points", 0);
    SeparatedSet s{m, epsilon, {}};
    const double chord = 2.0 * std::sin(epsilon) * 1.0000001;
    HashGrid g(m.n + 1, chord);
    CounterRng rng(seed, 0x9ac1);
    std::int64_t rejected = 0;
    // without exact hole filling, wait much longer before declaring maximality
    const std::int64_t patience = m.n <= 2 ? batch : 20 * batch;
    while (rejected < patience) {
        auto p = uniform_point(m, rng);
        const bool close = g.any_neighbour(p, [&](int id) { return distance(m, p, s.points[id]) <= 2 * epsilon + kSlack; });
        if (close) {
            ++rejected;
            continue;
        }
        rejected = 0;
        const int id = static_cast<int>(s.points.size());
        g.insert(p, id);
        if (m.kind == Manifold::Kind::projective) {
            auto q = p;
            for (double& x : q) x = -x;
            g.insert(q, id);
        }
        s.points.push_back(std::move(p));
    }
    if (m.n <= 2)
        while (m.n == 1 ? fill_holes_1d(s, g) : fill_holes_2d(s, g)) {
        }
    return s;
}

CoveringCertificate covering_certificate_serial(const SeparatedSet& s, std::uint64_t seed, std::int64_t batch) {
    const auto g = build_grid(s);
    CoveringCertificate c{true, batch, 0.0};
    for (std::int64_t t = 0; t < batch; ++t) {
        CounterRng rng(seed, 0xc0e5, static_cast<std::uint64_t>(t));
        const auto p = uniform_point(s.manifold, rng);
        const double dd = near_distance(s, g, p, 2 * s.epsilon);
        if (std::isinf(dd)) {
            c.passed = false;
            c.max_gap = std::numeric_limits<double>::infinity();
        } else {
            c.max_gap = std::max(c.max_gap, dd);
        }
    }
    return c;
}

CoveringCertificate covering_certificate(const SeparatedSet& s, std::uint64_t seed, std::int64_t batch) {
    const auto g = build_grid(s);
    std::vector<double> gap(batch);
#pragma omp parallel for schedule(static)
    for (std::int64_t t = 0; t < batch; ++t) {
        CounterRng rng(seed, 0xc0e5, static_cast<std::uint64_t>(t));
        const auto p = uniform_point(s.manifold, rng);
        gap[t] = near_distance(s, g, p, 2 * s.epsilon);
    }
    CoveringCertificate c{true, batch, 0.0};
    for (double dd : gap) {
        if (std::isinf(dd)) c.passed = false;
        c.max_gap = std::max(c.max_gap, dd);
    }
    return c;
}

double min_pairwise_distance(const SeparatedSet& s) {
    if (s.points.size() < 2) return std::numeric_limits<double>::infinity();
    const auto g = build_grid(s);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s.points.size(); ++i)
        g.any_neighbour(s.points[i], [&](int id) {
            if (static_cast<std::size_t>(id) != i) best = std::min(best, distance(s.manifold, s.points[i], s.points[id]));
            return false;
        });
    // pairs farther apart than the hash reach are > 2 epsilon by construction
    return std::min(best, kPi);
}

std::vector<PackingStats> packing_sweep(const Manifold& m, const std::vector<double>& epsilons, std::uint64_t seed,
                                        std::int64_t batch) {
    for (std::size_t i = 1; i < epsilons.size(); ++i)
        if (!(epsilons[i] < epsilons[i - 1])) throw InvalidArgument("packing_sweep: epsilons must decrease");
    std::vector<PackingStats> out;
    const double vb = unit_ball_volume(m.n);
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        const auto s = greedy_separated_set(m, epsilons[i], seed + i, batch);
        const auto cov = covering_certificate(s, seed + 7919 * (i + 1), batch);
        PackingStats st;
        st.epsilon = epsilons[i];
        st.count = static_cast<std::int64_t>(s.points.size());
        st.normalized = std::pow(epsilons[i], m.n) * st.count;
        st.bound = m.volume() / (std::pow(2.0, m.n) * vb);
        st.ceiling = m.volume() / vb;
        st.covering_passed = cov.passed;
        out.push_back(st);
    }
    return out;
}

}  // namespace rhlab::packing
