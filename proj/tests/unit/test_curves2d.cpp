#include <doctest.h>

#include <cmath>
#include <numeric>

#include "rhlab/common.hpp"
#include "rhlab/curves2d.hpp"

using namespace rhlab;
using namespace rhlab::curves2d;

namespace {

HomogeneousPolynomial from_affine(std::vector<std::pair<double, std::vector<int>>> terms, int d) {
    return homogenize(AffinePolynomial::from_terms(2, terms), d);
}

struct UnionFind {
    std::vector<int> p;
    explicit UnionFind(int n) : p(n) { std::iota(p.begin(), p.end(), 0); }
    int find(int x) { return p[x] == x ? x : p[x] = find(p[x]); }
    void unite(int a, int b) { p[find(a)] = find(b); }
};

// Curve components on S^2 = sign regions - 1 (each curve separates the sphere).
int oracle_s2_components(const std::vector<double>& val, const SphericalGrid& g) {
    const int n = static_cast<int>(g.vertices.size());
    UnionFind uf(n);
    for (const auto& e : g.mesh.edges)
        if ((val[e[0]] >= 0) == (val[e[1]] >= 0)) uf.unite(e[0], e[1]);
    int regions = 0;
    for (int v = 0; v < n; ++v)
        if (uf.find(v) == v) ++regions;
    return regions - 1;
}

std::vector<std::array<double, 2>> circle(double cx, double cy, double r, int k = 64) {
    std::vector<std::array<double, 2>> p;
    for (int i = 0; i < k; ++i) p.push_back({cx + r * std::cos(2 * kPi * i / k), cy + r * std::sin(2 * kPi * i / k)});
    return p;
}

}  // namespace

TEST_CASE("spherical grid structure") {
    for (int L = 0; L <= 5; ++L) {
        auto g = SphericalGrid::get(L);
        const long V = g->vertices.size(), E = g->mesh.edges.size(), F = g->mesh.triangles.size();
        CHECK(V - E + F == 2);
        CHECK(F == 20L << (2 * L));
        for (long v = 0; v < V; ++v) {
            const int a = g->antipode[v];
            CHECK(g->antipode[a] == v);
            for (int k = 0; k < 3; ++k) CHECK(g->vertices[a][k] == doctest::Approx(-g->vertices[v][k]).epsilon(1e-12));
        }
        for (long e = 0; e < E; ++e) CHECK(g->antipode_edge[g->antipode_edge[e]] == e);
        CHECK(g->max_edge <= 1.35 * std::ldexp(1.0, -L));
        for (const auto& et : g->mesh.edge_tris) CHECK(et[1] >= 0);
    }
    CHECK(SphericalGrid::level_for_degree(16) == 7);
    CHECK(SphericalGrid::get(7)->max_edge <= 1.0 / 64);
    CHECK_THROWS_AS(SphericalGrid::level_for_degree(100), ResourceLimit);
}

TEST_CASE("explicit curves") {
    auto g = SphericalGrid::get(5);
    auto empty = from_affine({{1.0, {2, 0}}, {1.0, {0, 2}}, {1.0, {0, 0}}}, 2);
    CHECK(extract_topology(empty, *g).b0 == 0);
    auto oval = from_affine({{1.0, {2, 0}}, {1.0, {0, 2}}, {-0.3, {0, 0}}}, 2);
    auto t = extract_topology(oval, *g);
    CHECK(t.b0 == 1);
    CHECK(t.noncontractible == 0);
    CHECK(t.s2_components == 2);
    auto line = from_affine({{1.0, {0, 0}}}, 1);  // X0
    t = extract_topology(line, *g);
    CHECK(t.b0 == 1);
    CHECK(t.noncontractible == 1);
    CHECK(t.s2_components == 1);
    // cubic: line times oval
    auto cubic = from_affine({{1.0, {3, 0}}, {1.0, {1, 2}}, {-0.3, {1, 0}}, {-2.0, {2, 0}}, {-2.0, {0, 2}}, {0.6, {0, 0}}}, 3);
    t = extract_topology(cubic, *g);  // (x - 2)(x^2 + y^2 - 0.3)
    CHECK(t.b0 == 2);
    CHECK(t.noncontractible == 1);
    CHECK_THROWS_AS(extract_topology(HomogeneousPolynomial(3, 2), *g), InvalidArgument);
}

TEST_CASE("component count against a sign-region oracle") {
    for (int d : {2, 3, 5, 8}) {
        auto g = SphericalGrid::get(SphericalGrid::level_for_degree(d));
        for (int t = 0; t < 40; ++t) {
            auto q = sample(EnsembleSpec{EnsembleKind::kostlan, 3, d, 99}, t);
            auto topo = extract_topology(q, *g);
            CHECK(topo.s2_components == oracle_s2_components(vertex_values(q, *g), *g));
            int contractible = 0;
            for (const auto& c : topo.components) contractible += c.contractible;
            CHECK(topo.s2_components == 2 * contractible + topo.noncontractible);
            CHECK(topo.noncontractible == d % 2);
            CHECK(topo.b0 <= harnack_bound(d));
        }
    }
}

TEST_CASE("betti statistics") {
    auto s1 = betti_statistics(1, 200, 3);
    CHECK(s1.mean_b0 == 1.0);
    CHECK(s1.std_error == 0.0);
    auto s2 = betti_statistics(2, 400, 3);
    CHECK(s2.mean_b0 < 1.0);
    CHECK(s2.max_b0_observed <= 1);
    for (int d : {3, 4, 6}) {
        auto s = betti_statistics(d, 300, 5);
        CHECK(s.max_b0_observed <= s.harnack_bound);
        CHECK(s.parity_violations == 0);
        CHECK(s.records.size() == 300);
    }
    CHECK_THROWS_AS(betti_statistics(0, 10, 1), InvalidArgument);
}

TEST_CASE("parallel and serial betti statistics agree") {
    auto a = betti_statistics(5, 100, 8), b = betti_statistics_serial(5, 100, 8);
    CHECK(a.mean_b0 == b.mean_b0);
    CHECK(a.std_error == b.std_error);
    for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].b0 == b.records[i].b0);
}

TEST_CASE("grid refinement stability") {
    auto r = refinement_agreement(6, 150, 12);
    CHECK(r.compared >= 140);
    CHECK(r.fraction() >= 0.99);
}

TEST_CASE("nesting signatures") {
    CHECK(nesting_signature({}) == "");
    CHECK(nesting_signature({circle(0, 0, 1)}) == "()");
    CHECK(nesting_signature({circle(0, 0, 1), circle(3, 0, 1)}) == "()()");
    CHECK(nesting_signature({circle(0, 0, 0.5), circle(0, 0, 1)}) == "(())");
    CHECK(nesting_signature({circle(0, 0, 3), circle(-1, 0, 0.5), circle(1, 0, 0.5), circle(1, 0, 0.2)}) ==
          nesting_signature({circle(0, 0, 3), circle(1, 0, 0.5), circle(1, 0, 0.2), circle(-1, 0, 0.5)}));
    CHECK(nesting_signature({circle(0, 0, 3), circle(-1, 0, 0.5), circle(1, 0, 0.5), circle(1, 0, 0.2)}) == "((())())");
    CHECK(parse_sigma("2 nested").signature == "(())");
    CHECK(parse_sigma("()()").signature == "()()");
    CHECK_THROWS_AS(parse_sigma("(()"), InvalidArgument);
    CHECK_THROWS_AS(parse_sigma("three ovals"), InvalidArgument);
}

TEST_CASE("disk topology") {
    auto oval = from_affine({{1.0, {2, 0}}, {1.0, {0, 2}}, {-1.0, {0, 0}}}, 2);
    auto t = disk_topology(oval, 2.0, 1.0 / 16);
    CHECK(t.closed_inside == 1);
    CHECK(t.signature == "()");
    CHECK_FALSE(t.flagged);
    CHECK(disk_topology(oval, 0.9, 1.0 / 16).closed_inside == 0);
    // (r^2 - 1/4)(r^2 - 1) and two separate ovals
    auto nested = from_affine({{1.0, {4, 0}}, {2.0, {2, 2}}, {1.0, {0, 4}}, {-1.25, {2, 0}}, {-1.25, {0, 2}}, {0.25, {0, 0}}}, 6);
    CHECK(disk_topology(nested, 2.0, 1.0 / 32).signature == "(())");
    // ((x-1)^2 + y^2 - 1/4)((x+1)^2 + y^2 - 1/4)
    auto a = AffinePolynomial::from_terms(2, {{1.0, {2, 0}}, {-2.0, {1, 0}}, {1.0, {0, 2}}, {0.75, {0, 0}}});
    auto b = AffinePolynomial::from_terms(2, {{1.0, {2, 0}}, {2.0, {1, 0}}, {1.0, {0, 2}}, {0.75, {0, 0}}});
    std::vector<std::pair<double, std::vector<int>>> prod;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) {
            auto ea = a.exponents(i), eb = b.exponents(j);
            if (a.coeffs()[i] == 0 || b.coeffs()[j] == 0) continue;
            prod.push_back({a.coeffs()[i] * b.coeffs()[j], {ea[0] + eb[0], ea[1] + eb[1]}});
        }
    auto two = homogenize(AffinePolynomial::from_terms(2, prod), 4);
    CHECK(disk_topology(two, 2.0, 1.0 / 32).signature == "()()");
    CHECK(disk_topology(two, 1.2, 1.0 / 32).closed_inside == 0);
}

TEST_CASE("census in balls") {
    const auto cat = default_catalog();
    // at d = 8 the ball radius 1/sqrt(8) is still comparable to the curve scale; compare 16 and 24
    auto c16 = component_census_in_balls(16, 600, 1.0, cat, 4);
    auto c24 = component_census_in_balls(24, 600, 1.0, cat, 4);
    CHECK(c16.max_excess <= 0);
    CHECK(c24.max_excess <= 0);
    CHECK(c16.counts.size() == 3);
    CHECK(c16.epsilon == doctest::Approx(0.25));
    const double r16 = c16.counts[0].mean / c16.n_balls, r24 = c24.counts[0].mean / c24.n_balls;
    CHECK(c16.counts[0].mean > 0);
    CHECK(std::fabs(r16 / r24 - 1.0) < 0.3);
    auto none = component_census_in_balls(8, 20, 1.0, {}, 4);
    CHECK(none.counts.empty());
    CHECK(none.max_excess <= 0);
}

TEST_CASE("chart grid values and gradients match direct evaluation") {
    auto q = sample(EnsembleSpec{EnsembleKind::kostlan, 3, 11, 6}, 2);
    auto p = dehomogenize(q);
    auto g = chart_grid(q, 0.5, 0.05, true);
    for (int k = 0; k < g.m * g.m; k += 37) {
        const auto x = g.point(k);
        const std::vector<double> xv{x[0], x[1]};
        const double v = p.evaluate(xv);
        const auto gr = p.gradient(xv);
        CHECK(g.value[k] == doctest::Approx(v).epsilon(1e-11).scale(1.0));
        CHECK(g.d1[k] == doctest::Approx(gr[0]).epsilon(1e-11).scale(1.0));
        CHECK(g.d2[k] == doctest::Approx(gr[1]).epsilon(1e-11).scale(1.0));
    }
}
