#include "rhlab/curves2d.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <unordered_map>

#include "rhlab/common.hpp"
#include "rhlab/packing.hpp"

namespace rhlab::curves2d {
namespace {

using Vec3 = std::array<double, 3>;

std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

Vec3 normalized(Vec3 v) {
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    return {v[0] / n, v[1] / n, v[2] / n};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double arc(const Vec3& a, const Vec3& b) {
    const Vec3 c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
    return std::atan2(std::sqrt(dot(c, c)), dot(a, b));
}

std::shared_ptr<SphericalGrid> icosahedron() {
    auto g = std::make_shared<SphericalGrid>();
    const double phi = 0.5 * (1.0 + std::sqrt(5.0));
    std::vector<Vec3> v;
    for (double s1 : {-1.0, 1.0})
        for (double s2 : {-1.0, 1.0}) {
            v.push_back({0.0, s1, s2 * phi});
            v.push_back({s1, s2 * phi, 0.0});
            v.push_back({s2 * phi, 0.0, s1});
        }
    // fixed generic rotation so no vertex lies on a coordinate plane
    const double a = 0.3141, b = 0.7071, c = 1.1093;
    const double ca = std::cos(a), sa = std::sin(a), cb = std::cos(b), sb = std::sin(b), cc = std::cos(c), sc = std::sin(c);
    const double R[3][3] = {{ca * cb, ca * sb * sc - sa * cc, ca * sb * cc + sa * sc},
                            {sa * cb, sa * sb * sc + ca * cc, sa * sb * cc - ca * sc},
                            {-sb, cb * sc, cb * cc}};
    std::vector<std::array<int, 3>> tris;
    const int nv = static_cast<int>(v.size());
    auto d2 = [&](int i, int j) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += (v[i][k] - v[j][k]) * (v[i][k] - v[j][k]);
        return s;
    };
    for (int i = 0; i < nv; ++i)
        for (int j = i + 1; j < nv; ++j)
            for (int k = j + 1; k < nv; ++k)
                if (std::fabs(d2(i, j) - 4) < 1e-9 && std::fabs(d2(j, k) - 4) < 1e-9 && std::fabs(d2(i, k) - 4) < 1e-9)
                    tris.push_back({i, j, k});
    for (auto& p : v) {
        Vec3 r{};
        for (int i = 0; i < 3; ++i) r[i] = R[i][0] * p[0] + R[i][1] * p[1] + R[i][2] * p[2];
        p = normalized(r);
    }
    g->vertices = v;
    g->antipode.assign(nv, -1);
    for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nv; ++j)
            if (dot(v[i], v[j]) < -1 + 1e-9) g->antipode[i] = j;
    g->mesh = Mesh::from_triangles(nv, std::move(tris));
    return g;
}

std::shared_ptr<SphericalGrid> subdivide(const SphericalGrid& in) {
    auto g = std::make_shared<SphericalGrid>();
    g->level = in.level + 1;
    g->vertices = in.vertices;
    std::vector<std::array<int, 2>> parents(in.vertices.size(), {-1, -1});
    std::unordered_map<std::uint64_t, int> mid;
    mid.reserve(in.mesh.edges.size() * 2);
    auto midpoint = [&](int a, int b) {
        const auto k = edge_key(a, b);
        auto it = mid.find(k);
        if (it != mid.end()) return it->second;
        const auto& A = g->vertices[a];
        const auto& B = g->vertices[b];
        const int id = static_cast<int>(g->vertices.size());
        g->vertices.push_back(normalized({A[0] + B[0], A[1] + B[1], A[2] + B[2]}));
        parents.push_back({a, b});
        mid.emplace(k, id);
        return id;
    };
    std::vector<std::array<int, 3>> tris;
    tris.reserve(in.mesh.triangles.size() * 4);
    for (const auto& t : in.mesh.triangles) {
        const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
        tris.push_back({t[0], ab, ca});
        tris.push_back({t[1], bc, ab});
        tris.push_back({t[2], ca, bc});
        tris.push_back({ab, bc, ca});
    }
    const int nv = static_cast<int>(g->vertices.size());
    g->antipode.assign(nv, -1);
    for (std::size_t i = 0; i < in.vertices.size(); ++i) g->antipode[i] = in.antipode[i];
    for (int i = static_cast<int>(in.vertices.size()); i < nv; ++i)
        g->antipode[i] = mid.at(edge_key(in.antipode[parents[i][0]], in.antipode[parents[i][1]]));
    g->mesh = Mesh::from_triangles(nv, std::move(tris));
    return g;
}

void finish(SphericalGrid& g) {
    std::unordered_map<std::uint64_t, int> eid;
    eid.reserve(g.mesh.edges.size() * 2);
    for (std::size_t e = 0; e < g.mesh.edges.size(); ++e)
        eid.emplace(edge_key(g.mesh.edges[e][0], g.mesh.edges[e][1]), static_cast<int>(e));
    g.antipode_edge.resize(g.mesh.edges.size());
    g.max_edge = 0.0;
    for (std::size_t e = 0; e < g.mesh.edges.size(); ++e) {
        const auto [a, b] = g.mesh.edges[e];
        g.antipode_edge[e] = eid.at(edge_key(g.antipode[a], g.antipode[b]));
        g.max_edge = std::max(g.max_edge, arc(g.vertices[a], g.vertices[b]));
    }
}

std::mutex grid_mutex;
std::map<int, std::shared_ptr<const SphericalGrid>> grid_cache;

// Evaluates q(v) with per-vertex power tables.
struct Evaluator {
    const HomogeneousPolynomial& q;
    std::vector<std::array<int, 3>> exps;
    std::vector<double> c;
    explicit Evaluator(const HomogeneousPolynomial& q_) : q(q_) {
        const auto& b = q.basis();
        for (std::size_t i = 0; i < b.size(); ++i) {
            if (q.coeff(i) == 0.0) continue;
            auto e = b.exponents(i);
            exps.push_back({e[0], e[1], e[2]});
            c.push_back(q.coeff(i));
        }
    }
    double operator()(const Vec3& v, std::vector<double>& p0, std::vector<double>& p1, std::vector<double>& p2) const {
        const int d = q.degree();
        p0[0] = p1[0] = p2[0] = 1.0;
        for (int k = 1; k <= d; ++k) {
            p0[k] = p0[k - 1] * v[0];
            p1[k] = p1[k - 1] * v[1];
            p2[k] = p2[k - 1] * v[2];
        }
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * p0[exps[i][0]] * p1[exps[i][1]] * p2[exps[i][2]];
        return s;
    }
};

Vec3 crossing_point(const SphericalGrid& g, const std::vector<double>& val, int e) {
    const auto [a, b] = g.mesh.edges[e];
    const double t = val[a] / (val[a] - val[b]);
    const auto& A = g.vertices[a];
    const auto& B = g.vertices[b];
    return normalized({A[0] + t * (B[0] - A[0]), A[1] + t * (B[1] - A[1]), A[2] + t * (B[2] - A[2])});
}

// Shared driver so the parallel and serial paths produce identical records.
TrialRecord run_trial(int d, std::uint64_t seed, std::int64_t trial, int level) {
    const EnsembleSpec spec{EnsembleKind::kostlan, 3, d, seed};
    const auto q = sample(spec, static_cast<std::uint64_t>(trial));
    auto topo = extract_topology(q, *SphericalGrid::get(level));
    int used = level;
    if (topo.flagged && level < SphericalGrid::kMaxLevel) {
        topo = extract_topology(q, *SphericalGrid::get(level + 1));
        used = level + 1;
    }
    return {trial, topo.b0, topo.noncontractible, topo.flagged, used};
}

BettiStats reduce_records(int d, std::int64_t trials, int level, std::vector<TrialRecord> recs) {
    BettiStats st;
    st.d = d;
    st.trials = trials;
    st.level = level;
    st.harnack_bound = harnack_bound(d);
    std::vector<double> b0(trials);
    std::int64_t flagged = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
        const auto& r = recs[t];
        b0[t] = r.b0;
        st.max_b0_observed = std::max(st.max_b0_observed, r.b0);
        if (r.flagged) ++flagged;
        if (r.noncontractible != d % 2) ++st.parity_violations;
        if (r.b0 > st.harnack_bound)
            throw InvalidState("sample " + std::to_string(t) + " exceeds the Harnack bound: extraction defect");
    }
    const auto e = summarize(b0);
    st.mean_b0 = e.mean;
    st.std_error = e.std_error;
    st.flagged_fraction = trials ? double(flagged) / trials : 0.0;
    st.records = std::move(recs);
    return st;
}

void check_betti_args(int d, std::int64_t trials) {
    if (d < 1) throw InvalidArgument("degree must be at least 1");
    if (trials < 1) throw InvalidArgument("trials must be positive");
}

// Point-in-polygon by ray casting.
bool inside(const std::array<double, 2>& p, const std::vector<std::array<double, 2>>& poly) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const auto& a = poly[i];
        const auto& b = poly[j];
        if ((a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0]) in = !in;
    }
    return in;
}

double area(const std::vector<std::array<double, 2>>& poly) {
    double s = 0;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
        s += poly[j][0] * poly[i][1] - poly[i][0] * poly[j][1];
    return 0.5 * std::fabs(s);
}

}  // namespace

const Mesh& square_mesh(int m) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<Mesh>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[m];
    if (!slot) {
        std::vector<std::array<int, 3>> tris;
        for (int i = 0; i + 1 < m; ++i)
            for (int j = 0; j + 1 < m; ++j) {
                const int a = i * m + j, b = a + 1, c = a + m, e = c + 1;
                tris.push_back({a, b, e});
                tris.push_back({a, e, c});
            }
        slot = std::make_unique<Mesh>(Mesh::from_triangles(m * m, std::move(tris)));
    }
    return *slot;
}

Mesh Mesh::from_triangles(int num_vertices, std::vector<std::array<int, 3>> tris) {
    Mesh m;
    m.num_vertices = num_vertices;
    m.triangles = std::move(tris);
    std::unordered_map<std::uint64_t, int> eid;
    eid.reserve(m.triangles.size() * 2);
    m.tri_edges.resize(m.triangles.size());
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tr = m.triangles[t];
        for (int k = 0; k < 3; ++k) {
            const int a = tr[k], b = tr[(k + 1) % 3];
            auto [it, fresh] = eid.emplace(edge_key(a, b), static_cast<int>(m.edges.size()));
            if (fresh) {
                m.edges.push_back({std::min(a, b), std::max(a, b)});
                m.edge_tris.push_back({static_cast<int>(t), -1});
            } else {
                m.edge_tris[it->second][1] = static_cast<int>(t);
            }
            m.tri_edges[t][k] = it->second;
        }
    }
    m.vertex_tri_offsets.assign(num_vertices + 1, 0);
    for (const auto& tr : m.triangles)
        for (int v : tr) ++m.vertex_tri_offsets[v + 1];
    for (int v = 0; v < num_vertices; ++v) m.vertex_tri_offsets[v + 1] += m.vertex_tri_offsets[v];
    m.vertex_tris.resize(m.vertex_tri_offsets.back());
    std::vector<int> fill(m.vertex_tri_offsets.begin(), m.vertex_tri_offsets.end() - 1);
    for (std::size_t t = 0; t < m.triangles.size(); ++t)
        for (int v : m.triangles[t]) m.vertex_tris[fill[v]++] = static_cast<int>(t);
    return m;
}

Contours trace_contours(const Mesh& mesh, const std::vector<double>& values) {
    if (static_cast<int>(values.size()) != mesh.num_vertices) throw InvalidArgument("trace_contours: value count");
    const std::size_t ne = mesh.edges.size();
    std::vector<char> crossed(ne);
    for (std::size_t e = 0; e < ne; ++e)
        crossed[e] = (values[mesh.edges[e][0]] >= 0.0) != (values[mesh.edges[e][1]] >= 0.0);
    auto other = [&](int t, int e) {
        for (int f : mesh.tri_edges[t])
            if (f != e && crossed[f]) return f;
        throw InvalidState("trace_contours: triangle with a single crossed edge");
    };
    auto next_tri = [&](int e, int t) { return mesh.edge_tris[e][0] == t ? mesh.edge_tris[e][1] : mesh.edge_tris[e][0]; };
    Contours c;
    c.edge_component.assign(ne, -1);
    std::vector<int> mark(ne, -1);
    std::vector<std::vector<int>> chains;
    for (std::size_t e0 = 0; e0 < ne; ++e0) {
        if (!crossed[e0] || mark[e0] >= 0 || mesh.edge_tris[e0][1] >= 0) continue;
        std::vector<int> chain{static_cast<int>(e0)};
        mark[e0] = 1;
        int e = static_cast<int>(e0), t = mesh.edge_tris[e0][0];
        while (true) {
            const int f = other(t, e);
            chain.push_back(f);
            mark[f] = 1;
            const int u = next_tri(f, t);
            if (u < 0) break;
            e = f;
            t = u;
        }
        chains.push_back(std::move(chain));
    }
    for (std::size_t e0 = 0; e0 < ne; ++e0) {
        if (!crossed[e0] || mark[e0] >= 0) continue;
        const int id = static_cast<int>(c.cycles.size());
        std::vector<int> cyc{static_cast<int>(e0)};
        mark[e0] = 1;
        c.edge_component[e0] = id;
        int e = static_cast<int>(e0), t = mesh.edge_tris[e0][0];
        while (true) {
            const int f = other(t, e);
            if (f == static_cast<int>(e0)) break;
            cyc.push_back(f);
            mark[f] = 1;
            c.edge_component[f] = id;
            e = f;
            t = next_tri(f, t);
        }
        c.cycles.push_back(std::move(cyc));
    }
    for (auto& ch : chains) {
        const int id = static_cast<int>(c.cycles.size() + c.chains.size());
        for (int e : ch) c.edge_component[e] = id;
        c.chains.push_back(std::move(ch));
    }
    for (int v = 0; v < mesh.num_vertices; ++v) {
        int first = -1;
        bool two = false;
        for (int k = mesh.vertex_tri_offsets[v]; k < mesh.vertex_tri_offsets[v + 1] && !two; ++k)
            for (int e : mesh.tri_edges[mesh.vertex_tris[k]]) {
                const int comp = c.edge_component[e];
                if (comp < 0) continue;
                if (first < 0) first = comp;
                else if (comp != first) two = true;
            }
        if (two) c.flagged_vertices.push_back(v);
    }
    return c;
}

std::shared_ptr<const SphericalGrid> SphericalGrid::get(int level) {
    if (level < 0 || level > kMaxLevel)
        throw ResourceLimit("spherical grid level " + std::to_string(level) + " exceeds the memory cap", kMaxLevel);
    std::lock_guard<std::mutex> lock(grid_mutex);
    if (grid_cache.empty()) {
        auto g = icosahedron();
        finish(*g);
        grid_cache[0] = g;
    }
    int have = grid_cache.rbegin()->first;
    while (have < level) {
        auto g = subdivide(*grid_cache[have]);
        finish(*g);
        grid_cache[++have] = g;
    }
    return grid_cache.at(level);
}

double SphericalGrid::max_edge_at(int level) { return get(level)->max_edge; }

int SphericalGrid::level_for_degree(int d) {
    if (d < 1) throw InvalidArgument("level_for_degree: d must be positive");
    const double target = 1.0 / (4.0 * d);
    for (int L = 0; L <= kMaxLevel; ++L)
        if (max_edge_at(L) <= target) return L;
    int dmax = static_cast<int>(std::floor(1.0 / (4.0 * max_edge_at(kMaxLevel))));
    throw ResourceLimit("degree " + std::to_string(d) + " needs a grid finer than the memory cap allows", dmax);
}

std::vector<double> vertex_values(const HomogeneousPolynomial& q, const SphericalGrid& g) {
    if (q.nvars() != 3) throw InvalidArgument("extract_topology: plane curves need nvars = 3");
    const int d = q.degree();
    Evaluator ev(q);
    std::vector<double> p0(d + 1), p1(d + 1), p2(d + 1);
    std::vector<double> val(g.vertices.size());
    for (std::size_t v = 0; v < g.vertices.size(); ++v) {
        const auto a = static_cast<std::size_t>(g.antipode[v]);
        if (a < v) continue;
        val[v] = ev(g.vertices[v], p0, p1, p2);
        val[a] = (d % 2) ? -val[v] : val[v];
    }
    return val;
}

CurveTopology extract_topology(const HomogeneousPolynomial& q, const SphericalGrid& g) {
    if (q.is_zero()) throw InvalidArgument("extract_topology: zero polynomial");
    const auto val = vertex_values(q, g);
    const auto c = trace_contours(g.mesh, val);
    if (!c.chains.empty()) throw InvalidState("extract_topology: open curve on a closed surface");
    CurveTopology topo;
    topo.flagged = c.flagged();
    topo.s2_components = static_cast<int>(c.cycles.size());
    for (std::size_t i = 0; i < c.cycles.size(); ++i) {
        const int j = c.edge_component[g.antipode_edge[c.cycles[i][0]]];
        const int back = c.edge_component[g.antipode_edge[c.cycles[j][0]]];
        if (back != static_cast<int>(i)) topo.flagged = true;
        if (j < static_cast<int>(i)) continue;
        Component comp;
        comp.contractible = j != static_cast<int>(i);
        comp.polyline.reserve(c.cycles[i].size());
        for (int e : c.cycles[i]) comp.polyline.push_back(crossing_point(g, val, e));
        if (!comp.contractible) ++topo.noncontractible;
        topo.components.push_back(std::move(comp));
    }
    topo.b0 = static_cast<int>(topo.components.size());
    return topo;
}

BettiStats betti_statistics_serial(int d, std::int64_t trials, std::uint64_t seed, int level) {
    check_betti_args(d, trials);
    if (level < 0) level = SphericalGrid::level_for_degree(d);
    SphericalGrid::get(std::min(level + 1, SphericalGrid::kMaxLevel));
    std::vector<TrialRecord> recs(trials);
    for (std::int64_t t = 0; t < trials; ++t) recs[t] = run_trial(d, seed, t, level);
    return reduce_records(d, trials, level, std::move(recs));
}

BettiStats betti_statistics(int d, std::int64_t trials, std::uint64_t seed, int level) {
    check_betti_args(d, trials);
    if (level < 0) level = SphericalGrid::level_for_degree(d);
    SphericalGrid::get(std::min(level + 1, SphericalGrid::kMaxLevel));  // build before the workers start
    std::vector<TrialRecord> recs(trials);
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t t = 0; t < trials; ++t) {
        try {
            recs[t] = run_trial(d, seed, t, level);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return reduce_records(d, trials, level, std::move(recs));
}

RefinementCheck refinement_agreement(int d, std::int64_t trials, std::uint64_t seed, int level) {
    check_betti_args(d, trials);
    if (level < 0) level = SphericalGrid::level_for_degree(d);
    if (level + 1 > SphericalGrid::kMaxLevel) throw ResourceLimit("refinement check exceeds the grid cap", 0);
    const auto g0 = SphericalGrid::get(level);
    const auto g1 = SphericalGrid::get(level + 1);
    std::vector<int> cmp(trials, -1);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t t = 0; t < trials; ++t) {
        const auto q = sample(EnsembleSpec{EnsembleKind::kostlan, 3, d, seed}, static_cast<std::uint64_t>(t));
        const auto a = extract_topology(q, *g0);
        const auto b = extract_topology(q, *g1);
        if (!a.flagged && !b.flagged) cmp[t] = a.b0 == b.b0 ? 1 : 0;
    }
    RefinementCheck r;
    for (int v : cmp)
        if (v >= 0) {
            ++r.compared;
            r.agree += v;
        }
    return r;
}

std::string nesting_signature(const std::vector<std::vector<std::array<double, 2>>>& polys) {
    const int n = static_cast<int>(polys.size());
    std::vector<int> parent(n, -1);
    std::vector<double> ar(n);
    for (int i = 0; i < n; ++i) ar[i] = area(polys[i]);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j || polys[j].size() < 3 || polys[i].empty()) continue;
            if (ar[j] > ar[i] && inside(polys[i][0], polys[j]) && (parent[i] < 0 || ar[j] < ar[parent[i]])) parent[i] = j;
        }
    std::vector<std::vector<int>> kids(n + 1);
    for (int i = 0; i < n; ++i) kids[parent[i] < 0 ? n : parent[i]].push_back(i);
    std::function<std::string(int)> enc = [&](int v) {
        std::vector<std::string> parts;
        for (int k : kids[v]) parts.push_back(enc(k));
        std::sort(parts.begin(), parts.end());
        std::string s;
        for (auto& p : parts) s += p;
        return v == n ? s : "(" + s + ")";
    };
    return enc(n);
}

std::vector<SigmaSpec> default_catalog() {
    return {{"1 oval", "()"}, {"2 non-nested", "()()"}, {"2 nested", "(())"}};
}

SigmaSpec parse_sigma(const std::string& text) {
    for (const auto& s : default_catalog())
        if (s.name == text) return s;
    if (text == "empty") return {"empty", ""};
    int depth = 0;
    for (char ch : text) {
        if (ch == '(') ++depth;
        else if (ch == ')') --depth;
        else throw InvalidArgument("unknown configuration '" + text + "'");
        if (depth < 0) throw InvalidArgument("unbalanced configuration '" + text + "'");
    }
    if (depth != 0) throw InvalidArgument("unbalanced configuration '" + text + "'");
    return {text, text};
}

CensusResult component_census_in_balls(int d, std::int64_t trials, double R, const std::vector<SigmaSpec>& catalog,
                                       std::uint64_t seed) {
    check_betti_args(d, trials);
    if (!(R > 0)) throw InvalidArgument("census: R must be positive");
    CensusResult res;
    res.d = d;
    res.trials = trials;
    res.epsilon = R / std::sqrt(double(d));
    for (const auto& s : catalog) res.names.push_back(s.name);
    const auto centers = packing::greedy_separated_set(packing::Manifold::projective(2), res.epsilon, seed ^ 0x7ac4);
    const int nb = static_cast<int>(centers.points.size());
    res.n_balls = nb;
    const double cos_eps = std::cos(res.epsilon);
    std::vector<std::array<Vec3, 2>> basis(nb);
    for (int b = 0; b < nb; ++b) {
        const Vec3 c{centers.points[b][0], centers.points[b][1], centers.points[b][2]};
        Vec3 t = std::fabs(c[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        const double k = dot(t, c);
        t = normalized({t[0] - k * c[0], t[1] - k * c[1], t[2] - k * c[2]});
        basis[b] = {t, Vec3{c[1] * t[2] - c[2] * t[1], c[2] * t[0] - c[0] * t[2], c[0] * t[1] - c[1] * t[0]}};
    }
    const int level = SphericalGrid::level_for_degree(d);
    SphericalGrid::get(std::min(level + 1, SphericalGrid::kMaxLevel));
    const std::size_t ns = catalog.size();
    std::vector<std::vector<double>> hits(ns, std::vector<double>(trials, 0.0));
    std::vector<int> b0(trials), excess(trials), flagged(trials);
#pragma omp parallel for schedule(dynamic, 2)
    for (std::int64_t t = 0; t < trials; ++t) {
        const auto q = sample(EnsembleSpec{EnsembleKind::kostlan, 3, d, seed}, static_cast<std::uint64_t>(t));
        auto topo = extract_topology(q, *SphericalGrid::get(level));
        if (topo.flagged && level < SphericalGrid::kMaxLevel) topo = extract_topology(q, *SphericalGrid::get(level + 1));
        b0[t] = topo.b0;
        flagged[t] = topo.flagged;
        std::vector<std::vector<std::vector<std::array<double, 2>>>> in_ball(nb);
        for (const auto& comp : topo.components) {
            if (!comp.contractible) continue;
            const auto& p0 = comp.polyline.front();
            for (int b = 0; b < nb; ++b) {
                const Vec3 c{centers.points[b][0], centers.points[b][1], centers.points[b][2]};
                const double s = dot(p0, c) >= 0 ? 1.0 : -1.0;
                bool all = true;
                for (const auto& p : comp.polyline)
                    if (s * dot(p, c) < cos_eps) {
                        all = false;
                        break;
                    }
                if (!all) continue;
                std::vector<std::array<double, 2>> poly;
                for (const auto& p : comp.polyline) {
                    const double h = s * dot(p, c);
                    poly.push_back({s * dot(p, basis[b][0]) / h, s * dot(p, basis[b][1]) / h});
                }
                in_ball[b].push_back(std::move(poly));
                break;  // balls are disjoint
            }
        }
        int total = 0;
        for (int b = 0; b < nb; ++b) {
            if (in_ball[b].empty()) continue;
            const auto sig = nesting_signature(in_ball[b]);
            for (std::size_t k = 0; k < ns; ++k)
                if (catalog[k].signature == sig) {
                    hits[k][t] += 1.0;
                    ++total;
                }
        }
        excess[t] = total - topo.b0;
    }
    for (std::size_t k = 0; k < ns; ++k) res.counts.push_back(summarize(hits[k]));
    std::vector<double> b0d(b0.begin(), b0.end());
    res.mean_b0 = summarize(b0d).mean;
    res.max_excess = *std::max_element(excess.begin(), excess.end());
    res.flagged_fraction = double(std::count(flagged.begin(), flagged.end(), 1)) / trials;
    return res;
}

ChartGrid chart_grid(const HomogeneousPolynomial& q, double radius, double spacing, bool gradient) {
    if (q.nvars() != 3) throw InvalidArgument("chart_grid: nvars must be 3");
    if (!(radius > 0) || !(spacing > 0)) throw InvalidArgument("chart_grid: radius and spacing must be positive");
    ChartGrid g;
    g.half = static_cast<int>(std::ceil(radius / spacing)) + 2;
    g.m = 2 * g.half + 1;
    g.spacing = spacing;
    if (g.m > 4001) throw ResourceLimit("chart_grid: grid too fine", 0);
    const int d = q.degree(), m = g.m;
    // c[a1][a2] of q(1, x1, x2)
    std::vector<double> c((d + 1) * (d + 1), 0.0);
    const auto& b = q.basis();
    for (std::size_t i = 0; i < b.size(); ++i) {
        auto e = b.exponents(i);
        c[e[1] * (d + 1) + e[2]] = q.coeff(i);
    }
    const std::size_t np = static_cast<std::size_t>(m) * m;
    g.value.resize(np);
    if (gradient) {
        g.d1.resize(np);
        g.d2.resize(np);
    }
    std::vector<double> row(d + 1), drow(d + 1);
    for (int i = 0; i < m; ++i) {
        const double x2 = (i - g.half) * spacing;
        for (int a1 = 0; a1 <= d; ++a1) {
            double s = 0.0, ds = 0.0;
            for (int a2 = d - a1; a2 >= 0; --a2) {
                ds = ds * x2 + s;
                s = s * x2 + c[a1 * (d + 1) + a2];
            }
            row[a1] = s;
            drow[a1] = ds;
        }
        for (int j = 0; j < m; ++j) {
            const double x1 = (j - g.half) * spacing;
            double s = 0.0, s1 = 0.0, s2 = 0.0;
            for (int a1 = d; a1 >= 0; --a1) {
                s1 = s1 * x1 + s;
                s = s * x1 + row[a1];
                s2 = s2 * x1 + drow[a1];
            }
            const std::size_t k = static_cast<std::size_t>(i) * m + j;
            g.value[k] = s;
            if (gradient) {
                g.d1[k] = s1;
                g.d2[k] = s2;
            }
        }
    }
    return g;
}

DiskTopology disk_topology(const ChartGrid& g, const std::vector<double>& val, double radius) {
    const auto& mesh = square_mesh(g.m);
    const auto cont = trace_contours(mesh, val);
    auto crossing = [&](int e) {
        const auto [a, bb] = mesh.edges[e];
        const double t = val[a] / (val[a] - val[bb]);
        const auto A = g.point(a), B = g.point(bb);
        return std::array<double, 2>{A[0] + t * (B[0] - A[0]), A[1] + t * (B[1] - A[1])};
    };
    DiskTopology out;
    const double reach = radius + 2 * g.spacing;
    for (int v : cont.flagged_vertices) {
        const auto p = g.point(v);
        if (std::hypot(p[0], p[1]) <= reach) out.flagged = true;
    }
    std::vector<std::vector<std::array<double, 2>>> polys;
    for (const auto& cyc : cont.cycles) {
        std::vector<std::array<double, 2>> poly;
        bool in = true;
        for (int e : cyc) {
            poly.push_back(crossing(e));
            if (std::hypot(poly.back()[0], poly.back()[1]) >= radius) in = false;
        }
        if (in) polys.push_back(std::move(poly));
    }
    out.closed_inside = static_cast<int>(polys.size());
    out.signature = nesting_signature(polys);
    return out;
}

DiskTopology disk_topology(const HomogeneousPolynomial& q, double radius, double spacing) {
    const auto g = chart_grid(q, radius, spacing);
    return disk_topology(g, g.value, radius);
}

}  // namespace rhlab::curves2d
