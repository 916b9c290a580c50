#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "rhlab/ensembles.hpp"
#include "rhlab/stats.hpp"

namespace rhlab::curves2d {

// Triangle mesh with edge adjacency; boundary edges have edge_tris[e][1] = -1.
struct Mesh {
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::array<int, 2>> edges;
    std::vector<std::array<int, 3>> tri_edges;
    std::vector<std::array<int, 2>> edge_tris;
    std::vector<int> vertex_tri_offsets;  // CSR vertex -> incident triangles
    std::vector<int> vertex_tris;
    int num_vertices = 0;

    static Mesh from_triangles(int num_vertices, std::vector<std::array<int, 3>> tris);
};

// Zero set of a function sampled on mesh vertices (sign rule: value >= 0 is positive).
struct Contours {
    std::vector<std::vector<int>> cycles;  // crossed edges in traversal order
    std::vector<std::vector<int>> chains;  // open curves ending on the mesh boundary
    std::vector<int> edge_component;       // cycles first, then chains; -1 if not crossed
    std::vector<int> flagged_vertices;     // vertices whose triangle ring meets two different curves
    bool flagged() const { return !flagged_vertices.empty(); }
};
Contours trace_contours(const Mesh& mesh, const std::vector<double>& values);

// Antipodally symmetric triangulation of S^2: subdivided icosahedron under a fixed rotation.
class SphericalGrid {
public:
    static constexpr int kMaxLevel = 8;
    static std::shared_ptr<const SphericalGrid> get(int level);  // built once, shared
    // Smallest level whose longest edge is <= 1/(4d) radians.
    static int level_for_degree(int d);
    static double max_edge_at(int level);

    int level = 0;
    std::vector<std::array<double, 3>> vertices;
    Mesh mesh;
    std::vector<int> antipode;       // vertex -> antipodal vertex
    std::vector<int> antipode_edge;  // edge -> antipodal edge
    double max_edge = 0.0;           // longest edge, radians
};

struct Component {
    std::vector<std::array<double, 3>> polyline;  // zero crossings along one cycle on S^2
    bool contractible = true;
};

struct CurveTopology {
    std::vector<Component> components;  // components on RP^2
    int b0 = 0;
    int noncontractible = 0;
    int s2_components = 0;
    bool flagged = false;
};

std::vector<double> vertex_values(const HomogeneousPolynomial& q, const SphericalGrid& grid);
CurveTopology extract_topology(const HomogeneousPolynomial& q, const SphericalGrid& grid);

inline int harnack_bound(int d) { return (d - 1) * (d - 2) / 2 + 1; }

struct TrialRecord {
    std::int64_t trial = 0;
    int b0 = 0;
    int noncontractible = 0;
    bool flagged = false;
    int level = 0;
};

struct BettiStats {
    int d = 0;
    std::int64_t trials = 0;
    double mean_b0 = 0.0;
    double std_error = 0.0;
    int max_b0_observed = 0;
    int harnack_bound = 0;
    int level = 0;
    double flagged_fraction = 0.0;  // still flagged after the retry at level + 1
    std::int64_t parity_violations = 0;
    std::vector<TrialRecord> records;
};

// Kostlan samples (seed, stream = trial) on RP^2. Throws InvalidState if a sample exceeds the Harnack bound.
BettiStats betti_statistics(int d, std::int64_t trials, std::uint64_t seed, int level = -1);
BettiStats betti_statistics_serial(int d, std::int64_t trials, std::uint64_t seed, int level = -1);

struct RefinementCheck {
    std::int64_t compared = 0;
    std::int64_t agree = 0;
    double fraction() const { return compared ? double(agree) / compared : 1.0; }
};
// b0 at level L versus L + 1 on trials unflagged at both levels.
RefinementCheck refinement_agreement(int d, std::int64_t trials, std::uint64_t seed, int level = -1);

// Canonical nesting forest of closed plane polygons: "()" one oval, "()()" two
// disjoint, "(())" nested. Children are sorted so the string is an invariant.
std::string nesting_signature(const std::vector<std::vector<std::array<double, 2>>>& polygons);

struct SigmaSpec {
    std::string name;
    std::string signature;
};
std::vector<SigmaSpec> default_catalog();
SigmaSpec parse_sigma(const std::string& text);  // "1 oval", "2 nested", "2 non-nested" or a signature

struct CensusResult {
    int d = 0;
    std::int64_t trials = 0;
    double epsilon = 0.0;  // ball radius on the unit sphere, radians
    std::int64_t n_balls = 0;
    std::vector<std::string> names;
    std::vector<Estimate> counts;  // per catalog entry, hits per sample
    double mean_b0 = 0.0;
    int max_excess = 0;  // max over samples of (sum of hits - b0); never positive
    double flagged_fraction = 0.0;
};

// Balls of radius epsilon = R / sqrt(d) about a maximal 2 epsilon-separated set of RP^2;
// a ball scores for an entry when the components lying wholly inside it form exactly that configuration.
CensusResult component_census_in_balls(int d, std::int64_t trials, double R, const std::vector<SigmaSpec>& catalog,
                                       std::uint64_t seed);

// Zero set of q(1, x1, x2) in the chart disk |x| < radius about the origin, sampled on a
// square grid of the given spacing. Only closed components lying inside the disk count.
struct DiskTopology {
    int closed_inside = 0;
    std::string signature;
    bool flagged = false;
};
DiskTopology disk_topology(const HomogeneousPolynomial& q, double radius, double spacing);

// q(1, x1, x2), optionally with its gradient, on the square grid
// x = ((j - half) h, (i - half) h) covering the disk plus two cells; row-major index i*m + j.
struct ChartGrid {
    int half = 0;
    int m = 0;
    double spacing = 0.0;
    std::vector<double> value, d1, d2;
    std::array<double, 2> point(int idx) const {
        return {(idx % m - half) * spacing, (idx / m - half) * spacing};
    }
};
ChartGrid chart_grid(const HomogeneousPolynomial& q, double radius, double spacing, bool gradient = false);
// Topology of the zero set of arbitrary values sampled on the grid of g.
DiskTopology disk_topology(const ChartGrid& g, const std::vector<double>& values, double radius);
const Mesh& square_mesh(int m);

}  // namespace rhlab::curves2d
