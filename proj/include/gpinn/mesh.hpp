#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gpinn/common.hpp"

namespace gpinn {

using Vec2 = Eigen::Vector2d;

enum class BoundaryTag { dirichlet, neumann, crack_top, crack_bottom, free_edge };

std::string to_string(BoundaryTag tag);
BoundaryTag boundary_tag_from_string(const std::string& s);

struct BoundaryEdge {
    int a = -1;
    int b = -1;
    BoundaryTag tag = BoundaryTag::free_edge;
};

/// 2D triangular mesh. Elements are counter-clockwise node triples; boundary
/// edges each belong to exactly one element and carry an outward normal.
/// Crack faces are duplicated node lines: the two flanks share coordinates
/// but no node indices and no elements.
class Mesh {
public:
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> elements;
    std::vector<BoundaryEdge> boundary_edges;

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_elements() const { return static_cast<int>(elements.size()); }

    double signed_area(int e) const;
    double element_area(int e) const { return signed_area(e); }
    Vec2 centroid(int e) const;
    double total_area() const;
    double edge_length(const BoundaryEdge& be) const;
    Vec2 edge_midpoint(const BoundaryEdge& be) const;

    // Outward unit normal of a boundary edge (points away from the owning
    // element's centroid).
    Vec2 outward_normal(int boundary_edge_index) const;
    int owning_element(int boundary_edge_index) const;

    // Mean edge length over all element edges; the background grid and
    // neighborhood queries are sized from this.
    double characteristic_h() const;

    Eigen::Vector4d bounding_box() const; // (xmin, ymin, xmax, ymax)

    // Checks all type invariants; throws InvariantError with the offending
    // index on failure. Also builds the acceleration structures, so call it
    // once after construction and before any query.
    void finalize();
    bool finalized() const { return finalized_; }

    // Geometric twin pairs across crack faces: (top node, bottom node) with
    // equal coordinates. Empty for uncracked meshes.
    const std::vector<std::pair<int, int>>& crack_twins() const { return crack_twins_; }

    struct Located {
        int element = -1;
        Eigen::Vector3d barycentric = Eigen::Vector3d::Zero();
        bool extrapolated = false;
    };

    // Point location. Inside: barycentric coords all >= -1e-12 summing to 1.
    // Outside the hull: nearest element with clamped coordinates and the
    // extrapolated flag set.
    Located locate_point(const Vec2& x) const;

    // Exhaustive scan over all elements; oracle for locate_point.
    Located locate_point_brute_force(const Vec2& x) const;

    Eigen::Vector3d barycentric(int e, const Vec2& x) const;
    Vec2 point_from_barycentric(int e, const Eigen::Vector3d& bary) const;

private:
    friend Mesh generate_domain(const struct GeometryConfig&, const std::string&);
    friend class StructuredBuilder;

    void build_background_grid();
    void validate() const;

    bool finalized_ = false;
    std::vector<std::pair<int, int>> crack_twins_;
    std::vector<int> boundary_owner_; // element per boundary edge

    // Uniform background grid (cell size 2h) of candidate element lists.
    double grid_cell_ = 0.0;
    int grid_nx_ = 0, grid_ny_ = 0;
    Vec2 grid_origin_ = Vec2::Zero();
    std::vector<std::vector<int>> grid_cells_;
};

struct QuadratureSet {
    std::vector<Vec2> points;
    std::vector<double> weights;
    std::vector<int> owner; // element index (domain) or boundary-edge index

    double total_weight() const;
};

struct MeshQuadrature {
    QuadratureSet domain;
    std::map<BoundaryTag, QuadratureSet> boundary;
};

// domain_order 1: centroid rule (exact for linears); 3: three-point rule
// (exact for quadratics). boundary_order 1 or 2: Gauss-Legendre on edges.
MeshQuadrature quadrature(const Mesh& mesh, int domain_order, int boundary_order);

enum class CrackMouth { left, right, bottom, top };

/// Parameters of the built-in domains. The paper's figures fix the topology
/// only; every dimension here is a config default and can be overridden.
struct GeometryConfig {
    double h = 0.05;

    // "house": unit square with two wall slits and a heated disc
    double house_side = 1.0;
    double wall_thickness = 0.04;
    // wall slit segments (midlines); thickness is centered on them
    Vec2 left_wall_from{0.33, 0.0};
    Vec2 left_wall_to{0.33, 0.7};
    Vec2 right_wall_from{0.66, 0.3};
    Vec2 right_wall_to{0.66, 1.0};
    Vec2 source_center{0.1, 0.85};
    double source_radius = 0.08;
    double window_x0 = 0.35;
    double window_x1 = 0.65;

    // single-edge-crack plate
    double plate_width = 1.0;
    double plate_height = 1.0;
    Vec2 crack_tip{0.5, 0.5};
    CrackMouth crack_mouth = CrackMouth::left;

    // extra grid lines geometrically graded toward the crack tip until the
    // local spacing reaches h / tip_refinement (1 = uniform)
    double tip_refinement = 1.0;

    void validate(const std::string& kind) const;
};

// kind: "house", "crack_plate" or "unit_square".
Mesh generate_domain(const GeometryConfig& config, const std::string& kind);

// Axis-aligned rectangles occupied by the house walls (midline +- t/2).
std::vector<Eigen::Vector4d> wall_rectangles(const GeometryConfig& config);
double distance_to_rectangle(const Vec2& p, const Eigen::Vector4d& rect);

Mesh load_mesh(const std::string& path, const std::string& format);
Mesh load_mesh(const std::string& path); // format from extension (.json / .msh)
void save_mesh_json(const Mesh& mesh, const std::string& path);
Mesh mesh_from_json_string(const std::string& text);
std::string mesh_to_json_string(const Mesh& mesh);

} // namespace gpinn
