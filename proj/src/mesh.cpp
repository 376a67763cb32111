#include "gpinn/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace gpinn {

std::string to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::dirichlet: return "dirichlet";
        case BoundaryTag::neumann: return "neumann";
        case BoundaryTag::crack_top: return "crack_top";
        case BoundaryTag::crack_bottom: return "crack_bottom";
        case BoundaryTag::free_edge: return "free";
    }
    return "free";
}

BoundaryTag boundary_tag_from_string(const std::string& s) {
    if (s == "dirichlet") return BoundaryTag::dirichlet;
    if (s == "neumann") return BoundaryTag::neumann;
    if (s == "crack_top") return BoundaryTag::crack_top;
    if (s == "crack_bottom") return BoundaryTag::crack_bottom;
    if (s == "free") return BoundaryTag::free_edge;
    throw ParseError("unknown boundary tag '" + s + "'");
}

double Mesh::signed_area(int e) const {
    const auto& t = elements[e];
    const Vec2& a = nodes[t[0]];
    const Vec2& b = nodes[t[1]];
    const Vec2& c = nodes[t[2]];
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

Vec2 Mesh::centroid(int e) const {
    const auto& t = elements[e];
    return (nodes[t[0]] + nodes[t[1]] + nodes[t[2]]) / 3.0;
}

double Mesh::total_area() const {
    double s = 0.0;
    for (int e = 0; e < n_elements(); ++e) s += signed_area(e);
    return s;
}

double Mesh::edge_length(const BoundaryEdge& be) const {
    return (nodes[be.b] - nodes[be.a]).norm();
}

Vec2 Mesh::edge_midpoint(const BoundaryEdge& be) const {
    return 0.5 * (nodes[be.a] + nodes[be.b]);
}

int Mesh::owning_element(int i) const { return boundary_owner_[i]; }

Vec2 Mesh::outward_normal(int i) const {
    const BoundaryEdge& be = boundary_edges[i];
    Vec2 t = nodes[be.b] - nodes[be.a];
    Vec2 n(t.y(), -t.x());
    n.normalize();
    Vec2 toward = edge_midpoint(be) - centroid(boundary_owner_[i]);
    if (n.dot(toward) < 0.0) n = -n;
    return n;
}

double Mesh::characteristic_h() const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& t : elements) {
        sum += (nodes[t[0]] - nodes[t[1]]).norm();
        sum += (nodes[t[1]] - nodes[t[2]]).norm();
        sum += (nodes[t[2]] - nodes[t[0]]).norm();
        count += 3;
    }
    return count ? sum / static_cast<double>(count) : 1.0;
}

Eigen::Vector4d Mesh::bounding_box() const {
    Eigen::Vector4d bb;
    bb << std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
        std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest();
    for (const auto& p : nodes) {
        bb[0] = std::min(bb[0], p.x());
        bb[1] = std::min(bb[1], p.y());
        bb[2] = std::max(bb[2], p.x());
        bb[3] = std::max(bb[3], p.y());
    }
    return bb;
}

namespace {

// Map (element index, undirected edge) pairs for boundary ownership checks.
std::map<std::pair<int, int>, std::vector<int>> edge_to_elements(const Mesh& m) {
    std::map<std::pair<int, int>, std::vector<int>> owners;
    for (int e = 0; e < m.n_elements(); ++e) {
        const auto& t = m.elements[e];
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            owners[{std::min(a, b), std::max(a, b)}].push_back(e);
        }
    }
    return owners;
}

} // namespace

void Mesh::validate() const {
    const int nn = n_nodes();
    for (int e = 0; e < n_elements(); ++e) {
        for (int k = 0; k < 3; ++k) {
            if (elements[e][k] < 0 || elements[e][k] >= nn)
                throw InvariantError("element " + std::to_string(e) + " references node " +
                                     std::to_string(elements[e][k]) + " out of range");
        }
        if (signed_area(e) <= 0.0)
            throw InvariantError("negative element area at element " + std::to_string(e));
    }

    auto owners = edge_to_elements(*this);
    for (std::size_t i = 0; i < boundary_edges.size(); ++i) {
        const BoundaryEdge& be = boundary_edges[i];
        if (be.a < 0 || be.a >= nn || be.b < 0 || be.b >= nn)
            throw InvariantError("boundary edge " + std::to_string(i) + " node index out of range");
        auto it = owners.find({std::min(be.a, be.b), std::max(be.a, be.b)});
        if (it == owners.end())
            throw InvariantError("dangling boundary edge " + std::to_string(i) +
                                 " (no owning element)");
        if (it->second.size() != 1)
            throw InvariantError("boundary edge " + std::to_string(i) + " shared by " +
                                 std::to_string(it->second.size()) + " elements");
    }

    // crack faces: duplicated nodes, disjoint index sets
    std::set<int> top, bottom;
    for (const auto& be : boundary_edges) {
        if (be.tag == BoundaryTag::crack_top) { top.insert(be.a); top.insert(be.b); }
        if (be.tag == BoundaryTag::crack_bottom) { bottom.insert(be.a); bottom.insert(be.b); }
    }
    for (const auto& [t, b] : crack_twins_) {
        if (t == b) throw InvariantError("crack twin pair maps a node to itself");
        if ((nodes[t] - nodes[b]).norm() > 1e-12)
            throw InvariantError("crack twin pair has mismatched coordinates");
    }
    if (!top.empty()) {
        std::vector<int> both;
        std::set_intersection(top.begin(), top.end(), bottom.begin(), bottom.end(),
                              std::back_inserter(both));
        // the crack tip is shared by both flank edges; duplicated (twin) nodes must not be
        std::set<int> twins;
        for (const auto& [t, b] : crack_twins_) { twins.insert(t); twins.insert(b); }
        for (int v : both)
            if (twins.count(v))
                throw InvariantError("duplicated crack node " + std::to_string(v) +
                                     " appears on both flanks");
    }
}

void Mesh::build_background_grid() {
    boundary_owner_.assign(boundary_edges.size(), -1);
    auto owners = edge_to_elements(*this);
    for (std::size_t i = 0; i < boundary_edges.size(); ++i) {
        const BoundaryEdge& be = boundary_edges[i];
        boundary_owner_[i] = owners[{std::min(be.a, be.b), std::max(be.a, be.b)}][0];
    }

    const double h = characteristic_h();
    grid_cell_ = 2.0 * h;
    Eigen::Vector4d bb = bounding_box();
    grid_origin_ = Vec2(bb[0], bb[1]);
    grid_nx_ = std::max(1, static_cast<int>(std::ceil((bb[2] - bb[0]) / grid_cell_)));
    grid_ny_ = std::max(1, static_cast<int>(std::ceil((bb[3] - bb[1]) / grid_cell_)));
    grid_cells_.assign(static_cast<std::size_t>(grid_nx_) * grid_ny_, {});

    auto cell_range = [&](double lo, double hi, int n, double origin) {
        int i0 = std::clamp(static_cast<int>(std::floor((lo - origin) / grid_cell_)), 0, n - 1);
        int i1 = std::clamp(static_cast<int>(std::floor((hi - origin) / grid_cell_)), 0, n - 1);
        return std::pair<int, int>(i0, i1);
    };
    for (int e = 0; e < n_elements(); ++e) {
        const auto& t = elements[e];
        double xmin = std::min({nodes[t[0]].x(), nodes[t[1]].x(), nodes[t[2]].x()});
        double xmax = std::max({nodes[t[0]].x(), nodes[t[1]].x(), nodes[t[2]].x()});
        double ymin = std::min({nodes[t[0]].y(), nodes[t[1]].y(), nodes[t[2]].y()});
        double ymax = std::max({nodes[t[0]].y(), nodes[t[1]].y(), nodes[t[2]].y()});
        auto [ix0, ix1] = cell_range(xmin, xmax, grid_nx_, grid_origin_.x());
        auto [iy0, iy1] = cell_range(ymin, ymax, grid_ny_, grid_origin_.y());
        for (int iy = iy0; iy <= iy1; ++iy)
            for (int ix = ix0; ix <= ix1; ++ix)
                grid_cells_[static_cast<std::size_t>(iy) * grid_nx_ + ix].push_back(e);
    }
}

void Mesh::finalize() {
    if (crack_twins_.empty()) {
        // loaded meshes carry twins only implicitly; recover them by matching
        // coordinates between the two flank node sets (the shared tip pairs
        // with itself and is skipped)
        std::set<int> top, bottom;
        for (const auto& be : boundary_edges) {
            if (be.tag == BoundaryTag::crack_top) { top.insert(be.a); top.insert(be.b); }
            if (be.tag == BoundaryTag::crack_bottom) { bottom.insert(be.a); bottom.insert(be.b); }
        }
        for (int t : top)
            for (int b : bottom)
                if (t != b && (nodes[t] - nodes[b]).norm() < 1e-12)
                    crack_twins_.push_back({t, b});
    }
    validate();
    build_background_grid();
    finalized_ = true;
}

Eigen::Vector3d Mesh::barycentric(int e, const Vec2& x) const {
    const auto& t = elements[e];
    const Vec2& a = nodes[t[0]];
    const Vec2& b = nodes[t[1]];
    const Vec2& c = nodes[t[2]];
    double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    double l1 = ((b.x() - x.x()) * (c.y() - x.y()) - (c.x() - x.x()) * (b.y() - x.y())) / det;
    double l2 = ((c.x() - x.x()) * (a.y() - x.y()) - (a.x() - x.x()) * (c.y() - x.y())) / det;
    return {l1, l2, 1.0 - l1 - l2};
}

Vec2 Mesh::point_from_barycentric(int e, const Eigen::Vector3d& bary) const {
    const auto& t = elements[e];
    return bary[0] * nodes[t[0]] + bary[1] * nodes[t[1]] + bary[2] * nodes[t[2]];
}

namespace {

constexpr double kInsideTol = 1e-12;

// Closest point on triangle (a,b,c) to p, returned in barycentric coordinates.
Eigen::Vector3d closest_point_barycentric(const Vec2& a, const Vec2& b, const Vec2& c,
                                          const Vec2& p) {
    // Ericson, Real-Time Collision Detection, 5.1.5
    Vec2 ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return {1.0, 0.0, 0.0};

    Vec2 bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return {0.0, 1.0, 0.0};

    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        double v = d1 / (d1 - d3);
        return {1.0 - v, v, 0.0};
    }

    Vec2 cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return {0.0, 0.0, 1.0};

    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        double w = d2 / (d2 - d6);
        return {1.0 - w, 0.0, w};
    }

    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return {0.0, 1.0 - w, w};
    }

    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    return {1.0 - v - w, v, w};
}

} // namespace

Mesh::Located Mesh::locate_point(const Vec2& x) const {
    int ix = std::clamp(static_cast<int>(std::floor((x.x() - grid_origin_.x()) / grid_cell_)), 0,
                        grid_nx_ - 1);
    int iy = std::clamp(static_cast<int>(std::floor((x.y() - grid_origin_.y()) / grid_cell_)), 0,
                        grid_ny_ - 1);

    // expanding ring search around the home cell
    const int max_ring = std::max(grid_nx_, grid_ny_);
    int best_elem = -1;
    double best_dist = std::numeric_limits<double>::max();
    Eigen::Vector3d best_bary = Eigen::Vector3d::Zero();

    for (int ring = 0; ring <= max_ring; ++ring) {
        bool any_cell = false;
        for (int cy = iy - ring; cy <= iy + ring; ++cy) {
            if (cy < 0 || cy >= grid_ny_) continue;
            for (int cx = ix - ring; cx <= ix + ring; ++cx) {
                if (cx < 0 || cx >= grid_nx_) continue;
                if (std::max(std::abs(cx - ix), std::abs(cy - iy)) != ring) continue;
                any_cell = true;
                for (int e : grid_cells_[static_cast<std::size_t>(cy) * grid_nx_ + cx]) {
                    Eigen::Vector3d bary = barycentric(e, x);
                    if (bary.minCoeff() >= -kInsideTol) {
                        // containment wins; lowest element index on shared edges
                        if (best_dist > 0.0) { best_elem = e; best_bary = bary; best_dist = 0.0; }
                        else if (e < best_elem) { best_elem = e; best_bary = bary; }
                        continue;
                    }
                    const auto& t = elements[e];
                    Eigen::Vector3d cb = closest_point_barycentric(nodes[t[0]], nodes[t[1]],
                                                                   nodes[t[2]], x);
                    double dist = (point_from_barycentric(e, cb) - x).norm();
                    if (dist < best_dist - 1e-15 ||
                        (std::abs(dist - best_dist) <= 1e-15 && e < best_elem)) {
                        best_dist = dist;
                        best_elem = e;
                        best_bary = cb;
                    }
                }
            }
        }
        if (best_dist == 0.0) break;
        // cells at Chebyshev ring k are at least (k-1)*cell away from the
        // query, so once the best distance undercuts that bound no unseen
        // element can win
        if (best_elem >= 0 && best_dist <= (ring - 1) * grid_cell_) break;
        if (!any_cell && ring > 0) break;
    }

    Located out;
    out.element = best_elem;
    out.barycentric = best_bary;
    out.extrapolated = best_dist > 0.0;
    return out;
}

Mesh::Located Mesh::locate_point_brute_force(const Vec2& x) const {
    Located out;
    double best_dist = std::numeric_limits<double>::max();
    for (int e = 0; e < n_elements(); ++e) {
        Eigen::Vector3d bary = barycentric(e, x);
        if (bary.minCoeff() >= -kInsideTol) {
            out.element = e;
            out.barycentric = bary;
            out.extrapolated = false;
            return out;
        }
        const auto& t = elements[e];
        Eigen::Vector3d cb = closest_point_barycentric(nodes[t[0]], nodes[t[1]], nodes[t[2]], x);
        double dist = (point_from_barycentric(e, cb) - x).norm();
        if (dist < best_dist - 1e-15) {
            best_dist = dist;
            out.element = e;
            out.barycentric = cb;
        }
    }
    out.extrapolated = true;
    return out;
}

double QuadratureSet::total_weight() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

MeshQuadrature quadrature(const Mesh& mesh, int domain_order, int boundary_order) {
    if (domain_order != 1 && domain_order != 3)
        throw UserError("domain quadrature order must be 1 or 3");
    if (boundary_order != 1 && boundary_order != 2)
        throw UserError("boundary quadrature order must be 1 or 2");

    MeshQuadrature q;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        double area = mesh.element_area(e);
        if (domain_order == 1) {
            q.domain.points.push_back(mesh.centroid(e));
            q.domain.weights.push_back(area);
            q.domain.owner.push_back(e);
        } else {
            // degree-2 rule: barycentric (2/3, 1/6, 1/6) permutations
            static const double coords[3][3] = {
                {2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0},
                {1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0},
                {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0},
            };
            for (const auto& c : coords) {
                q.domain.points.push_back(
                    mesh.point_from_barycentric(e, Eigen::Vector3d(c[0], c[1], c[2])));
                q.domain.weights.push_back(area / 3.0);
                q.domain.owner.push_back(e);
            }
        }
    }

    for (std::size_t i = 0; i < mesh.boundary_edges.size(); ++i) {
        const BoundaryEdge& be = mesh.boundary_edges[i];
        QuadratureSet& set = q.boundary[be.tag];
        const Vec2& a = mesh.nodes[be.a];
        const Vec2& b = mesh.nodes[be.b];
        double len = (b - a).norm();
        if (boundary_order == 1) {
            set.points.push_back(0.5 * (a + b));
            set.weights.push_back(len);
            set.owner.push_back(static_cast<int>(i));
        } else {
            const double xi = 1.0 / std::sqrt(3.0);
            for (double s : {-xi, xi}) {
                set.points.push_back(0.5 * (a + b) + 0.5 * s * (b - a));
                set.weights.push_back(0.5 * len);
                set.owner.push_back(static_cast<int>(i));
            }
        }
    }
    return q;
}

std::vector<Eigen::Vector4d> wall_rectangles(const GeometryConfig& c) {
    const double t = 0.5 * c.wall_thickness;
    std::vector<Eigen::Vector4d> rects;
    auto add = [&](const Vec2& from, const Vec2& to) {
        double x0 = std::min(from.x(), to.x()), x1 = std::max(from.x(), to.x());
        double y0 = std::min(from.y(), to.y()), y1 = std::max(from.y(), to.y());
        if (x0 == x1) { x0 -= t; x1 += t; } else { y0 -= t; y1 += t; }
        rects.emplace_back(x0, y0, x1, y1);
    };
    add(c.left_wall_from, c.left_wall_to);
    add(c.right_wall_from, c.right_wall_to);
    return rects;
}

double distance_to_rectangle(const Vec2& p, const Eigen::Vector4d& r) {
    double dx = std::max({r[0] - p.x(), 0.0, p.x() - r[2]});
    double dy = std::max({r[1] - p.y(), 0.0, p.y() - r[3]});
    return std::hypot(dx, dy);
}

void GeometryConfig::validate(const std::string& kind) const {
    if (h <= 0.0) throw UserError("geometry: h must be > 0");
    if (kind == "house") {
        for (const auto& r : wall_rectangles(*this)) {
            if (distance_to_rectangle(source_center, r) <= source_radius)
                throw UserError("geometry: wall slit crosses the source disc");
        }
        if (source_center.x() - source_radius <= 0.0 ||
            source_center.x() + source_radius >= house_side ||
            source_center.y() - source_radius <= 0.0 ||
            source_center.y() + source_radius >= house_side)
            throw UserError("geometry: source disc must lie strictly inside the house");
        if (!(window_x0 < window_x1))
            throw UserError("geometry: window segment is empty");
    } else if (kind == "crack_plate") {
        bool horizontal = crack_mouth == CrackMouth::left || crack_mouth == CrackMouth::right;
        double len = 0.0;
        if (crack_mouth == CrackMouth::left) len = crack_tip.x();
        if (crack_mouth == CrackMouth::right) len = plate_width - crack_tip.x();
        if (crack_mouth == CrackMouth::bottom) len = crack_tip.y();
        if (crack_mouth == CrackMouth::top) len = plate_height - crack_tip.y();
        double span = horizontal ? plate_width : plate_height;
        if (len < 0.0) throw UserError("geometry: crack tip lies outside the plate");
        if (len >= span) throw UserError("geometry: crack length >= plate width");
        if (len > 0.0) {
            if (crack_tip.x() < 0.0 || crack_tip.x() > plate_width || crack_tip.y() <= 0.0 ||
                crack_tip.y() >= plate_height)
                throw UserError("geometry: crack tip must lie strictly inside the plate");
        }
    }
}

} // namespace gpinn
