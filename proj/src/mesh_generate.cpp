#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "gpinn/mesh.hpp"

namespace gpinn {

namespace {

constexpr double kTol = 1e-9;

// Uniform grid lines on [lo, hi] with protected values snapped in exactly.
// Uniform lines hugging a protected line (or falling inside a refinement
// window) are dropped to avoid sliver cells.
std::vector<double> axis_lines(double lo, double hi, double h,
                               const std::vector<double>& snaps,
                               const std::vector<double>& refine_at, double h_min) {
    int n = std::max(1, static_cast<int>(std::llround((hi - lo) / h)));
    double step = (hi - lo) / n;

    struct Line { double c; bool keep; };
    std::vector<Line> lines;
    for (int i = 0; i <= n; ++i) lines.push_back({lo + i * step, i == 0 || i == n});

    auto add_protected = [&](double v) {
        if (v <= lo + kTol || v >= hi - kTol) return;
        for (auto& l : lines)
            if (std::abs(l.c - v) < kTol) { l.c = v; l.keep = true; return; }
        lines.push_back({v, true});
    };

    for (double s : snaps) add_protected(s);
    for (double r : refine_at) {
        if (r < lo - kTol || r > hi + kTol) continue;
        add_protected(r);
        for (double d = h_min; d < h - kTol; d *= 2.0) {
            add_protected(r - d);
            add_protected(r + d);
        }
    }

    std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.c < b.c; });

    std::vector<double> out;
    for (const auto& l : lines) {
        if (!l.keep) {
            double nearest = std::numeric_limits<double>::max();
            for (const auto& p : lines)
                if (p.keep) nearest = std::min(nearest, std::abs(p.c - l.c));
            bool in_refined_window = false;
            for (double r : refine_at)
                if (std::abs(l.c - r) < 0.99 * step) in_refined_window = true;
            if (nearest < 0.4 * step || in_refined_window) continue;
        }
        if (!out.empty() && l.c - out.back() < kTol) continue;
        out.push_back(l.c);
    }
    return out;
}

struct GridMesh {
    std::vector<double> xs, ys;
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> elements;
};

// Tensor-product grid split into two CCW triangles per kept cell, with unused
// nodes compacted away.
GridMesh build_grid(const std::vector<double>& xs, const std::vector<double>& ys,
                    const std::function<bool(const Vec2&)>& keep_cell) {
    const int nx = static_cast<int>(xs.size());
    const int ny = static_cast<int>(ys.size());

    std::vector<int> remap(static_cast<std::size_t>(nx) * ny, -1);
    std::vector<std::array<int, 3>> raw_elements;
    auto id = [&](int ix, int iy) { return iy * nx + ix; };

    for (int iy = 0; iy + 1 < ny; ++iy) {
        for (int ix = 0; ix + 1 < nx; ++ix) {
            Vec2 c(0.5 * (xs[ix] + xs[ix + 1]), 0.5 * (ys[iy] + ys[iy + 1]));
            if (!keep_cell(c)) continue;
            int n00 = id(ix, iy), n10 = id(ix + 1, iy);
            int n11 = id(ix + 1, iy + 1), n01 = id(ix, iy + 1);
            raw_elements.push_back({n00, n10, n11});
            raw_elements.push_back({n00, n11, n01});
        }
    }

    GridMesh g;
    g.xs = xs;
    g.ys = ys;
    int next = 0;
    for (auto& t : raw_elements)
        for (int& v : t)
            if (remap[v] == -1) {
                remap[v] = next++;
                g.nodes.emplace_back(xs[v % nx], ys[v / nx]);
            }
    for (auto& t : raw_elements) g.elements.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
    return g;
}

// Edges used by exactly one element, in element order and element-local
// orientation.
std::vector<std::pair<std::pair<int, int>, int>> free_edges(
    const std::vector<std::array<int, 3>>& elements) {
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : elements)
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            count[{std::min(a, b), std::max(a, b)}]++;
        }
    std::vector<std::pair<std::pair<int, int>, int>> out;
    for (int e = 0; e < static_cast<int>(elements.size()); ++e) {
        const auto& t = elements[e];
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            if (count[{std::min(a, b), std::max(a, b)}] == 1) out.push_back({{a, b}, e});
        }
    }
    return out;
}

} // namespace

Mesh generate_domain(const GeometryConfig& config, const std::string& kind) {
    if (kind != "house" && kind != "crack_plate" && kind != "unit_square")
        throw UserError("unknown domain kind '" + kind + "'");
    config.validate(kind);

    Mesh mesh;

    if (kind == "unit_square") {
        auto xs = axis_lines(0.0, 1.0, config.h, {}, {}, config.h);
        GridMesh g = build_grid(xs, xs, [](const Vec2&) { return true; });
        mesh.nodes = std::move(g.nodes);
        mesh.elements = std::move(g.elements);
        for (const auto& [edge, elem] : free_edges(mesh.elements))
            mesh.boundary_edges.push_back({edge.first, edge.second, BoundaryTag::dirichlet});
    } else if (kind == "house") {
        const double side = config.house_side;
        auto rects = wall_rectangles(config);
        std::vector<double> xsnaps{config.window_x0, config.window_x1};
        std::vector<double> ysnaps;
        for (const auto& r : rects) {
            xsnaps.push_back(r[0]);
            xsnaps.push_back(r[2]);
            ysnaps.push_back(r[1]);
            ysnaps.push_back(r[3]);
        }
        auto xs = axis_lines(0.0, side, config.h, xsnaps, {}, config.h);
        auto ys = axis_lines(0.0, side, config.h, ysnaps, {}, config.h);
        GridMesh g = build_grid(xs, ys, [&](const Vec2& c) {
            for (const auto& r : rects)
                if (c.x() > r[0] + kTol && c.x() < r[2] - kTol && c.y() > r[1] + kTol &&
                    c.y() < r[3] - kTol)
                    return false;
            return true;
        });
        mesh.nodes = std::move(g.nodes);
        mesh.elements = std::move(g.elements);
        for (const auto& [edge, elem] : free_edges(mesh.elements)) {
            Vec2 mid = 0.5 * (mesh.nodes[edge.first] + mesh.nodes[edge.second]);
            BoundaryTag tag = BoundaryTag::neumann;
            if (std::abs(mid.y()) < kTol && mid.x() > config.window_x0 - kTol &&
                mid.x() < config.window_x1 + kTol)
                tag = BoundaryTag::dirichlet;
            mesh.boundary_edges.push_back({edge.first, edge.second, tag});
        }
    } else { // crack_plate
        const double W = config.plate_width, H = config.plate_height;
        const Vec2 tip = config.crack_tip;
        const bool horizontal =
            config.crack_mouth == CrackMouth::left || config.crack_mouth == CrackMouth::right;
        double crack_len = 0.0;
        switch (config.crack_mouth) {
            case CrackMouth::left: crack_len = tip.x(); break;
            case CrackMouth::right: crack_len = W - tip.x(); break;
            case CrackMouth::bottom: crack_len = tip.y(); break;
            case CrackMouth::top: crack_len = H - tip.y(); break;
        }
        const bool cracked = crack_len > kTol;

        std::vector<double> xsnaps, ysnaps, xrefine, yrefine;
        if (cracked) {
            xsnaps.push_back(tip.x());
            ysnaps.push_back(tip.y());
            if (config.tip_refinement > 1.0) {
                xrefine.push_back(tip.x());
                yrefine.push_back(tip.y());
            }
        }
        const double h_min = config.h / std::max(1.0, config.tip_refinement);
        auto xs = axis_lines(0.0, W, config.h, xsnaps, xrefine, h_min);
        auto ys = axis_lines(0.0, H, config.h, ysnaps, yrefine, h_min);
        GridMesh g = build_grid(xs, ys, [](const Vec2&) { return true; });
        mesh.nodes = std::move(g.nodes);
        mesh.elements = std::move(g.elements);

        if (cracked) {
            // on-crack predicate: strictly between mouth and tip (tip excluded)
            auto on_crack_line = [&](const Vec2& p) {
                if (horizontal) {
                    if (std::abs(p.y() - tip.y()) > kTol) return false;
                    return config.crack_mouth == CrackMouth::left ? p.x() < tip.x() - kTol
                                                                  : p.x() > tip.x() + kTol;
                }
                if (std::abs(p.x() - tip.x()) > kTol) return false;
                return config.crack_mouth == CrackMouth::bottom ? p.y() < tip.y() - kTol
                                                                : p.y() > tip.y() + kTol;
            };
            // positive side gets the duplicated nodes and the crack_top tag
            auto positive_side = [&](const Vec2& c) {
                return horizontal ? c.y() > tip.y() : c.x() > tip.x();
            };

            std::map<int, int> dup;
            for (int v = 0; v < mesh.n_nodes(); ++v) {
                if (!on_crack_line(mesh.nodes[v])) continue;
                dup[v] = mesh.n_nodes() + static_cast<int>(dup.size());
            }
            int base = mesh.n_nodes();
            mesh.nodes.resize(base + dup.size());
            for (const auto& [orig, copy] : dup) {
                mesh.nodes[copy] = mesh.nodes[orig];
                mesh.crack_twins_.push_back({copy, orig});
            }
            for (auto& t : mesh.elements) {
                Vec2 c = (mesh.nodes[t[0]] + mesh.nodes[t[1]] + mesh.nodes[t[2]]) / 3.0;
                if (!positive_side(c)) continue;
                for (int& v : t) {
                    auto it = dup.find(v);
                    if (it != dup.end()) v = it->second;
                }
            }
        }

        auto on_crack_face = [&](const Vec2& mid) {
            if (!cracked) return false;
            if (horizontal) {
                if (std::abs(mid.y() - tip.y()) > kTol) return false;
                return config.crack_mouth == CrackMouth::left ? mid.x() < tip.x() + kTol
                                                              : mid.x() > tip.x() - kTol;
            }
            if (std::abs(mid.x() - tip.x()) > kTol) return false;
            return config.crack_mouth == CrackMouth::bottom ? mid.y() < tip.y() + kTol
                                                            : mid.y() > tip.y() - kTol;
        };

        for (const auto& [edge, elem] : free_edges(mesh.elements)) {
            Vec2 mid = 0.5 * (mesh.nodes[edge.first] + mesh.nodes[edge.second]);
            Vec2 c = (mesh.nodes[mesh.elements[elem][0]] + mesh.nodes[mesh.elements[elem][1]] +
                      mesh.nodes[mesh.elements[elem][2]]) /
                     3.0;
            BoundaryTag tag;
            if (on_crack_face(mid)) {
                bool pos = horizontal ? c.y() > tip.y() : c.x() > tip.x();
                tag = pos ? BoundaryTag::crack_top : BoundaryTag::crack_bottom;
            } else if (std::abs(mid.y() - H) < kTol) {
                tag = BoundaryTag::neumann; // traction edge
            } else if (std::abs(mid.y()) < kTol) {
                tag = BoundaryTag::dirichlet;
            } else {
                tag = BoundaryTag::free_edge;
            }
            mesh.boundary_edges.push_back({edge.first, edge.second, tag});
        }
    }

    mesh.finalize();
    return mesh;
}

} // namespace gpinn
