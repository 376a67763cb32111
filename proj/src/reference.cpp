#include "gpinn/reference.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include <json.hpp>

namespace gpinn {

using nlohmann::json;

Eigen::VectorXd FieldSolution::evaluate(const Vec2& x) const {
    Mesh::Located loc = mesh->locate_point(x);
    const auto& t = mesh->elements[loc.element];
    return loc.barycentric[0] * nodal_values.col(t[0]) +
           loc.barycentric[1] * nodal_values.col(t[1]) +
           loc.barycentric[2] * nodal_values.col(t[2]);
}

void save_field_json(const FieldSolution& field, const std::string& path) {
    json j;
    j["solver"] = field.solver;
    j["h"] = field.h;
    j["timestamp"] = field.timestamp;
    j["components"] = field.components();
    j["nodal_values"] = json::array();
    for (Eigen::Index c = 0; c < field.nodal_values.rows(); ++c) {
        json row = json::array();
        for (Eigen::Index i = 0; i < field.nodal_values.cols(); ++i)
            row.push_back(field.nodal_values(c, i));
        j["nodal_values"].push_back(row);
    }
    j["mesh"] = json::parse(mesh_to_json_string(*field.mesh));
    std::ofstream out(path);
    if (!out) throw UserError("cannot open '" + path + "' for writing");
    out << j.dump() << "\n";
}

FieldSolution load_field_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UserError("file not found: '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(std::string("field JSON parse failure: ") + e.what());
    }
    FieldSolution field;
    field.solver = j.value("solver", "");
    field.h = j.value("h", 0.0);
    field.timestamp = j.value("timestamp", "");
    auto mesh = std::make_shared<Mesh>(mesh_from_json_string(j.at("mesh").dump()));
    field.mesh = mesh;
    const auto& rows = j.at("nodal_values");
    field.nodal_values.resize(rows.size(), mesh->n_nodes());
    for (std::size_t c = 0; c < rows.size(); ++c)
        for (int i = 0; i < mesh->n_nodes(); ++i)
            field.nodal_values(c, i) = rows[c][i].get<double>();
    return field;
}

void save_field_csv(const FieldSolution& field, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw UserError("cannot open '" + path + "' for writing");
    out << "node,x,y";
    for (int c = 0; c < field.components(); ++c) out << ",value" << c;
    out << "\n";
    char buf[64];
    for (int i = 0; i < field.mesh->n_nodes(); ++i) {
        out << i;
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g", field.mesh->nodes[i].x(),
                      field.mesh->nodes[i].y());
        out << buf;
        for (int c = 0; c < field.components(); ++c) {
            std::snprintf(buf, sizeof buf, ",%.17g", field.nodal_values(c, i));
            out << buf;
        }
        out << "\n";
    }
}

namespace {

// P1 basis gradients and area of an element.
struct ElementGeometry {
    Eigen::Matrix<double, 2, 3> grads;
    double area;
};

ElementGeometry element_geometry(const Mesh& mesh, int e) {
    const auto& t = mesh.elements[e];
    const Vec2 &a = mesh.nodes[t[0]], &b = mesh.nodes[t[1]], &c = mesh.nodes[t[2]];
    double det = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    ElementGeometry g;
    g.area = 0.5 * det;
    g.grads.col(0) = Vec2(b.y() - c.y(), c.x() - b.x()) / det;
    g.grads.col(1) = Vec2(c.y() - a.y(), a.x() - c.x()) / det;
    g.grads.col(2) = Vec2(a.y() - b.y(), b.x() - a.x()) / det;
    return g;
}

std::set<int> nodes_with_tag(const Mesh& mesh, BoundaryTag tag) {
    std::set<int> out;
    for (const auto& be : mesh.boundary_edges)
        if (be.tag == tag) {
            out.insert(be.a);
            out.insert(be.b);
        }
    return out;
}

// Reduce, factor, solve, scatter; `fixed` maps dof -> prescribed value.
Eigen::VectorXd solve_constrained(const std::vector<Eigen::Triplet<double>>& triplets, int n_dofs,
                                  Eigen::VectorXd rhs, const std::map<int, double>& fixed,
                                  const std::string& context) {
    std::vector<int> reduced_index(n_dofs, -1);
    int n_free = 0;
    for (int i = 0; i < n_dofs; ++i)
        if (!fixed.count(i)) reduced_index[i] = n_free++;
    if (n_free == 0) {
        Eigen::VectorXd u(n_dofs);
        for (const auto& [dof, val] : fixed) u[dof] = val;
        return u;
    }

    std::vector<Eigen::Triplet<double>> reduced;
    reduced.reserve(triplets.size());
    for (const auto& t : triplets) {
        bool row_fixed = fixed.count(t.row());
        bool col_fixed = fixed.count(t.col());
        if (row_fixed) continue;
        if (col_fixed) {
            rhs[t.row()] -= t.value() * fixed.at(t.col());
        } else {
            reduced.emplace_back(reduced_index[t.row()], reduced_index[t.col()], t.value());
        }
    }

    Eigen::SparseMatrix<double> K(n_free, n_free);
    K.setFromTriplets(reduced.begin(), reduced.end());
    Eigen::VectorXd rhs_free(n_free);
    for (int i = 0; i < n_dofs; ++i)
        if (reduced_index[i] >= 0) rhs_free[reduced_index[i]] = rhs[i];

    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver(K);
    if (solver.info() != Eigen::Success)
        throw NumericalError(context + ": stiffness factorization failed (singular system)");
    Eigen::VectorXd x = solver.solve(rhs_free);

    double resid = (K * x - rhs_free).norm();
    double scale = std::max(1.0, rhs_free.norm());
    if (resid > 1e-10 * scale)
        throw NumericalError(context + ": solve residual " + std::to_string(resid / scale) +
                             " above 1e-10");

    Eigen::VectorXd u(n_dofs);
    for (int i = 0; i < n_dofs; ++i)
        u[i] = reduced_index[i] >= 0 ? x[reduced_index[i]] : fixed.at(i);
    return u;
}

} // namespace

FieldSolution solve_poisson_fem(std::shared_ptr<const Mesh> mesh_ptr,
                                const HeatProblemSpec& spec) {
    const Mesh& mesh = *mesh_ptr;
    auto dirichlet_nodes = nodes_with_tag(mesh, BoundaryTag::dirichlet);
    if (dirichlet_nodes.empty())
        throw UserError("solve_poisson_fem: no dirichlet boundary (singular system)");

    const int n = mesh.n_nodes();
    std::vector<Eigen::Triplet<double>> K;
    K.reserve(9 * mesh.n_elements());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);

    // weak form of Laplacian(u) = f:
    //   int grad u . grad v = -int f v + boundary Neumann term
    static const double qb[3][3] = {{2.0 / 3, 1.0 / 6, 1.0 / 6},
                                    {1.0 / 6, 2.0 / 3, 1.0 / 6},
                                    {1.0 / 6, 1.0 / 6, 2.0 / 3}};
    for (int e = 0; e < mesh.n_elements(); ++e) {
        ElementGeometry g = element_geometry(mesh, e);
        const auto& t = mesh.elements[e];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                K.emplace_back(t[i], t[j], g.area * g.grads.col(i).dot(g.grads.col(j)));
        for (const auto& q : qb) {
            Vec2 x = mesh.point_from_barycentric(e, Eigen::Vector3d(q[0], q[1], q[2]));
            double fq = spec.source(x);
            for (int i = 0; i < 3; ++i) rhs[t[i]] -= (g.area / 3.0) * fq * q[i];
        }
    }
    if (spec.neumann_value != 0.0) {
        for (std::size_t i = 0; i < mesh.boundary_edges.size(); ++i) {
            const BoundaryEdge& be = mesh.boundary_edges[i];
            if (be.tag != BoundaryTag::neumann) continue;
            double len = mesh.edge_length(be);
            rhs[be.a] += 0.5 * len * spec.neumann_value;
            rhs[be.b] += 0.5 * len * spec.neumann_value;
        }
    }

    std::map<int, double> fixed;
    for (int i : dirichlet_nodes) fixed[i] = spec.dirichlet_value;

    Eigen::VectorXd u = solve_constrained(K, n, std::move(rhs), fixed, "solve_poisson_fem");

    FieldSolution sol;
    sol.mesh = std::move(mesh_ptr);
    sol.nodal_values = u.transpose();
    sol.solver = "poisson-fem-p1-cholesky";
    sol.h = mesh.characteristic_h();
    return sol;
}

namespace {

Eigen::Matrix3d constitutive_matrix(const ElasticityProblemSpec& spec) {
    const double E = spec.youngs_modulus, nu = spec.poisson_ratio;
    Eigen::Matrix3d D;
    if (spec.model == ElasticModel::plane_stress) {
        double c = E / (1.0 - nu * nu);
        D << c, c * nu, 0.0, c * nu, c, 0.0, 0.0, 0.0, c * (1.0 - nu) / 2.0;
    } else {
        double c = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
        D << c * (1.0 - nu), c * nu, 0.0, c * nu, c * (1.0 - nu), 0.0, 0.0, 0.0,
            c * (1.0 - 2.0 * nu) / 2.0;
    }
    return D;
}

// strain-displacement matrix (exx, eyy, gxy) = B u_e, u_e = (ux1,uy1,...)
Eigen::Matrix<double, 3, 6> b_matrix(const ElementGeometry& g) {
    Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
    for (int i = 0; i < 3; ++i) {
        B(0, 2 * i) = g.grads(0, i);
        B(1, 2 * i + 1) = g.grads(1, i);
        B(2, 2 * i) = g.grads(1, i);
        B(2, 2 * i + 1) = g.grads(0, i);
    }
    return B;
}

} // namespace

FieldSolution solve_elasticity_fem(std::shared_ptr<const Mesh> mesh_ptr,
                                   const ElasticityProblemSpec& spec) {
    const Mesh& mesh = *mesh_ptr;
    auto dirichlet_nodes = nodes_with_tag(mesh, BoundaryTag::dirichlet);
    if (dirichlet_nodes.empty())
        throw UserError("solve_elasticity_fem: no dirichlet boundary");

    const int n = mesh.n_nodes();
    Eigen::Matrix3d D = constitutive_matrix(spec);
    std::vector<Eigen::Triplet<double>> K;
    K.reserve(36 * mesh.n_elements());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * n);

    for (int e = 0; e < mesh.n_elements(); ++e) {
        ElementGeometry g = element_geometry(mesh, e);
        const auto& t = mesh.elements[e];
        Eigen::Matrix<double, 3, 6> B = b_matrix(g);
        Eigen::Matrix<double, 6, 6> Ke = g.area * B.transpose() * D * B;
        int dofs[6] = {2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1, 2 * t[2], 2 * t[2] + 1};
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) K.emplace_back(dofs[i], dofs[j], Ke(i, j));
    }

    // consistent load vector for the traction on the neumann boundary
    for (const auto& be : mesh.boundary_edges) {
        if (be.tag != BoundaryTag::neumann) continue;
        double len = mesh.edge_length(be);
        for (int node : {be.a, be.b}) {
            rhs[2 * node] += 0.5 * len * spec.traction[0];
            rhs[2 * node + 1] += 0.5 * len * spec.traction[1];
        }
    }

    std::map<int, double> fixed;
    if (spec.dirichlet_mode == DirichletMode::fix_both) {
        for (int i : dirichlet_nodes) {
            fixed[2 * i] = spec.dirichlet_displacement[0];
            fixed[2 * i + 1] = spec.dirichlet_displacement[1];
        }
    } else {
        for (int i : dirichlet_nodes) fixed[2 * i + 1] = spec.dirichlet_displacement[1];
        int pin = *dirichlet_nodes.begin(); // lowest index
        fixed[2 * pin] = spec.dirichlet_displacement[0];
    }

    Eigen::VectorXd u =
        solve_constrained(K, 2 * n, std::move(rhs), fixed, "solve_elasticity_fem");

    FieldSolution sol;
    sol.mesh = std::move(mesh_ptr);
    sol.nodal_values.resize(2, n);
    for (int i = 0; i < n; ++i) {
        sol.nodal_values(0, i) = u[2 * i];
        sol.nodal_values(1, i) = u[2 * i + 1];
    }
    sol.solver = "elasticity-fem-p1-cholesky";
    sol.h = mesh.characteristic_h();
    return sol;
}

Eigen::MatrixXd element_stresses(const FieldSolution& displacement,
                                 const ElasticityProblemSpec& spec) {
    const Mesh& mesh = *displacement.mesh;
    Eigen::Matrix3d D = constitutive_matrix(spec);
    Eigen::MatrixXd out(3, mesh.n_elements());
    for (int e = 0; e < mesh.n_elements(); ++e) {
        ElementGeometry g = element_geometry(mesh, e);
        const auto& t = mesh.elements[e];
        Eigen::Matrix<double, 6, 1> ue;
        for (int i = 0; i < 3; ++i) {
            ue[2 * i] = displacement.nodal_values(0, t[i]);
            ue[2 * i + 1] = displacement.nodal_values(1, t[i]);
        }
        out.col(e) = D * (b_matrix(g) * ue);
    }
    return out;
}

Eigen::MatrixXd nodal_stresses(const FieldSolution& displacement,
                               const ElasticityProblemSpec& spec) {
    const Mesh& mesh = *displacement.mesh;
    Eigen::MatrixXd elem = element_stresses(displacement, spec);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(3, mesh.n_nodes());
    Eigen::VectorXd weight = Eigen::VectorXd::Zero(mesh.n_nodes());
    for (int e = 0; e < mesh.n_elements(); ++e) {
        double area = mesh.element_area(e);
        for (int i : mesh.elements[e]) {
            out.col(i) += area * elem.col(e);
            weight[i] += area;
        }
    }
    for (int i = 0; i < mesh.n_nodes(); ++i) out.col(i) /= weight[i];
    return out;
}

ManufacturedPoisson manufactured_poisson(const std::string& case_id) {
    if (case_id != "sines") throw UserError("manufactured_poisson: unknown case '" + case_id + "'");
    const double pi = std::numbers::pi;
    ManufacturedPoisson m;
    m.u = [pi](const Vec2& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); };
    m.grad_u = [pi](const Vec2& x) {
        return Eigen::Vector2d(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                               pi * std::sin(pi * x.x()) * std::cos(pi * x.y()));
    };
    m.f = [pi](const Vec2& x) {
        return -2.0 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y());
    };
    m.dirichlet_value = 0.0;
    return m;
}

namespace {

ErrorStats stats_from_pointwise(Eigen::VectorXd re) {
    ErrorStats s;
    s.max = re.size() ? re.maxCoeff() : 0.0;
    s.mean = re.size() ? re.mean() : 0.0;
    s.l2 = re.size() ? std::sqrt(re.squaredNorm() / re.size()) : 0.0;
    s.pointwise = std::move(re);
    return s;
}

} // namespace

ErrorReport relative_error(const FieldFunction& candidate, const FieldSolution& reference,
                           const Eigen::MatrixXd& points, const std::string& descriptor) {
    const int n = static_cast<int>(points.cols());
    const int comps = reference.components();
    if (n == 0) throw UserError("relative_error: empty point set");

    Eigen::MatrixXd ref(comps, n), cand(comps, n);
    for (int p = 0; p < n; ++p) {
        Vec2 x(points(0, p), points(1, p));
        ref.col(p) = reference.evaluate(x);
        Eigen::VectorXd c = candidate(x);
        if (c.size() != comps)
            throw UserError("relative_error: candidate component count mismatch");
        cand.col(p) = c;
    }

    ErrorReport report;
    report.points = points;
    report.points_descriptor = descriptor;
    for (int c = 0; c < comps; ++c) {
        double scale = ref.row(c).cwiseAbs().maxCoeff();
        if (scale <= 0.0)
            throw UserError("relative_error: reference component " + std::to_string(c) +
                            " is identically zero over the evaluation points");
        report.components.push_back(
            stats_from_pointwise((cand.row(c) - ref.row(c)).cwiseAbs().transpose() / scale));
    }
    Eigen::VectorXd norm_ref(n), norm_err(n);
    for (int p = 0; p < n; ++p) {
        norm_ref[p] = ref.col(p).norm();
        norm_err[p] = (cand.col(p) - ref.col(p)).norm();
    }
    double scale = norm_ref.maxCoeff();
    if (scale <= 0.0) throw UserError("relative_error: all-zero reference");
    report.norm = stats_from_pointwise(norm_err / scale);
    return report;
}

} // namespace gpinn
