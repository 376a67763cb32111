#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>

#include "gpinn/mesh.hpp"
#include "gpinn/problems.hpp"

namespace gpinn {

/// Nodal field on a mesh (1 component for heat, 2 for elasticity).
struct FieldSolution {
    std::shared_ptr<const Mesh> mesh;
    Eigen::MatrixXd nodal_values; // components x n_nodes
    std::string solver;
    double h = 0.0;
    std::string timestamp;

    int components() const { return static_cast<int>(nodal_values.rows()); }
    Eigen::VectorXd evaluate(const Vec2& x) const; // P1 interpolation
};

void save_field_json(const FieldSolution& field, const std::string& path);
FieldSolution load_field_json(const std::string& path);
void save_field_csv(const FieldSolution& field, const std::string& path);

// Linear-triangle Galerkin solution of Laplacian(u) = f with the spec's
// Dirichlet/Neumann data; direct sparse Cholesky.
FieldSolution solve_poisson_fem(std::shared_ptr<const Mesh> mesh, const HeatProblemSpec& spec);

FieldSolution solve_elasticity_fem(std::shared_ptr<const Mesh> mesh,
                                   const ElasticityProblemSpec& spec);

// Per-element constant stress (rows sxx, syy, sxy) and its area-weighted
// nodal average.
Eigen::MatrixXd element_stresses(const FieldSolution& displacement,
                                 const ElasticityProblemSpec& spec);
Eigen::MatrixXd nodal_stresses(const FieldSolution& displacement,
                               const ElasticityProblemSpec& spec);

struct ManufacturedPoisson {
    std::function<double(const Vec2&)> u;
    std::function<Eigen::Vector2d(const Vec2&)> grad_u;
    std::function<double(const Vec2&)> f; // = Laplacian(u)
    double dirichlet_value = 0.0;
};

ManufacturedPoisson manufactured_poisson(const std::string& case_id);

struct ErrorStats {
    Eigen::VectorXd pointwise; // RE at each evaluation point
    double max = 0.0;
    double mean = 0.0;
    double l2 = 0.0; // sqrt(mean(RE^2))
};

/// RE(u) = |u - u*| / max|u*| against the reference, per component, plus the
/// Euclidean-norm variant for vector fields.
struct ErrorReport {
    std::vector<ErrorStats> components;
    ErrorStats norm;
    Eigen::MatrixXd points; // 2 x N
    std::string points_descriptor;
};

using FieldFunction = std::function<Eigen::VectorXd(const Vec2&)>;

ErrorReport relative_error(const FieldFunction& candidate, const FieldSolution& reference,
                           const Eigen::MatrixXd& points,
                           const std::string& points_descriptor = "");

} // namespace gpinn
