#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "gpinn/embedding.hpp"
#include "gpinn/loss.hpp"
#include "gpinn/mesh.hpp"
#include "gpinn/nn.hpp"

namespace gpinn {

/// Poisson heat problem: Laplacian(u) = f in Omega, u = dirichlet_value on
/// the window, grad(u).n = neumann_value elsewhere.
struct HeatProblemSpec {
    std::function<double(const Vec2&)> source = [](const Vec2&) { return 0.0; };
    double dirichlet_value = 0.0;
    double neumann_value = 0.0;
};

HeatProblemSpec disc_source_spec(const Vec2& center, double radius, double s0,
                                 double dirichlet_value = 0.0, double neumann_value = 0.0);

enum class ElasticModel { plane_stress, plane_strain };
enum class DirichletMode { fix_both, fix_y_pin_x };

struct ElasticityProblemSpec {
    double youngs_modulus = 1.0;
    double poisson_ratio = 0.3;
    ElasticModel model = ElasticModel::plane_stress;
    Eigen::Vector2d traction{0.0, 1.0};          // on the neumann-tagged boundary
    Eigen::Vector2d dirichlet_displacement{0.0, 0.0};
    // fix_both clamps both components on the dirichlet boundary; fix_y_pin_x
    // clamps the y component there and pins x at one anchor node (patch test)
    DirichletMode dirichlet_mode = DirichletMode::fix_both;
};

struct CollocationBatch {
    Eigen::MatrixXd interior_points;  // 2 x N_p
    Eigen::VectorXd interior_weights; // empty for uniform sampling, else quadrature
    Eigen::MatrixXd data_points;      // 2 x N_D
    Eigen::MatrixXd data_values;      // components x N_D
    Eigen::MatrixXd dirichlet_points, dirichlet_normals; // 2 x N_dbc
    Eigen::MatrixXd neumann_points, neumann_normals;     // 2 x N_nbc
    Eigen::VectorXd neumann_weights;  // empty for uniform, else edge quadrature

    int n_interior() const { return static_cast<int>(interior_points.cols()); }
    int n_data() const { return static_cast<int>(data_points.cols()); }
    int n_dirichlet() const { return static_cast<int>(dirichlet_points.cols()); }
    int n_neumann() const { return static_cast<int>(neumann_points.cols()); }
};

struct BatchCounts {
    int interior = 4096;
    int data = 0;
    int dirichlet = 512;
    int neumann = 512;
    int quad_domain_order = 1;
    int quad_boundary_order = 2;
};

enum class SamplingStrategy { uniform_random, quadrature };

// uniform_random draws area-weighted element-uniform interior points and
// length-weighted boundary points; quadrature returns the mesh Gauss points
// (deterministic, used by the energy loss). `data_field` supplies targets for
// the N_D data points when nonzero.
CollocationBatch sample_batch(const Mesh& mesh, const BatchCounts& counts, std::uint64_t seed,
                              SamplingStrategy strategy,
                              const std::function<Eigen::VectorXd(const Vec2&)>& data_field = {});

// --- heat problem (collocation loss) ---

double heat_residual(const Network& net, const EmbeddingField* field, const Vec2& x,
                     const HeatProblemSpec& spec);

LossBreakdown heat_loss(const Network& net, const EmbeddingField* field,
                        const CollocationBatch& batch, const HeatProblemSpec& spec,
                        const LossWeights& weights);

LossBreakdown heat_loss_grad(const Network& net, const EmbeddingField* field,
                             const CollocationBatch& batch, const HeatProblemSpec& spec,
                             const LossWeights& weights, Eigen::VectorXd& grad);

// --- elasticity (energy loss) ---

Eigen::Matrix2d strain(const Network& net, const EmbeddingField* field, const Vec2& x);
Eigen::Matrix2d stress(const ElasticityProblemSpec& spec, const Eigen::Matrix2d& strain_tensor);

// Applies the constitutive map (self-adjoint) to an arbitrary 2x2 adjoint.
Eigen::Matrix2d stress_adjoint(const ElasticityProblemSpec& spec, const Eigen::Matrix2d& sbar);

LossBreakdown energy_loss(const Network& net, const EmbeddingField* field,
                          const CollocationBatch& batch, const ElasticityProblemSpec& spec,
                          const LossWeights& weights,
                          const std::optional<Vec2>& pin_anchor = std::nullopt);

LossBreakdown energy_loss_grad(const Network& net, const EmbeddingField* field,
                               const CollocationBatch& batch, const ElasticityProblemSpec& spec,
                               const LossWeights& weights, Eigen::VectorXd& grad,
                               const std::optional<Vec2>& pin_anchor = std::nullopt);

// Anchor for the fix_y_pin_x mode: lowest-index node on the dirichlet boundary.
Vec2 pin_anchor_point(const Mesh& mesh);

} // namespace gpinn
