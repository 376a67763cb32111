#pragma once

#include <Eigen/Dense>
#include <memory>

#include "gpinn/graph.hpp"
#include "gpinn/mesh.hpp"

namespace gpinn {

// PDE derivatives hold z fixed in frozen mode (the paper's reading); the
// chain_rule mode routes d z/d x through grad_z for ablation.
enum class DiffMode { frozen, chain_rule };

std::string to_string(DiffMode mode);
DiffMode diff_mode_from_string(const std::string& s);

struct Normalization {
    double scale = 1.0;
    double offset = 0.0;
};

/// Continuous extra input coordinate z(x): the Fiedler vector rescaled to
/// [-1, 1] on the mesh nodes, extended over the domain by linear FE
/// interpolation and by clamped nearest-element extrapolation outside.
struct EmbeddingField {
    std::shared_ptr<const Mesh> mesh;
    Eigen::VectorXd node_values;
    int d_z = 1;
    Normalization normalization;
    DiffMode mode = DiffMode::frozen;
    // test hook for the frozen-mode contract: forces grad_z to return zero
    bool zero_gradient_override = false;
};

EmbeddingField build_embedding(std::shared_ptr<const Mesh> mesh, const SpectralPair& spectral,
                               DiffMode mode = DiffMode::frozen);

double eval_z(const EmbeddingField& field, const Vec2& x);
Eigen::Vector2d grad_z(const EmbeddingField& field, const Vec2& x);

// [x1, x2, z(x)]
Eigen::VectorXd augment(const EmbeddingField& field, const Vec2& x);

// columns are points; output is (2 + d_z) x N with row order preserved
Eigen::MatrixXd augment_batch(const EmbeddingField& field, const Eigen::MatrixXd& points);

} // namespace gpinn
