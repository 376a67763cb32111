#include "gpinn/embedding.hpp"

#include <cmath>

namespace gpinn {

std::string to_string(DiffMode mode) {
    return mode == DiffMode::frozen ? "frozen" : "chain_rule";
}

DiffMode diff_mode_from_string(const std::string& s) {
    if (s == "frozen") return DiffMode::frozen;
    if (s == "chain_rule") return DiffMode::chain_rule;
    throw ParseError("unknown differentiation mode '" + s + "'");
}

EmbeddingField build_embedding(std::shared_ptr<const Mesh> mesh, const SpectralPair& spectral,
                               DiffMode mode) {
    if (!mesh) throw UserError("build_embedding: null mesh");
    if (spectral.fiedler.size() != mesh->n_nodes())
        throw UserError("build_embedding: spectral vector length " +
                        std::to_string(spectral.fiedler.size()) + " != node count " +
                        std::to_string(mesh->n_nodes()));

    double lo = spectral.fiedler.minCoeff();
    double hi = spectral.fiedler.maxCoeff();
    if (hi - lo < 1e-14)
        throw NumericalError("build_embedding: Fiedler vector has zero range");

    EmbeddingField field;
    field.mesh = std::move(mesh);
    field.mode = mode;
    field.normalization.scale = 2.0 / (hi - lo);
    field.normalization.offset = -1.0 - field.normalization.scale * lo;
    field.node_values =
        (field.normalization.scale * spectral.fiedler).array() + field.normalization.offset;
    return field;
}

double eval_z(const EmbeddingField& field, const Vec2& x) {
    const Mesh& mesh = *field.mesh;
    Mesh::Located loc = mesh.locate_point(x);
    const auto& t = mesh.elements[loc.element];
    return loc.barycentric[0] * field.node_values[t[0]] +
           loc.barycentric[1] * field.node_values[t[1]] +
           loc.barycentric[2] * field.node_values[t[2]];
}

Eigen::Vector2d grad_z(const EmbeddingField& field, const Vec2& x) {
    if (field.zero_gradient_override) return Eigen::Vector2d::Zero();
    const Mesh& mesh = *field.mesh;
    Mesh::Located loc = mesh.locate_point(x);
    const auto& t = mesh.elements[loc.element];
    // gradient of the linear interpolant: solve [b-a; c-a] g = [v_b-v_a; v_c-v_a]
    Eigen::Matrix2d M;
    M.row(0) = (mesh.nodes[t[1]] - mesh.nodes[t[0]]).transpose();
    M.row(1) = (mesh.nodes[t[2]] - mesh.nodes[t[0]]).transpose();
    Eigen::Vector2d rhs(field.node_values[t[1]] - field.node_values[t[0]],
                        field.node_values[t[2]] - field.node_values[t[0]]);
    return M.inverse() * rhs;
}

Eigen::VectorXd augment(const EmbeddingField& field, const Vec2& x) {
    Eigen::VectorXd out(2 + field.d_z);
    out[0] = x.x();
    out[1] = x.y();
    out[2] = eval_z(field, x);
    return out;
}

Eigen::MatrixXd augment_batch(const EmbeddingField& field, const Eigen::MatrixXd& points) {
    Eigen::MatrixXd out(2 + field.d_z, points.cols());
    for (Eigen::Index p = 0; p < points.cols(); ++p)
        out.col(p) = augment(field, Vec2(points(0, p), points(1, p)));
    return out;
}

} // namespace gpinn
