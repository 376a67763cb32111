#include "gpinn/problems.hpp"

#include <algorithm>
#include <cmath>

#include "gpinn/rng.hpp"

namespace gpinn {

HeatProblemSpec disc_source_spec(const Vec2& center, double radius, double s0,
                                 double dirichlet_value, double neumann_value) {
    HeatProblemSpec spec;
    spec.source = [center, radius, s0](const Vec2& x) {
        return (x - center).norm() <= radius ? s0 : 0.0;
    };
    spec.dirichlet_value = dirichlet_value;
    spec.neumann_value = neumann_value;
    return spec;
}

namespace {

// cumulative distribution over element areas / edge lengths
std::vector<double> cumulative(const std::vector<double>& w) {
    std::vector<double> c(w.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        sum += w[i];
        c[i] = sum;
    }
    return c;
}

int pick(const std::vector<double>& cum, double u) {
    double target = u * cum.back();
    return static_cast<int>(std::lower_bound(cum.begin(), cum.end(), target) - cum.begin());
}

Eigen::MatrixXd sample_boundary(const Mesh& mesh, const std::vector<int>& edge_ids, int count,
                                SplitMix64& rng, Eigen::MatrixXd& normals) {
    std::vector<double> lengths;
    for (int i : edge_ids) lengths.push_back(mesh.edge_length(mesh.boundary_edges[i]));
    auto cum = cumulative(lengths);
    Eigen::MatrixXd pts(2, count);
    normals.resize(2, count);
    for (int k = 0; k < count; ++k) {
        int pickd = pick(cum, rng.uniform());
        int i = edge_ids[pickd];
        const BoundaryEdge& be = mesh.boundary_edges[i];
        double t = rng.uniform();
        pts.col(k) = (1.0 - t) * mesh.nodes[be.a] + t * mesh.nodes[be.b];
        normals.col(k) = mesh.outward_normal(i);
    }
    return pts;
}

std::vector<int> edges_with_tag(const Mesh& mesh, BoundaryTag tag) {
    std::vector<int> ids;
    for (int i = 0; i < static_cast<int>(mesh.boundary_edges.size()); ++i)
        if (mesh.boundary_edges[i].tag == tag) ids.push_back(i);
    return ids;
}

} // namespace

CollocationBatch sample_batch(const Mesh& mesh, const BatchCounts& counts, std::uint64_t seed,
                              SamplingStrategy strategy,
                              const std::function<Eigen::VectorXd(const Vec2&)>& data_field) {
    if (counts.interior < 1) throw UserError("sample_batch: N_p must be >= 1");
    auto dirichlet_ids = edges_with_tag(mesh, BoundaryTag::dirichlet);
    auto neumann_ids = edges_with_tag(mesh, BoundaryTag::neumann);
    if (counts.dirichlet > 0 && dirichlet_ids.empty())
        throw UserError("sample_batch: Dirichlet points requested but mesh has no dirichlet edges");
    if (counts.neumann > 0 && neumann_ids.empty())
        throw UserError("sample_batch: Neumann points requested but mesh has no neumann edges");

    CollocationBatch batch;
    SplitMix64 rng(derive_seed(seed, seed_purpose::batch));

    if (strategy == SamplingStrategy::uniform_random) {
        std::vector<double> areas;
        for (int e = 0; e < mesh.n_elements(); ++e) areas.push_back(mesh.element_area(e));
        auto cum = cumulative(areas);
        batch.interior_points.resize(2, counts.interior);
        for (int k = 0; k < counts.interior; ++k) {
            int e = pick(cum, rng.uniform());
            double u = rng.uniform(), v = rng.uniform();
            if (u + v > 1.0) { u = 1.0 - u; v = 1.0 - v; } // reflect into the triangle
            const auto& t = mesh.elements[e];
            batch.interior_points.col(k) = mesh.nodes[t[0]] +
                                           u * (mesh.nodes[t[1]] - mesh.nodes[t[0]]) +
                                           v * (mesh.nodes[t[2]] - mesh.nodes[t[0]]);
        }
        if (counts.dirichlet > 0)
            batch.dirichlet_points =
                sample_boundary(mesh, dirichlet_ids, counts.dirichlet, rng, batch.dirichlet_normals);
        if (counts.neumann > 0)
            batch.neumann_points =
                sample_boundary(mesh, neumann_ids, counts.neumann, rng, batch.neumann_normals);
    } else {
        MeshQuadrature quad =
            quadrature(mesh, counts.quad_domain_order, counts.quad_boundary_order);
        const auto& dom = quad.domain;
        batch.interior_points.resize(2, dom.points.size());
        batch.interior_weights.resize(dom.points.size());
        for (std::size_t k = 0; k < dom.points.size(); ++k) {
            batch.interior_points.col(k) = dom.points[k];
            batch.interior_weights[k] = dom.weights[k];
        }
        auto fill_boundary = [&](BoundaryTag tag, Eigen::MatrixXd& pts, Eigen::MatrixXd& normals,
                                 Eigen::VectorXd* weights) {
            auto it = quad.boundary.find(tag);
            if (it == quad.boundary.end()) return;
            const QuadratureSet& set = it->second;
            pts.resize(2, set.points.size());
            normals.resize(2, set.points.size());
            if (weights) weights->resize(set.points.size());
            for (std::size_t k = 0; k < set.points.size(); ++k) {
                pts.col(k) = set.points[k];
                normals.col(k) = mesh.outward_normal(set.owner[k]);
                if (weights) (*weights)[k] = set.weights[k];
            }
        };
        fill_boundary(BoundaryTag::dirichlet, batch.dirichlet_points, batch.dirichlet_normals,
                      nullptr);
        fill_boundary(BoundaryTag::neumann, batch.neumann_points, batch.neumann_normals,
                      &batch.neumann_weights);
    }

    if (counts.data > 0) {
        if (!data_field) throw UserError("sample_batch: data points requested without a data field");
        std::vector<double> areas;
        for (int e = 0; e < mesh.n_elements(); ++e) areas.push_back(mesh.element_area(e));
        auto cum = cumulative(areas);
        batch.data_points.resize(2, counts.data);
        for (int k = 0; k < counts.data; ++k) {
            int e = pick(cum, rng.uniform());
            double u = rng.uniform(), v = rng.uniform();
            if (u + v > 1.0) { u = 1.0 - u; v = 1.0 - v; }
            const auto& t = mesh.elements[e];
            batch.data_points.col(k) = mesh.nodes[t[0]] +
                                       u * (mesh.nodes[t[1]] - mesh.nodes[t[0]]) +
                                       v * (mesh.nodes[t[2]] - mesh.nodes[t[0]]);
        }
        Eigen::VectorXd first = data_field(Vec2(batch.data_points.col(0)));
        batch.data_values.resize(first.size(), counts.data);
        batch.data_values.col(0) = first;
        for (int k = 1; k < counts.data; ++k)
            batch.data_values.col(k) = data_field(Vec2(batch.data_points.col(k)));
    }
    return batch;
}

namespace {

bool chain_mode(const EmbeddingField* field) {
    return field && field->mode == DiffMode::chain_rule;
}

Eigen::MatrixXd net_inputs(const EmbeddingField* field, const Eigen::MatrixXd& pts) {
    return field ? augment_batch(*field, pts) : pts;
}

// Gradients of z at each point for chain-rule differentiation (2 x N).
Eigen::MatrixXd z_gradients(const EmbeddingField& field, const Eigen::MatrixXd& pts) {
    Eigen::MatrixXd g(2, pts.cols());
    for (Eigen::Index p = 0; p < pts.cols(); ++p)
        g.col(p) = grad_z(field, Vec2(pts(0, p), pts(1, p)));
    return g;
}

} // namespace

double heat_residual(const Network& net, const EmbeddingField* field, const Vec2& x,
                     const HeatProblemSpec& spec) {
    Eigen::VectorXd input = field ? augment(*field, x) : Eigen::VectorXd(x);
    EvalBundle eval = evaluate(net, input, 2);
    const Eigen::MatrixXd& H = eval.input_hessians[0];
    double lap = H(0, 0) + H(1, 1);
    if (chain_mode(field)) {
        Eigen::Vector2d g = grad_z(*field, x);
        lap += 2.0 * (H(0, 2) * g[0] + H(1, 2) * g[1]) + H(2, 2) * g.squaredNorm();
    }
    return lap - spec.source(x);
}

namespace {

struct HeatTerms {
    double pde = 0.0, data = 0.0, bc = 0.0;
};

// Shared by heat_loss and heat_loss_grad; seeds are scaled by the term
// weights so one backward sweep yields the full gradient.
HeatTerms heat_terms(const Network& net, const EmbeddingField* field,
                     const CollocationBatch& batch, const HeatProblemSpec& spec,
                     const LossWeights& weights, Eigen::VectorXd* grad) {
    if (batch.n_interior() == 0) throw UserError("heat_loss: empty interior batch");
    HeatTerms terms;
    Tape tape;
    const bool chain = chain_mode(field);

    // PDE residual term
    {
        const int n = batch.n_interior();
        Eigen::MatrixXd inputs = net_inputs(field, batch.interior_points);
        Eigen::MatrixXd zg;
        if (chain) zg = z_gradients(*field, batch.interior_points);
        tape.forward(net, inputs, 2);
        if (grad) tape.seed_zero();
        for (int p = 0; p < n; ++p) {
            double lap = tape.hess(0, p, 0, 0) + tape.hess(0, p, 1, 1);
            if (chain) {
                lap += 2.0 * (tape.hess(0, p, 0, 2) * zg(0, p) + tape.hess(0, p, 1, 2) * zg(1, p)) +
                       tape.hess(0, p, 2, 2) * zg.col(p).squaredNorm();
            }
            double r = lap - spec.source(Vec2(batch.interior_points.col(p)));
            terms.pde += r * r / n;
            if (grad) {
                double c = weights.pde * 2.0 * r / n;
                tape.hbar(0, p, 0, 0) += c;
                tape.hbar(0, p, 1, 1) += c;
                if (chain) {
                    tape.hbar(0, p, 0, 2) += c * zg(0, p);
                    tape.hbar(0, p, 2, 0) += c * zg(0, p);
                    tape.hbar(0, p, 1, 2) += c * zg(1, p);
                    tape.hbar(0, p, 2, 1) += c * zg(1, p);
                    tape.hbar(0, p, 2, 2) += c * zg.col(p).squaredNorm();
                }
            }
        }
        if (grad) tape.backward(net, *grad);
    }

    // data misfit
    if (batch.n_data() > 0) {
        const int n = batch.n_data();
        tape.forward(net, net_inputs(field, batch.data_points), 0);
        if (grad) tape.seed_zero();
        for (int p = 0; p < n; ++p) {
            double e = tape.value()(0, p) - batch.data_values(0, p);
            terms.data += e * e / n;
            if (grad) tape.vbar(0, p) += weights.data * 2.0 * e / n;
        }
        if (grad) tape.backward(net, *grad);
    }

    // Dirichlet boundary
    if (batch.n_dirichlet() > 0) {
        const int n = batch.n_dirichlet();
        tape.forward(net, net_inputs(field, batch.dirichlet_points), 0);
        if (grad) tape.seed_zero();
        for (int p = 0; p < n; ++p) {
            double e = tape.value()(0, p) - spec.dirichlet_value;
            terms.bc += e * e / n;
            if (grad) tape.vbar(0, p) += weights.bc * 2.0 * e / n;
        }
        if (grad) tape.backward(net, *grad);
    }

    // Neumann boundary
    if (batch.n_neumann() > 0) {
        const int n = batch.n_neumann();
        Eigen::MatrixXd zg;
        if (chain) zg = z_gradients(*field, batch.neumann_points);
        tape.forward(net, net_inputs(field, batch.neumann_points), 1);
        if (grad) tape.seed_zero();
        for (int p = 0; p < n; ++p) {
            Eigen::Vector2d nrm = batch.neumann_normals.col(p);
            double flux = tape.jac(0, p, 0) * nrm[0] + tape.jac(0, p, 1) * nrm[1];
            if (chain) flux += tape.jac(0, p, 2) * zg.col(p).dot(nrm);
            double e = flux - spec.neumann_value;
            terms.bc += e * e / n;
            if (grad) {
                double c = weights.bc * 2.0 * e / n;
                tape.jbar(0, p, 0) += c * nrm[0];
                tape.jbar(0, p, 1) += c * nrm[1];
                if (chain) tape.jbar(0, p, 2) += c * zg.col(p).dot(nrm);
            }
        }
        if (grad) tape.backward(net, *grad);
    }
    return terms;
}

} // namespace

LossBreakdown heat_loss(const Network& net, const EmbeddingField* field,
                        const CollocationBatch& batch, const HeatProblemSpec& spec,
                        const LossWeights& weights) {
    HeatTerms t = heat_terms(net, field, batch, spec, weights, nullptr);
    return combine_loss(t.pde, t.data, 0.0, t.bc, weights);
}

LossBreakdown heat_loss_grad(const Network& net, const EmbeddingField* field,
                             const CollocationBatch& batch, const HeatProblemSpec& spec,
                             const LossWeights& weights, Eigen::VectorXd& grad) {
    grad.setZero(net.params.size());
    HeatTerms t = heat_terms(net, field, batch, spec, weights, &grad);
    return combine_loss(t.pde, t.data, 0.0, t.bc, weights);
}

Eigen::Matrix2d strain(const Network& net, const EmbeddingField* field, const Vec2& x) {
    Eigen::VectorXd input = field ? augment(*field, x) : Eigen::VectorXd(x);
    EvalBundle eval = evaluate(net, input, 1);
    Eigen::Matrix2d J = eval.input_jacobian.leftCols<2>();
    if (chain_mode(field)) J += eval.input_jacobian.col(2) * grad_z(*field, x).transpose();
    return 0.5 * (J + J.transpose());
}

Eigen::Matrix2d stress(const ElasticityProblemSpec& spec, const Eigen::Matrix2d& eps) {
    const double E = spec.youngs_modulus, nu = spec.poisson_ratio;
    if (spec.model == ElasticModel::plane_stress) {
        double c = E / (1.0 - nu * nu);
        return c * ((1.0 - nu) * eps + nu * eps.trace() * Eigen::Matrix2d::Identity());
    }
    double c = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
    return c * ((1.0 - 2.0 * nu) * eps + nu * eps.trace() * Eigen::Matrix2d::Identity());
}

Eigen::Matrix2d stress_adjoint(const ElasticityProblemSpec& spec, const Eigen::Matrix2d& sbar) {
    // the constitutive map is self-adjoint on symmetric tensors
    return stress(spec, 0.5 * (sbar + sbar.transpose()));
}

Vec2 pin_anchor_point(const Mesh& mesh) {
    int best = -1;
    for (const auto& be : mesh.boundary_edges)
        if (be.tag == BoundaryTag::dirichlet) {
            if (best < 0 || be.a < best) best = be.a;
            if (be.b < best) best = be.b;
        }
    if (best < 0) throw UserError("pin_anchor_point: mesh has no dirichlet edges");
    return mesh.nodes[best];
}

namespace {

struct EnergyTerms {
    double pde = 0.0, data = 0.0, bc = 0.0;
};

EnergyTerms energy_terms(const Network& net, const EmbeddingField* field,
                         const CollocationBatch& batch, const ElasticityProblemSpec& spec,
                         const LossWeights& weights, Eigen::VectorXd* grad,
                         const std::optional<Vec2>& pin_anchor) {
    if (batch.interior_weights.size() != batch.interior_points.cols())
        throw UserError("energy_loss: batch lacks domain quadrature weights");
    if (batch.n_neumann() == 0 || batch.neumann_weights.size() != batch.neumann_points.cols())
        throw UserError("energy_loss: batch lacks a traction boundary quadrature");
    EnergyTerms terms;
    Tape tape;
    const bool chain = chain_mode(field);

    auto point_jacobian = [&](const Tape& t, int p, const Eigen::MatrixXd* zg) {
        Eigen::Matrix2d J;
        for (int i = 0; i < 2; ++i)
            for (int a = 0; a < 2; ++a) J(i, a) = t.jac(i, p, a);
        if (chain)
            for (int i = 0; i < 2; ++i)
                for (int a = 0; a < 2; ++a) J(i, a) += t.jac(i, p, 2) * (*zg)(a, p);
        return J;
    };
    auto seed_jacobian = [&](Tape& t, int p, const Eigen::Matrix2d& jbar,
                             const Eigen::MatrixXd* zg) {
        for (int i = 0; i < 2; ++i)
            for (int a = 0; a < 2; ++a) t.jbar(i, p, a) += jbar(i, a);
        if (chain)
            for (int i = 0; i < 2; ++i)
                t.jbar(i, p, 2) += jbar(i, 0) * (*zg)(0, p) + jbar(i, 1) * (*zg)(1, p);
    };

    // strain energy over the domain quadrature
    {
        const int n = batch.n_interior();
        Eigen::MatrixXd zg;
        if (chain) zg = z_gradients(*field, batch.interior_points);
        tape.forward(net, net_inputs(field, batch.interior_points), 1);
        if (grad) tape.seed_zero();
        for (int p = 0; p < n; ++p) {
            double w = batch.interior_weights[p];
            Eigen::Matrix2d J = point_jacobian(tape, p, &zg);
            Eigen::Matrix2d eps = 0.5 * (J + J.transpose());
            Eigen::Matrix2d sig = stress(spec, eps);
            terms.pde += w * 0.5 * (sig.array() * eps.array()).sum();
            // d(1/2 sigma:eps)/dJ = sigma for a self-adjoint constitutive map
            if (grad) seed_jacobian(tape, p, (weights.pde * w) * sig, &zg);
        }
        if (grad) tape.backward(net, *grad);
    }

    // external work of the traction + Neumann penalty share the same points
    {
        const int n = batch.n_neumann();
        Eigen::MatrixXd zg;
        if (chain) zg = z_gradients(*field, batch.neumann_points);
        tape.forward(net, net_inputs(field, batch.neumann_points), 1);
        if (grad) tape.seed_zero();
        for (int p = 0; p < n; ++p) {
            double w = batch.neumann_weights[p];
            terms.pde -= w * (spec.traction[0] * tape.value()(0, p) +
                              spec.traction[1] * tape.value()(1, p));
            if (grad) {
                tape.vbar(0, p) -= weights.pde * w * spec.traction[0];
                tape.vbar(1, p) -= weights.pde * w * spec.traction[1];
            }
            // sigma.n penalty
            Eigen::Matrix2d J = point_jacobian(tape, p, &zg);
            Eigen::Matrix2d sig = stress(spec, 0.5 * (J + J.transpose()));
            Eigen::Vector2d nrm = batch.neumann_normals.col(p);
            Eigen::Vector2d e = sig * nrm - spec.traction;
            terms.bc += e.squaredNorm() / n;
            if (grad) {
                Eigen::Matrix2d sbar = (weights.bc * 2.0 / n) * e * nrm.transpose();
                seed_jacobian(tape, p, stress_adjoint(spec, sbar), &zg);
            }
        }
        if (grad) tape.backward(net, *grad);
    }

    // Dirichlet penalty
    if (batch.n_dirichlet() > 0) {
        const int n = batch.n_dirichlet();
        tape.forward(net, net_inputs(field, batch.dirichlet_points), 0);
        if (grad) tape.seed_zero();
        for (int p = 0; p < n; ++p) {
            if (spec.dirichlet_mode == DirichletMode::fix_both) {
                Eigen::Vector2d e(tape.value()(0, p) - spec.dirichlet_displacement[0],
                                  tape.value()(1, p) - spec.dirichlet_displacement[1]);
                terms.bc += e.squaredNorm() / n;
                if (grad) {
                    tape.vbar(0, p) += weights.bc * 2.0 * e[0] / n;
                    tape.vbar(1, p) += weights.bc * 2.0 * e[1] / n;
                }
            } else {
                double e = tape.value()(1, p) - spec.dirichlet_displacement[1];
                terms.bc += e * e / n;
                if (grad) tape.vbar(1, p) += weights.bc * 2.0 * e / n;
            }
        }
        if (grad) tape.backward(net, *grad);
    }

    // x pin for the fix_y_pin_x mode
    if (spec.dirichlet_mode == DirichletMode::fix_y_pin_x) {
        if (!pin_anchor) throw UserError("energy_loss: fix_y_pin_x requires a pin anchor");
        Eigen::MatrixXd pt(2, 1);
        pt.col(0) = *pin_anchor;
        tape.forward(net, net_inputs(field, pt), 0);
        if (grad) tape.seed_zero();
        double e = tape.value()(0, 0) - spec.dirichlet_displacement[0];
        terms.bc += e * e;
        if (grad) {
            tape.vbar(0, 0) += weights.bc * 2.0 * e;
            tape.backward(net, *grad);
        }
    }

    // data misfit: displacement and stress targets
    if (batch.n_data() > 0) {
        const int n = batch.n_data();
        if (batch.data_values.rows() < 5)
            throw UserError("energy_loss: elasticity data rows must be [ux, uy, sxx, syy, sxy]");
        Eigen::MatrixXd zg;
        if (chain) zg = z_gradients(*field, batch.data_points);
        tape.forward(net, net_inputs(field, batch.data_points), 1);
        if (grad) tape.seed_zero();
        for (int p = 0; p < n; ++p) {
            Eigen::Vector2d eu(tape.value()(0, p) - batch.data_values(0, p),
                               tape.value()(1, p) - batch.data_values(1, p));
            Eigen::Matrix2d J = point_jacobian(tape, p, &zg);
            Eigen::Matrix2d sig = stress(spec, 0.5 * (J + J.transpose()));
            Eigen::Matrix2d es;
            es << sig(0, 0) - batch.data_values(2, p), sig(0, 1) - batch.data_values(4, p),
                sig(1, 0) - batch.data_values(4, p), sig(1, 1) - batch.data_values(3, p);
            terms.data += (eu.squaredNorm() + es.squaredNorm()) / n;
            if (grad) {
                tape.vbar(0, p) += weights.data * 2.0 * eu[0] / n;
                tape.vbar(1, p) += weights.data * 2.0 * eu[1] / n;
                seed_jacobian(tape, p, stress_adjoint(spec, (weights.data * 2.0 / n) * es), &zg);
            }
        }
        if (grad) tape.backward(net, *grad);
    }
    return terms;
}

} // namespace

LossBreakdown energy_loss(const Network& net, const EmbeddingField* field,
                          const CollocationBatch& batch, const ElasticityProblemSpec& spec,
                          const LossWeights& weights, const std::optional<Vec2>& pin_anchor) {
    EnergyTerms t = energy_terms(net, field, batch, spec, weights, nullptr, pin_anchor);
    return combine_loss(t.pde, t.data, 0.0, t.bc, weights);
}

LossBreakdown energy_loss_grad(const Network& net, const EmbeddingField* field,
                               const CollocationBatch& batch, const ElasticityProblemSpec& spec,
                               const LossWeights& weights, Eigen::VectorXd& grad,
                               const std::optional<Vec2>& pin_anchor) {
    grad.setZero(net.params.size());
    EnergyTerms t = energy_terms(net, field, batch, spec, weights, &grad, pin_anchor);
    return combine_loss(t.pde, t.data, 0.0, t.bc, weights);
}

} // namespace gpinn
