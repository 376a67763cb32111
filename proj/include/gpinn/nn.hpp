#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "gpinn/common.hpp"

namespace gpinn {

/// Fully connected tanh network with a linear output layer. Parameters live
/// in one flat vector with a fixed layout: per layer, the weight matrix
/// (n_out x n_in, column-major) followed by the bias (n_out). Everything the
/// training loop touches is a deterministic function of (layer_sizes, seed).
struct Network {
    std::vector<int> layer_sizes;
    Eigen::VectorXd params;
    std::uint64_t seed = 0;

    int input_dim() const { return layer_sizes.front(); }
    int output_dim() const { return layer_sizes.back(); }
    int n_weight_layers() const { return static_cast<int>(layer_sizes.size()) - 1; }

    int weight_offset(int layer) const;
    int bias_offset(int layer) const;
    Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
};

int parameter_count(const std::vector<int>& layer_sizes);

// Xavier-uniform weights (bound sqrt(6/(n_in+n_out))), zero biases.
Network init_network(const std::vector<int>& layer_sizes, std::uint64_t seed);

struct EvalBundle {
    Eigen::VectorXd value;
    Eigen::MatrixXd input_jacobian;              // out x d
    std::vector<Eigen::MatrixXd> input_hessians; // per output, d x d
};

// order 0: value; 1: + exact input Jacobian; 2: + exact input Hessians.
// All derivatives are propagated analytically layer by layer.
EvalBundle evaluate(const Network& net, const Eigen::VectorXd& input, int order);

/// Batched forward/reverse workspace. forward() propagates
/// (value, Jacobian, Hessian) triples through the layers for a whole batch;
/// backward() turns seeds placed on those outputs into an exact parameter
/// gradient. Buffers persist across calls so the training loop does not
/// reallocate.
class Tape {
public:
    void forward(const Network& net, const Eigen::MatrixXd& inputs, int order);

    int batch_size() const { return n_; }
    int input_dim() const { return d_; }
    int output_dim() const { return out_; }
    int order() const { return order_; }

    const Eigen::MatrixXd& value() const { return values_.back(); }
    double jac(int o, int p, int a) const { return jac_pre_.back()(o, p * d_ + a); }
    double hess(int o, int p, int a, int b) const {
        return hess_pre_.back()(o, p * d_ * d_ + a * d_ + b);
    }

    // Seeds are adjoints of value/jac/hess; zeroed by seed_zero().
    void seed_zero();
    double& vbar(int o, int p) { return vbar_(o, p); }
    double& jbar(int o, int p, int a) { return jbar_(o, p * d_ + a); }
    double& hbar(int o, int p, int a, int b) { return hbar_(o, p * d_ * d_ + a * d_ + b); }

    // Accumulates d(seeded loss)/d(params) into grad (sized like net.params).
    void backward(const Network& net, Eigen::VectorXd& grad);

private:
    int d_ = 0, n_ = 0, out_ = 0, order_ = 0;
    std::vector<Eigen::MatrixXd> values_;   // post-activation per layer; [0] = inputs
    std::vector<Eigen::MatrixXd> jac_pre_;  // pre-activation input Jacobians
    std::vector<Eigen::MatrixXd> hess_pre_; // pre-activation input Hessians
    Eigen::MatrixXd input_jac_;             // per-point identity blocks
    Eigen::MatrixXd input_hess_;            // zeros
    Eigen::MatrixXd vbar_, jbar_, hbar_;
    Eigen::MatrixXd jpost_, hpost_, work_;  // scratch
    Eigen::MatrixXd abar_, jbar_post_, hbar_post_, sbar_, jbar_pre_, hbar_pre_;
};

// Composed scalar loss over a batch: `loss` reads the tape outputs, fills the
// seeds, and returns the loss value; the exact parameter gradient lands in
// grad. This is the generic entry point the problem losses build on.
double loss_gradient(const Network& net, const Eigen::MatrixXd& inputs, int order,
                     const std::function<double(Tape&)>& loss, Eigen::VectorXd& grad);

} // namespace gpinn
