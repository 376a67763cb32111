#pragma once

#include <Eigen/Dense>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "gpinn/loss.hpp"
#include "gpinn/nn.hpp"

namespace gpinn {

enum class OptMethod { adam, lbfgs };

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct LbfgsConfig {
    int memory = 20;
    double c1 = 1e-4; // sufficient decrease
    double c2 = 0.9;  // curvature
    int max_line_search = 40;
};

struct OptimizeOptions {
    OptMethod method = OptMethod::adam;
    AdamConfig adam;
    LbfgsConfig lbfgs;
    int budget = 1000;
    // stop when no improvement larger than tol was seen for `patience` iters
    double tol = 0.0;
    int patience = 100;
    int iteration_offset = 0; // history numbering for chained phases
};

struct OptimizerState {
    OptMethod method = OptMethod::adam;
    int step = 0;
    Eigen::VectorXd m, v; // adam moments
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> lbfgs_pairs; // (s, y), newest last
};

struct HistoryRow {
    int iteration = 0;
    LossBreakdown loss;
};

// Evaluates the composed loss and its exact parameter gradient at params.
// The iteration index lets the caller resample collocation batches on a
// schedule; all calls within one optimizer iteration share the index.
using LossProvider =
    std::function<LossBreakdown(const Eigen::VectorXd& params, Eigen::VectorXd& grad, int iteration)>;

struct OptimizeResult {
    Eigen::VectorXd params;
    std::vector<HistoryRow> history;
    std::string stop_reason;
};

void adam_step(OptimizerState& state, const AdamConfig& cfg, Eigen::VectorXd& params,
               const Eigen::VectorXd& grad);

OptimizeResult optimize_params(Eigen::VectorXd params, const LossProvider& provider,
                               const OptimizeOptions& options);

// Convenience wrapper keeping the network shell.
std::pair<Network, std::vector<HistoryRow>> optimize(const Network& net,
                                                     const LossProvider& provider,
                                                     const OptimizeOptions& options);

} // namespace gpinn
