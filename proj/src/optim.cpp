#include "gpinn/optim.hpp"

#include <cmath>
#include <sstream>

namespace gpinn {

namespace {

void check_finite(const LossBreakdown& loss, int iteration) {
    if (std::isfinite(loss.total)) return;
    std::ostringstream msg;
    msg << "non-finite loss at iteration " << iteration << ": total=" << loss.total
        << " pde=" << loss.pde << " data=" << loss.data << " ic=" << loss.ic
        << " bc=" << loss.bc;
    throw NumericalError(msg.str());
}

// Improvement-based stopping shared by both methods.
struct StopTracker {
    double best = std::numeric_limits<double>::infinity();
    int best_iter = 0;
    double tol;
    int patience;

    StopTracker(double tol_, int patience_) : tol(tol_), patience(patience_) {}

    bool should_stop(double value, int iter) {
        if (value < best - tol) {
            best = value;
            best_iter = iter;
        }
        return patience > 0 && tol > 0.0 && iter - best_iter >= patience;
    }
};

} // namespace

void adam_step(OptimizerState& state, const AdamConfig& cfg, Eigen::VectorXd& params,
               const Eigen::VectorXd& grad) {
    if (state.m.size() != params.size()) {
        state.m = Eigen::VectorXd::Zero(params.size());
        state.v = Eigen::VectorXd::Zero(params.size());
    }
    state.step += 1;
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(cfg.beta1, state.step);
    const double bc2 = 1.0 - std::pow(cfg.beta2, state.step);
    params.array() -=
        cfg.learning_rate * (state.m.array() / bc1) /
        ((state.v.array() / bc2).sqrt() + cfg.epsilon);
}

namespace {

OptimizeResult run_adam(Eigen::VectorXd params, const LossProvider& provider,
                        const OptimizeOptions& opt) {
    OptimizeResult out;
    OptimizerState state;
    state.method = OptMethod::adam;
    Eigen::VectorXd grad(params.size());
    StopTracker stop(opt.tol, opt.patience);

    for (int it = 0; it < opt.budget; ++it) {
        LossBreakdown loss = provider(params, grad, it);
        check_finite(loss, it);
        out.history.push_back({opt.iteration_offset + it, loss});
        if (stop.should_stop(loss.total, it)) {
            out.stop_reason = "no improvement > tol over " + std::to_string(opt.patience) +
                              " iterations";
            break;
        }
        adam_step(state, opt.adam, params, grad);
    }
    if (out.stop_reason.empty()) out.stop_reason = "budget exhausted";
    out.params = std::move(params);
    return out;
}

// Strong Wolfe line search (bracket + zoom with bisection).
struct LineSearchResult {
    double alpha = 0.0;
    double f = 0.0;
    Eigen::VectorXd x, g;
    bool ok = false;
    LossBreakdown loss;
};

LineSearchResult wolfe_line_search(const LossProvider& provider, int iteration,
                                   const Eigen::VectorXd& x0, double f0,
                                   const Eigen::VectorXd& g0, const Eigen::VectorXd& dir,
                                   const LbfgsConfig& cfg) {
    LineSearchResult best;
    const double d0 = g0.dot(dir);
    if (d0 >= 0.0) return best; // not a descent direction

    Eigen::VectorXd g(x0.size());
    auto eval = [&](double alpha, LossBreakdown& loss) {
        best.x = x0 + alpha * dir;
        loss = provider(best.x, g, iteration);
        return loss.total;
    };

    double alpha_prev = 0.0, f_prev = f0, dphi_prev = d0;
    double alpha = 1.0;
    double lo = -1.0, hi = -1.0, f_lo = 0.0;

    LossBreakdown loss;
    int evals = 0;
    for (; evals < cfg.max_line_search; ++evals) {
        double f = eval(alpha, loss);
        double dphi = g.dot(dir);
        if (f > f0 + cfg.c1 * alpha * d0 || (evals > 0 && f >= f_prev)) {
            lo = alpha_prev; hi = alpha; f_lo = f_prev;
            break;
        }
        if (std::abs(dphi) <= -cfg.c2 * d0) {
            best.alpha = alpha; best.f = f; best.g = g; best.ok = true; best.loss = loss;
            return best;
        }
        if (dphi >= 0.0) {
            lo = alpha; hi = alpha_prev; f_lo = f;
            break;
        }
        alpha_prev = alpha; f_prev = f; dphi_prev = dphi;
        alpha *= 2.0;
    }
    (void)dphi_prev;
    if (lo < 0.0) return best; // bracket never closed

    // zoom
    for (; evals < cfg.max_line_search; ++evals) {
        alpha = 0.5 * (lo + hi);
        double f = eval(alpha, loss);
        double dphi = g.dot(dir);
        if (f > f0 + cfg.c1 * alpha * d0 || f >= f_lo) {
            hi = alpha;
        } else {
            if (std::abs(dphi) <= -cfg.c2 * d0) {
                best.alpha = alpha; best.f = f; best.g = g; best.ok = true; best.loss = loss;
                return best;
            }
            if (dphi * (hi - lo) >= 0.0) hi = lo;
            lo = alpha;
            f_lo = f;
        }
        if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    return best;
}

OptimizeResult run_lbfgs(Eigen::VectorXd params, const LossProvider& provider,
                         const OptimizeOptions& opt) {
    OptimizeResult out;
    OptimizerState state;
    state.method = OptMethod::lbfgs;
    StopTracker stop(opt.tol, opt.patience);

    Eigen::VectorXd grad(params.size());
    LossBreakdown loss = provider(params, grad, 0);
    check_finite(loss, 0);

    for (int it = 0; it < opt.budget; ++it) {
        out.history.push_back({opt.iteration_offset + it, loss});
        if (stop.should_stop(loss.total, it)) {
            out.stop_reason = "no improvement > tol over " + std::to_string(opt.patience) +
                              " iterations";
            break;
        }
        if (grad.norm() < 1e-14) {
            out.stop_reason = "gradient vanished";
            break;
        }

        // two-loop recursion
        Eigen::VectorXd q = grad;
        const int k = static_cast<int>(state.lbfgs_pairs.size());
        std::vector<double> alpha_i(k), rho(k);
        for (int i = k - 1; i >= 0; --i) {
            const auto& [s, y] = state.lbfgs_pairs[i];
            rho[i] = 1.0 / y.dot(s);
            alpha_i[i] = rho[i] * s.dot(q);
            q -= alpha_i[i] * y;
        }
        if (k > 0) {
            const auto& [s, y] = state.lbfgs_pairs.back();
            q *= s.dot(y) / y.dot(y);
        }
        for (int i = 0; i < k; ++i) {
            const auto& [s, y] = state.lbfgs_pairs[i];
            double beta = rho[i] * y.dot(q);
            q += (alpha_i[i] - beta) * s;
        }
        Eigen::VectorXd dir = -q;

        LineSearchResult ls =
            wolfe_line_search(provider, it, params, loss.total, grad, dir, opt.lbfgs);
        if (!ls.ok && k > 0) {
            // fall back to steepest descent once before giving up
            ls = wolfe_line_search(provider, it, params, loss.total, grad, -grad, opt.lbfgs);
        }
        if (!ls.ok) {
            out.stop_reason = "line search failed";
            break;
        }

        Eigen::VectorXd s = ls.x - params;
        Eigen::VectorXd y = ls.g - grad;
        if (s.dot(y) > 1e-10 * s.norm() * y.norm()) {
            state.lbfgs_pairs.emplace_back(std::move(s), std::move(y));
            while (static_cast<int>(state.lbfgs_pairs.size()) > opt.lbfgs.memory)
                state.lbfgs_pairs.pop_front();
        }
        params = ls.x;
        grad = ls.g;
        loss = ls.loss;
        check_finite(loss, it + 1);
        state.step += 1;
    }
    if (out.stop_reason.empty()) out.stop_reason = "budget exhausted";
    out.params = std::move(params);
    return out;
}

} // namespace

OptimizeResult optimize_params(Eigen::VectorXd params, const LossProvider& provider,
                               const OptimizeOptions& options) {
    if (options.budget < 1) throw UserError("optimize: budget must be >= 1");
    return options.method == OptMethod::adam ? run_adam(std::move(params), provider, options)
                                             : run_lbfgs(std::move(params), provider, options);
}

std::pair<Network, std::vector<HistoryRow>> optimize(const Network& net,
                                                     const LossProvider& provider,
                                                     const OptimizeOptions& options) {
    OptimizeResult res = optimize_params(net.params, provider, options);
    Network trained = net;
    trained.params = std::move(res.params);
    return {std::move(trained), std::move(res.history)};
}

} // namespace gpinn
