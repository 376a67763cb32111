#include "gpinn/nn.hpp"

#include <cmath>

#include "gpinn/rng.hpp"

namespace gpinn {

namespace {

void check_sizes(const std::vector<int>& sizes) {
    if (sizes.size() < 3)
        throw UserError("network needs at least one hidden layer");
    for (int w : sizes)
        if (w < 1) throw UserError("network layer widths must be >= 1");
}

using StridedView = Eigen::Map<Eigen::MatrixXd, 0, Eigen::OuterStride<>>;
using ConstStridedView = Eigen::Map<const Eigen::MatrixXd, 0, Eigen::OuterStride<>>;

// View of the idx-th column group of a (w x group*N) matrix as (w x N):
// column p of the view is M.col(p*group + idx).
StridedView group_view(Eigen::MatrixXd& M, int group, int idx) {
    const int w = static_cast<int>(M.rows());
    const int N = static_cast<int>(M.cols()) / group;
    return {M.data() + static_cast<std::ptrdiff_t>(idx) * w, w, N,
            Eigen::OuterStride<>(static_cast<std::ptrdiff_t>(group) * w)};
}

ConstStridedView group_view(const Eigen::MatrixXd& M, int group, int idx) {
    const int w = static_cast<int>(M.rows());
    const int N = static_cast<int>(M.cols()) / group;
    return {M.data() + static_cast<std::ptrdiff_t>(idx) * w, w, N,
            Eigen::OuterStride<>(static_cast<std::ptrdiff_t>(group) * w)};
}

} // namespace

int parameter_count(const std::vector<int>& sizes) {
    int count = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
        count += (sizes[l] + 1) * sizes[l + 1];
    return count;
}

int Network::weight_offset(int layer) const {
    int off = 0;
    for (int l = 0; l < layer; ++l)
        off += (layer_sizes[l] + 1) * layer_sizes[l + 1];
    return off;
}

int Network::bias_offset(int layer) const {
    return weight_offset(layer) + layer_sizes[layer] * layer_sizes[layer + 1];
}

Eigen::Map<const Eigen::MatrixXd> Network::weight(int layer) const {
    return {params.data() + weight_offset(layer), layer_sizes[layer + 1], layer_sizes[layer]};
}

Eigen::Map<const Eigen::VectorXd> Network::bias(int layer) const {
    return {params.data() + bias_offset(layer), layer_sizes[layer + 1]};
}

Network init_network(const std::vector<int>& sizes, std::uint64_t seed) {
    check_sizes(sizes);
    Network net;
    net.layer_sizes = sizes;
    net.seed = seed;
    net.params = Eigen::VectorXd::Zero(parameter_count(sizes));

    SplitMix64 rng(derive_seed(seed, seed_purpose::network_init));
    int off = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int n_in = sizes[l], n_out = sizes[l + 1];
        const double bound = std::sqrt(6.0 / (n_in + n_out));
        for (int k = 0; k < n_in * n_out; ++k)
            net.params[off + k] = rng.uniform(-bound, bound);
        off += n_in * n_out + n_out; // biases stay zero
    }
    return net;
}

void Tape::forward(const Network& net, const Eigen::MatrixXd& X, int order) {
    if (X.rows() != net.input_dim())
        throw UserError("tape: input dimension " + std::to_string(X.rows()) +
                        " != network input " + std::to_string(net.input_dim()));
    const int L = net.n_weight_layers();
    d_ = static_cast<int>(X.rows());
    n_ = static_cast<int>(X.cols());
    out_ = net.output_dim();
    order_ = order;

    values_.resize(L + 1);
    jac_pre_.resize(L + 1);
    hess_pre_.resize(L + 1);
    values_[0] = X;

    if (order >= 1) {
        input_jac_.setZero(d_, d_ * n_);
        for (int p = 0; p < n_; ++p)
            for (int a = 0; a < d_; ++a) input_jac_(a, p * d_ + a) = 1.0;
    }
    if (order >= 2) input_hess_.setZero(d_, d_ * d_ * n_);

    const Eigen::MatrixXd* jin = &input_jac_;
    const Eigen::MatrixXd* hin = &input_hess_;

    for (int l = 0; l < L; ++l) {
        auto W = net.weight(l);
        auto b = net.bias(l);
        const int w = net.layer_sizes[l + 1];
        const bool hidden = l + 1 < static_cast<int>(net.layer_sizes.size()) - 1;

        Eigen::MatrixXd& s = values_[l + 1];
        s.resize(w, n_);
        s.noalias() = W * values_[l];
        s.colwise() += b;

        if (order >= 1) {
            jac_pre_[l + 1].resize(w, d_ * n_);
            jac_pre_[l + 1].noalias() = W * (*jin);
        }
        if (order >= 2) {
            hess_pre_[l + 1].resize(w, d_ * d_ * n_);
            hess_pre_[l + 1].noalias() = W * (*hin);
        }

        if (!hidden) continue; // linear output layer

        s = s.array().tanh();
        // post-activation derivatives feeding the next layer:
        //   J_a = phi' .* Js_a,  H_ab = phi' .* Hs_ab + phi'' .* Js_a .* Js_b
        // with phi' = 1 - tanh^2, phi'' = -2 tanh (1 - tanh^2).
        // jac_pre_[l+1] was consumed by the GEMM above, so the carry buffers
        // can be overwritten in place.
        if (order >= 1) {
            Eigen::ArrayXXd phi1 = 1.0 - s.array().square();
            jpost_.resize(w, d_ * n_);
            for (int a = 0; a < d_; ++a)
                group_view(jpost_, d_, a) =
                    (phi1 * group_view(jac_pre_[l + 1], d_, a).array()).matrix();
            jin = &jpost_;
            if (order >= 2) {
                Eigen::ArrayXXd phi2 = -2.0 * s.array() * phi1;
                hpost_.resize(w, d_ * d_ * n_);
                for (int a = 0; a < d_; ++a)
                    for (int bb = 0; bb < d_; ++bb)
                        group_view(hpost_, d_ * d_, a * d_ + bb) =
                            (phi1 * group_view(hess_pre_[l + 1], d_ * d_, a * d_ + bb).array() +
                             phi2 * group_view(jac_pre_[l + 1], d_, a).array() *
                                 group_view(jac_pre_[l + 1], d_, bb).array())
                                .matrix();
                hin = &hpost_;
            }
        }
    }
}

void Tape::seed_zero() {
    vbar_.setZero(out_, n_);
    if (order_ >= 1) jbar_.setZero(out_, d_ * n_);
    if (order_ >= 2) hbar_.setZero(out_, d_ * d_ * n_);
}

void Tape::backward(const Network& net, Eigen::VectorXd& grad) {
    const int L = net.n_weight_layers();
    if (grad.size() != net.params.size())
        throw UserError("tape: gradient buffer size mismatch");

    sbar_ = vbar_;
    if (order_ >= 1) jbar_pre_ = jbar_;
    if (order_ >= 2) hbar_pre_ = hbar_;

    for (int l = L - 1; l >= 0; --l) {
        auto W = net.weight(l);
        const int n_in = net.layer_sizes[l];

        // input-side post-activation quantities of layer l
        const Eigen::MatrixXd* a_in = &values_[l];
        const Eigen::MatrixXd* j_in = nullptr;
        const Eigen::MatrixXd* h_in = nullptr;
        if (order_ >= 1) {
            if (l == 0) {
                j_in = &input_jac_;
                h_in = &input_hess_;
            } else {
                Eigen::ArrayXXd phi1 = 1.0 - values_[l].array().square();
                jpost_.resize(n_in, d_ * n_);
                for (int a = 0; a < d_; ++a)
                    group_view(jpost_, d_, a) =
                        (phi1 * group_view(jac_pre_[l], d_, a).array()).matrix();
                j_in = &jpost_;
                if (order_ >= 2) {
                    Eigen::ArrayXXd phi2 = -2.0 * values_[l].array() * phi1;
                    hpost_.resize(n_in, d_ * d_ * n_);
                    for (int a = 0; a < d_; ++a)
                        for (int bb = 0; bb < d_; ++bb)
                            group_view(hpost_, d_ * d_, a * d_ + bb) =
                                (phi1 * group_view(hess_pre_[l], d_ * d_, a * d_ + bb).array() +
                                 phi2 * group_view(jac_pre_[l], d_, a).array() *
                                     group_view(jac_pre_[l], d_, bb).array())
                                    .matrix();
                    h_in = &hpost_;
                }
            }
        }

        // parameter gradients
        Eigen::Map<Eigen::MatrixXd> wbar(grad.data() + net.weight_offset(l),
                                         net.layer_sizes[l + 1], n_in);
        Eigen::Map<Eigen::VectorXd> bbar(grad.data() + net.bias_offset(l),
                                         net.layer_sizes[l + 1]);
        wbar.noalias() += sbar_ * a_in->transpose();
        if (order_ >= 1) wbar.noalias() += jbar_pre_ * j_in->transpose();
        if (order_ >= 2) wbar.noalias() += hbar_pre_ * h_in->transpose();
        bbar.noalias() += sbar_.rowwise().sum();

        if (l == 0) break;

        // downstream (post-activation side of layer l) adjoints
        abar_.noalias() = W.transpose() * sbar_;
        if (order_ >= 1) jbar_post_.noalias() = W.transpose() * jbar_pre_;
        if (order_ >= 2) hbar_post_.noalias() = W.transpose() * hbar_pre_;

        // through the tanh of layer l: adjoints of the pre-activation triple
        Eigen::ArrayXXd phi1 = 1.0 - values_[l].array().square();
        Eigen::ArrayXXd phi2 = -2.0 * values_[l].array() * phi1;

        sbar_ = (abar_.array() * phi1).matrix();
        if (order_ >= 1) {
            for (int a = 0; a < d_; ++a)
                sbar_.array() +=
                    phi2 * group_view(jbar_post_, d_, a).array() *
                    group_view(jac_pre_[l], d_, a).array();
            work_.resize(n_in, d_ * n_);
            for (int a = 0; a < d_; ++a)
                group_view(work_, d_, a) =
                    (phi1 * group_view(jbar_post_, d_, a).array()).matrix();
            if (order_ >= 2) {
                Eigen::ArrayXXd phi3 = phi1 * (6.0 * values_[l].array().square() - 2.0);
                for (int a = 0; a < d_; ++a)
                    for (int bb = 0; bb < d_; ++bb) {
                        auto hb = group_view(hbar_post_, d_ * d_, a * d_ + bb).array();
                        sbar_.array() +=
                            phi2 * hb * group_view(hess_pre_[l], d_ * d_, a * d_ + bb).array() +
                            phi3 * hb * group_view(jac_pre_[l], d_, a).array() *
                                group_view(jac_pre_[l], d_, bb).array();
                        group_view(work_, d_, a).array() +=
                            phi2 * hb * group_view(jac_pre_[l], d_, bb).array();
                        group_view(work_, d_, bb).array() +=
                            phi2 * hb * group_view(jac_pre_[l], d_, a).array();
                    }
                hbar_pre_.resize(n_in, d_ * d_ * n_);
                for (int c = 0; c < d_ * d_; ++c)
                    group_view(hbar_pre_, d_ * d_, c) =
                        (phi1 * group_view(hbar_post_, d_ * d_, c).array()).matrix();
            }
            std::swap(jbar_pre_, work_);
        }
    }
}

double loss_gradient(const Network& net, const Eigen::MatrixXd& inputs, int order,
                     const std::function<double(Tape&)>& loss, Eigen::VectorXd& grad) {
    Tape tape;
    tape.forward(net, inputs, order);
    tape.seed_zero();
    double value = loss(tape);
    grad.setZero(net.params.size());
    tape.backward(net, grad);
    return value;
}

EvalBundle evaluate(const Network& net, const Eigen::VectorXd& input, int order) {
    if (input.size() != net.input_dim())
        throw UserError("evaluate: input length " + std::to_string(input.size()) +
                        " != network input dim " + std::to_string(net.input_dim()));
    Tape tape;
    tape.forward(net, input, order);

    EvalBundle out;
    out.value = tape.value().col(0);
    const int d = net.input_dim();
    if (order >= 1) {
        out.input_jacobian.resize(net.output_dim(), d);
        for (int o = 0; o < net.output_dim(); ++o)
            for (int a = 0; a < d; ++a) out.input_jacobian(o, a) = tape.jac(o, 0, a);
    }
    if (order >= 2) {
        out.input_hessians.resize(net.output_dim());
        for (int o = 0; o < net.output_dim(); ++o) {
            out.input_hessians[o].resize(d, d);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b) out.input_hessians[o](a, b) = tape.hess(o, 0, a, b);
        }
    }
    return out;
}

} // namespace gpinn
