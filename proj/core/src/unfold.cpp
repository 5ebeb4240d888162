#include "rsma/unfold.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rsma/rng.hpp"
#include "unfold_kernel.hpp"

namespace rsma {

RVector env_vector(const ProblemInstance& inst) {
    const int U = inst.num_users();
    RVector env(U + 2);
    env.head(U) = inst.weights;
    env(U) = inst.p0;
    env(U + 1) = inst.power_budget;
    return env;
}

LayerParams LayerParams::zeros(int num_users) {
    const int E = num_users + 2;
    return {RVector::Zero(E), RMatrix::Zero(num_users, E), RMatrix::Zero(num_users, num_users + 1)};
}

std::size_t LayerParams::flat_size(int num_users) {
    const std::size_t U = static_cast<std::size_t>(num_users);
    return (U + 2) + U * (U + 2) + U * (U + 1);
}

void NetworkParams::validate() const {
    if (layers.empty()) {
        throw std::invalid_argument("NetworkParams: at least one layer is required");
    }
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("NetworkParams: lambda must be positive");
    }
    const int U = num_users();
    for (std::size_t n = 0; n < layers.size(); ++n) {
        const LayerParams& l = layers[n];
        if (l.w0.size() != U + 2 || l.w.rows() != U || l.w.cols() != U + 2 || l.eta.rows() != U ||
            l.eta.cols() != U + 1) {
            throw DimensionError("NetworkParams: layer " + std::to_string(n + 1) + " has inconsistent shapes");
        }
        if (!l.w0.allFinite() || !l.w.allFinite() || !l.eta.allFinite()) {
            throw std::invalid_argument("NetworkParams: layer " + std::to_string(n + 1) + " has non-finite entries");
        }
    }
}

std::size_t NetworkParams::flat_size() const { return layers.size() * LayerParams::flat_size(num_users()); }

RVector NetworkParams::flatten() const {
    RVector flat(static_cast<Eigen::Index>(flat_size()));
    Eigen::Index pos = 0;
    for (const LayerParams& l : layers) {
        flat.segment(pos, l.w0.size()) = l.w0;
        pos += l.w0.size();
        flat.segment(pos, l.w.size()) = l.w.reshaped<Eigen::RowMajor>();
        pos += l.w.size();
        flat.segment(pos, l.eta.size()) = l.eta.reshaped<Eigen::RowMajor>();
        pos += l.eta.size();
    }
    return flat;
}

NetworkParams NetworkParams::unflatten(const RVector& flat, int num_users, int num_layers, double lambda) {
    const std::size_t per_layer = LayerParams::flat_size(num_users);
    if (static_cast<std::size_t>(flat.size()) != per_layer * num_layers) {
        throw DimensionError("NetworkParams::unflatten: flat vector has the wrong length");
    }
    NetworkParams out;
    out.lambda = lambda;
    const int U = num_users;
    const int E = U + 2;
    Eigen::Index pos = 0;
    for (int n = 0; n < num_layers; ++n) {
        LayerParams l = LayerParams::zeros(U);
        l.w0 = flat.segment(pos, E);
        pos += E;
        l.w = flat.segment(pos, U * E).reshaped<Eigen::RowMajor>(U, E);
        pos += U * E;
        l.eta = flat.segment(pos, U * (U + 1)).reshaped<Eigen::RowMajor>(U, U + 1);
        pos += U * (U + 1);
        out.layers.push_back(std::move(l));
    }
    return out;
}

NetworkParams init_params(int num_users, int num_layers, std::uint64_t seed, InitScheme scheme,
                          const StepSizes& steps, double lambda, double decay) {
    if (num_users < 1 || num_layers < 1) {
        throw std::invalid_argument("init_params: num_users and num_layers must be positive");
    }
    NetworkParams params;
    params.lambda = lambda;
    const int U = num_users;
    if (scheme == InitScheme::random_small) {
        Rng rng(seed, {0x5eedULL});
        for (int n = 0; n < num_layers; ++n) {
            LayerParams l = LayerParams::zeros(U);
            for (Eigen::Index i = 0; i < l.w0.size(); ++i) {
                l.w0(i) = 0.01 * rng.normal();
            }
            for (Eigen::Index i = 0; i < l.w.size(); ++i) {
                l.w.data()[i] = 0.01 * rng.normal();
            }
            for (Eigen::Index i = 0; i < l.eta.size(); ++i) {
                l.eta.data()[i] = 0.01 * rng.normal();
            }
            params.layers.push_back(std::move(l));
        }
        return params;
    }

    if (steps.alpha_v.size() != U) {
        throw DimensionError("init_params: pgd_mimic needs one private step size per user");
    }
    // phi_env . [1..1, 0, 0] = sum_k f_k = 1, so the dot product equals the
    // chosen constant on every instance.
    RVector selector = RVector::Zero(U + 2);
    selector.head(U).setOnes();
    double factor = 1.0;
    for (int n = 0; n < num_layers; ++n) {
        LayerParams l = LayerParams::zeros(U);
        l.w0 = selector * (lambda * steps.alpha_v0 * factor / std::numbers::ln2);
        for (int k = 0; k < U; ++k) {
            l.w.row(k) = selector.transpose() / std::numbers::ln2;
            const double alpha = steps.alpha_v(k) * factor;
            l.eta.row(k).head(U).setConstant(alpha);
            l.eta(k, U) = alpha * lambda;
        }
        params.layers.push_back(std::move(l));
        factor *= decay;
    }
    return params;
}

Iterate layer_forward(const Iterate& state, const LayerParams& layer, const ProblemInstance& inst, double lambda,
                      int layer_index) {
    check_dimensions(inst, state.beams);
    if (layer.num_users() != inst.num_users()) {
        throw DimensionError("layer_forward: parameter shape does not match the instance");
    }
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("layer_forward: lambda must be positive");
    }
    const kernel::Problem p(inst);
    const kernel::Beams<double> v = kernel::to_beams(state.beams);
    const auto A = kernel::products(p, v);
    const kernel::LayerWeights<double> lw{layer.w0.data(), layer.w.data(), layer.eta.data()};
    const kernel::Beams<double> next = kernel::layer_step(p, v, A, lw, true, layer_index);

    Iterate out;
    out.beams = kernel::from_beams(next, p.U, p.M);
    out.rc = project_common_rate(RVector::Zero(p.U), inst, out.beams);
    return out;
}

ForwardTrace network_forward_from(const ProblemInstance& inst, const NetworkParams& params, const Iterate& init) {
    params.validate();
    if (params.num_users() != inst.num_users()) {
        throw DimensionError("network_forward: parameters built for " + std::to_string(params.num_users()) +
                             " users, instance has " + std::to_string(inst.num_users()));
    }
    ForwardTrace trace;
    Iterate state = init;
    for (int n = 0; n < params.num_layers(); ++n) {
        state = layer_forward(state, params.layers[n], inst, params.lambda, n);
        LayerOutput out;
        out.wsr_hat = wsr(inst, state.beams, state.rc);
        out.beams = state.beams;
        out.rc = state.rc;
        trace.layers.push_back(std::move(out));
    }
    return trace;
}

ForwardTrace network_forward(const ProblemInstance& inst, const NetworkParams& params, std::uint64_t seed) {
    return network_forward_from(inst, params, initial_point(inst, seed));
}

double batch_loss(std::span<const ForwardTrace> traces, std::span<const double> labels) {
    if (traces.empty()) {
        throw std::invalid_argument("batch_loss: empty batch");
    }
    if (traces.size() != labels.size()) {
        throw DimensionError("batch_loss: traces and labels differ in length");
    }
    const std::size_t N = traces.front().layers.size();
    if (N == 0) {
        throw std::invalid_argument("batch_loss: traces have no layers");
    }
    double total = 0.0;
    for (std::size_t q = 0; q < traces.size(); ++q) {
        if (traces[q].layers.size() != N) {
            throw DimensionError("batch_loss: traces differ in depth");
        }
        for (std::size_t n = 0; n < N; ++n) {
            total += std::log2(static_cast<double>(n + 2)) * (labels[q] - traces[q].layers[n].wsr_hat);
        }
    }
    return total / static_cast<double>(traces.size() * N);
}

} // namespace rsma
