#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "rsma/autodiff.hpp"
#include "rsma/parallel.hpp"
#include "rsma/rng.hpp"
#include "rsma/unfold.hpp"
#include "unfold_kernel.hpp"

namespace rsma {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5bu;

struct SampleResult {
    double loss = 0.0;
    double final_wsr = 0.0;
    RVector gradient;
};

void check_batch(std::span<const TrainingSample> batch, const NetworkParams& params) {
    if (batch.empty()) {
        throw std::invalid_argument("param_gradients: empty batch");
    }
    params.validate();
    for (std::size_t q = 0; q < batch.size(); ++q) {
        if (batch[q].instance == nullptr) {
            throw std::invalid_argument("param_gradients: sample " + std::to_string(q) + " has no instance");
        }
        if (batch[q].instance->num_users() != params.num_users()) {
            throw DimensionError("param_gradients: sample " + std::to_string(q) +
                                 " does not match the parameter shape");
        }
    }
}

SampleResult evaluate_sample(const TrainingSample& s, const RVector& flat, int num_layers, bool z_backprop) {
    const kernel::Problem p(*s.instance);
    const kernel::Beams<double> init = kernel::to_beams(initial_point(*s.instance, s.init_seed).beams);
    SampleResult r;
    r.loss = kernel::sample_loss<double>(p, init, std::span<const double>(flat.data(), flat.size()), num_layers,
                                         s.wsr_star, z_backprop, &r.final_wsr);
    return r;
}

SampleResult reverse_sample(const TrainingSample& s, const RVector& flat, int num_layers, bool z_backprop) {
    const kernel::Problem p(*s.instance);
    const kernel::Beams<double> init = kernel::to_beams(initial_point(*s.instance, s.init_seed).beams);

    ad::Tape tape;
    ad::TapeScope scope(tape);
    std::vector<ad::Var> leaves(flat.size());
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
        leaves[i] = ad::Var::leaf(flat(i));
    }
    SampleResult r;
    const ad::Var loss = kernel::sample_loss<ad::Var>(p, init, leaves, num_layers, s.wsr_star, z_backprop,
                                                      &r.final_wsr);
    r.loss = loss.val;
    const std::vector<double> adj = tape.adjoints(loss.id);
    r.gradient.resize(flat.size());
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
        r.gradient(i) = adj[leaves[i].id];
    }
    return r;
}

template <class Fn>
std::vector<SampleResult> per_sample(std::span<const TrainingSample> batch, Fn&& fn) {
    std::vector<SampleResult> results(batch.size());
    parallel_for(batch.size(), [&](std::size_t q) {
        try {
            results[q] = fn(batch[q]);
        } catch (const std::exception& e) {
            throw SampleError(q, e.what());
        }
    });
    return results;
}

} // namespace

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || batch_size < 1 || epochs < 0 || !(fd_step > 0.0)) {
        throw std::invalid_argument("TrainConfig: learning_rate >= 0, batch_size >= 1, epochs >= 0 and fd_step > 0 "
                                    "are required");
    }
}

double graph_loss(std::span<const TrainingSample> batch, const NetworkParams& params, bool z_backprop) {
    check_batch(batch, params);
    const RVector flat = params.flatten();
    const auto results = per_sample(batch, [&](const TrainingSample& s) {
        return evaluate_sample(s, flat, params.num_layers(), z_backprop);
    });
    double total = 0.0;
    for (const SampleResult& r : results) {
        total += r.loss;
    }
    return total / static_cast<double>(batch.size());
}

LossAndGradient param_gradients(std::span<const TrainingSample> batch, const NetworkParams& params,
                                const TrainConfig& config) {
    config.validate();
    check_batch(batch, params);
    const RVector flat = params.flatten();
    const int N = params.num_layers();
    const double Q = static_cast<double>(batch.size());

    LossAndGradient out;
    out.gradient = RVector::Zero(flat.size());
    if (config.grad_mode == GradMode::reverse) {
        const auto results = per_sample(batch, [&](const TrainingSample& s) {
            return reverse_sample(s, flat, N, config.z_backprop);
        });
        for (const SampleResult& r : results) {
            out.loss += r.loss / Q;
            out.gradient += r.gradient / Q;
            out.final_wsr.push_back(r.final_wsr);
        }
        return out;
    }

    const auto base = per_sample(batch, [&](const TrainingSample& s) {
        return evaluate_sample(s, flat, N, config.z_backprop);
    });
    for (const SampleResult& r : base) {
        out.loss += r.loss / Q;
        out.final_wsr.push_back(r.final_wsr);
    }
    const double h = config.fd_step;
    for (Eigen::Index i = 0; i < flat.size(); ++i) {
        RVector plus = flat;
        RVector minus = flat;
        plus(i) += h;
        minus(i) -= h;
        const NetworkParams p_plus = NetworkParams::unflatten(plus, params.num_users(), N, params.lambda);
        const NetworkParams p_minus = NetworkParams::unflatten(minus, params.num_users(), N, params.lambda);
        out.gradient(i) =
            (graph_loss(batch, p_plus, config.z_backprop) - graph_loss(batch, p_minus, config.z_backprop)) / (2.0 * h);
    }
    return out;
}

TrainResult train(std::span<const LabeledInstance> data, NetworkParams params, const TrainConfig& config) {
    config.validate();
    params.validate();
    if (data.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i].wsr_star) || !(data[i].wsr_star > 0.0)) {
            throw std::invalid_argument("train: record " + std::to_string(i) + " has no valid oracle label");
        }
    }

    const int U = params.num_users();
    const int N = params.num_layers();
    const double lambda = params.lambda;
    RVector theta = params.flatten();
    RVector m = RVector::Zero(theta.size());
    RVector v = RVector::Zero(theta.size());
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    long step = 0;

    Rng shuffle_rng(config.seed, {kShuffleStream});
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.index(i)]);
        }
        double loss_sum = 0.0;
        double ratio_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::vector<TrainingSample> batch;
            for (std::size_t b = start; b < stop; ++b) {
                const std::size_t idx = order[b];
                batch.push_back({&data[idx].instance, data[idx].wsr_star,
                                 derive_seed(config.seed, {static_cast<std::uint64_t>(epoch), idx})});
            }
            const NetworkParams current = NetworkParams::unflatten(theta, U, N, lambda);
            const LossAndGradient lg = param_gradients(batch, current, config);
            loss_sum += lg.loss * static_cast<double>(batch.size());
            for (std::size_t b = 0; b < batch.size(); ++b) {
                ratio_sum += lg.final_wsr[b] / batch[b].wsr_star;
            }

            ++step;
            m = beta1 * m + (1.0 - beta1) * lg.gradient;
            v = beta2 * v + (1.0 - beta2) * lg.gradient.cwiseProduct(lg.gradient);
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            theta.array() -= config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
        }
        const double count = static_cast<double>(data.size());
        result.history.push_back({epoch + 1, loss_sum / count, ratio_sum / count});
    }
    result.params = NetworkParams::unflatten(theta, U, N, lambda);
    return result;
}

void write_history_csv(std::ostream& os, std::span<const EpochStats> history) {
    os << "epoch,mean_loss,train_asr\n";
    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    for (const EpochStats& e : history) {
        os << e.epoch << ',' << e.mean_loss << ',' << e.train_asr << '\n';
    }
    os.precision(old_precision);
}

} // namespace rsma
