#pragma once

// Deep-unfolded projected gradient ascent.
//
// Each layer recomputes the auxiliaries, applies a learned reweighting of the
// gradient terms, and projects back onto the feasible set. Layer n owns
//   w0  (U+2)        scale of the common-beam step, through phi_env . w0
//   w   U x (U+2)    per-user step scale, through phi_env . w_k
//   eta U x (U+1)    per-user term weights: [self, cross terms for j != k in
//                    ascending j, penalty]
// where phi_env = [f_1..f_U, p0, power_budget].

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rsma/model.hpp"
#include "rsma/pgd.hpp"

namespace rsma {

using RMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RVector env_vector(const ProblemInstance& inst);

struct LayerParams {
    RVector w0;
    RMatrix w;
    RMatrix eta;

    static LayerParams zeros(int num_users);
    int num_users() const { return static_cast<int>(w.rows()); }
    static std::size_t flat_size(int num_users);
};

struct NetworkParams {
    std::vector<LayerParams> layers;
    double lambda = 1.0;

    int num_layers() const { return static_cast<int>(layers.size()); }
    int num_users() const { return layers.empty() ? 0 : layers.front().num_users(); }
    void validate() const;

    std::size_t flat_size() const;
    /// Layer-major: w0, then w row-major, then eta row-major.
    RVector flatten() const;
    static NetworkParams unflatten(const RVector& flat, int num_users, int num_layers, double lambda);
};

enum class InitScheme { random_small, pgd_mimic };

/// random_small: i.i.d. Normal(0, 0.01^2). pgd_mimic: each layer reproduces one
/// plain ascent step with `steps`, geometrically decayed by `decay` per layer.
NetworkParams init_params(int num_users, int num_layers, std::uint64_t seed, InitScheme scheme,
                          const StepSizes& steps = {}, double lambda = 1.0, double decay = 1.0);

Iterate layer_forward(const Iterate& state, const LayerParams& layer, const ProblemInstance& inst, double lambda,
                      int layer_index = 0);

struct LayerOutput {
    BeamformerSet beams;
    RateAllocation rc;
    double wsr_hat = 0.0;
};

struct ForwardTrace {
    std::vector<LayerOutput> layers;

    double final_wsr() const { return layers.empty() ? 0.0 : layers.back().wsr_hat; }
};

ForwardTrace network_forward(const ProblemInstance& inst, const NetworkParams& params, std::uint64_t seed);
ForwardTrace network_forward_from(const ProblemInstance& inst, const NetworkParams& params, const Iterate& init);

/// (1/(QN)) sum_q sum_n log2(n+1) (wsr_star_q - wsr_hat_{q,n}).
double batch_loss(std::span<const ForwardTrace> traces, std::span<const double> labels);

enum class GradMode { reverse, finite_diff };

/// Forward or backward failure on one batch element.
class SampleError : public std::runtime_error {
public:
    SampleError(std::size_t sample, const std::string& what)
        : std::runtime_error("sample " + std::to_string(sample) + ": " + what), sample_(sample) {}
    std::size_t sample() const noexcept { return sample_; }

private:
    std::size_t sample_;
};

struct TrainConfig {
    double learning_rate = 0.003;
    int batch_size = 64;
    int epochs = 100;
    std::uint64_t seed = 0;
    GradMode grad_mode = GradMode::reverse;
    bool z_backprop = true;
    double fd_step = 1e-5;

    void validate() const;
};

/// Non-owning view of one training example.
struct TrainingSample {
    const ProblemInstance* instance = nullptr;
    double wsr_star = 0.0;
    std::uint64_t init_seed = 0; // seed of the random initial beams
};

struct LossAndGradient {
    double loss = 0.0;
    RVector gradient;                // flat, same layout as NetworkParams::flatten
    std::vector<double> final_wsr;   // per sample, last layer
};

/// Batch loss and its gradient with respect to every parameter.
LossAndGradient param_gradients(std::span<const TrainingSample> batch, const NetworkParams& params,
                                const TrainConfig& config);

/// Batch loss evaluated by the same graph the gradients differentiate.
double graph_loss(std::span<const TrainingSample> batch, const NetworkParams& params, bool z_backprop = true);

struct LabeledInstance {
    ProblemInstance instance;
    double wsr_star = 0.0;
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double train_asr = 0.0;
};

struct TrainResult {
    NetworkParams params;
    std::vector<EpochStats> history;
};

/// Minibatch Adam (0.9, 0.999, 1e-8). Initial beams for sample i in epoch e
/// are drawn from derive_seed(config.seed, {e, i}).
TrainResult train(std::span<const LabeledInstance> data, NetworkParams params, const TrainConfig& config);

void write_history_csv(std::ostream& os, std::span<const EpochStats> history);

std::string params_to_json(const NetworkParams& params);
NetworkParams params_from_json(const std::string& text);
void save_params(const std::string& path, const NetworkParams& params);
NetworkParams load_params(const std::string& path);

} // namespace rsma
