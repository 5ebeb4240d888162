#pragma once

// Experiment harness: ASR metric, distribution-shift scenarios and timing.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rsma/datagen.hpp"
#include "rsma/pgd.hpp"
#include "rsma/unfold.hpp"

namespace rsma {

struct Metrics {
    double asr = 0.0;
    std::vector<double> per_sample_ratio;
    std::size_t n_samples = 0;
    std::vector<double> per_layer_asr; // empty unless produced by evaluate()
};

/// Mean of wsr_hat[q] / wsr_star[q]. Throws on a length mismatch or a
/// non-positive label.
Metrics asr(std::span<const double> wsr_hat, std::span<const double> wsr_star);

/// Runs the network on every labeled record. Record i starts from
/// initial_point(instance, derive_seed(seed, {i})).
Metrics evaluate(const Dataset& dataset, const NetworkParams& params, std::uint64_t seed);

/// ASR of the oracle solutions stored in the dataset against their own labels.
Metrics evaluate_solutions(const Dataset& dataset);

struct OodScenario {
    enum class Kind { snr, pmax };
    Kind kind = Kind::snr;
    double delta = 0.0; // dB for snr, dBm for pmax

    /// Accepts "snr+5", "snr-5", "pmax+1", "pmax-1.5", ...
    static OodScenario parse(const std::string& text);
    std::string name() const;
};

/// Shifts channel strength or the transmit budget of every record, then
/// re-labels with the dataset's own oracle settings and stored solver seeds.
/// Pass relabel_records = false to inspect the transformed instances only.
Dataset ood_transform(const Dataset& dataset, const OodScenario& scenario, bool relabel_records = true);

struct TimingSummary {
    double mean = 0.0;
    double median = 0.0;
    double p95 = 0.0;
};

struct TimingStats {
    std::vector<double> du_seconds; // per record, mean over repetitions
    std::vector<double> fp_seconds;
    TimingSummary du;
    TimingSummary fp;
};

TimingSummary summarize(std::span<const double> seconds);

/// Times network_forward and solve_fp_oracle on every record, one at a time
/// on the calling thread. One untimed warm-up run of each precedes the loop.
TimingStats bench(const Dataset& dataset, const NetworkParams& params, const SolverOptions& oracle_opts,
                  int repetitions, std::uint64_t seed);

/// Empirical CDF as rows "seconds,fraction" over the sorted times.
void write_cdf_csv(std::ostream& os, std::span<const double> seconds);

} // namespace rsma
