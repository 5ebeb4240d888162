#pragma once

// Projected gradient ascent on the penalized surrogate, the power and
// common-rate projections, and the fractional-programming reference solver.
//
// Complex gradients follow the real-parametrization convention: for a real
// objective L, the returned G satisfies dL(v + t d)/dt = Re{G^H d} at t = 0,
// i.e. [Re G; Im G] is the ordinary gradient in [Re v; Im v].

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "rsma/fp_transform.hpp"
#include "rsma/model.hpp"

namespace rsma {

/// Per-term decomposition of the private-beamformer gradient.
struct GradientParts {
    std::vector<CVector> zeta;              // zeta_k, self term of user k
    std::vector<std::vector<CVector>> beta; // beta[j][k] = beta_{j,k}; empty when j == k
    std::vector<CVector> o;                 // o_k, penalty term through phi0
    RVector phi;
    double phi0 = 1.0;
};

struct GradientSet {
    RVector g_rc;
    CVector g_v0;
    CMatrix g_v;
    std::optional<GradientParts> parts;
};

struct StepSizes {
    RVector alpha_rc; // alpha_{1,k}
    double alpha_v0 = 1e-3;
    RVector alpha_v;  // alpha_{3,k}

    static StepSizes uniform(int num_users, double alpha);
    StepSizes scaled(double factor) const;
};

enum class CommonRateMode { simplified, proportional };

struct SolverOptions {
    double lambda = 1.0;
    StepSizes steps;
    double step_decay = 1.0; // geometric factor applied to every step after each iteration
    int max_iters = 500;
    double tol = 1e-2;
    int inner_iters = 500;
    double inner_step = 1e-3;
    std::uint64_t seed = 0;
    CommonRateMode rate_mode = CommonRateMode::simplified;
    bool keep_iterates = false;

    static SolverOptions pgd_defaults(int num_users);
    static SolverOptions oracle_defaults(int num_users);
    void validate(int num_users) const;
};

struct Iterate {
    BeamformerSet beams;
    RateAllocation rc;
};

struct SolverTrace {
    std::vector<double> wsr_per_iter;
    std::vector<bool> feasible_per_iter;
    int iterations_used = 0;
    bool converged = false;
    std::vector<Iterate> iterates; // only filled when keep_iterates is set
};

struct Solution {
    BeamformerSet beams;
    RateAllocation rc;
    SolverTrace trace;
};

GradientSet gradients(const ProblemInstance& inst, const BeamformerSet& beams, const AuxState& aux, double lambda,
                      bool with_parts = false);

struct AscentResult {
    BeamformerSet beams;
    RVector rc_tilde;
};

AscentResult ascent_step(const BeamformerSet& beams, const RateAllocation& rc, const GradientSet& grads,
                         const StepSizes& steps);

/// Rescales each beamformer along its own direction so the total power equals
/// the budget and each squared norm is at least p0.
BeamformerSet project_beamformers(const BeamformerSet& tilde, double power_budget, double p0);

RateAllocation project_common_rate(const RVector& rc_tilde, const ProblemInstance& inst, const BeamformerSet& beams,
                                   CommonRateMode mode = CommonRateMode::simplified);

/// First index among the users with the largest weight.
int heaviest_user(const RVector& weights);

/// Random complex Gaussian beams, projected, with simplified common rates.
Iterate initial_point(const ProblemInstance& inst, std::uint64_t seed);

/// Maximum-ratio baseline: v_k along h_k, v0 along the sum of unit channels,
/// equal power split, simplified common rates.
Iterate mrt_heuristic(const ProblemInstance& inst);

Solution solve_pgd(const ProblemInstance& inst, const SolverOptions& opts,
                   const std::optional<BeamformerSet>& init = std::nullopt);

/// Fractional-programming reference solver: alternates closed-form auxiliary
/// updates with an inner projected-gradient maximization of the surrogate.
Solution solve_fp_oracle(const ProblemInstance& inst, const SolverOptions& opts,
                         const std::optional<BeamformerSet>& init = std::nullopt);

/// CSV rows "iter,wsr,feasible" with a header line.
void write_trace_csv(std::ostream& os, const SolverTrace& trace);

} // namespace rsma
