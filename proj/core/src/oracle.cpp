// Fractional-programming reference solver.
//
// Each outer iteration fixes the quadratic-transform auxiliaries at the
// current beams and maximizes
//
//   S(v) = sum_k f_k log2 phi_k(v) + f_max * min_k log2 phi0_k(v)
//
// over the projected power set, where phi0_k is the common-stream transform
// at user k. With the common rate placed on the heaviest user, S equals the
// weighted sum rate at the current beams and lower-bounds it everywhere else,
// so any inner improvement of S is an improvement of the weighted sum rate.

#include <algorithm>
#include <cmath>
#include <limits>

#include "pgd_detail.hpp"
#include "rsma/pgd.hpp"

namespace rsma {

namespace {

struct OracleAux {
    CVector z;  // private auxiliaries
    CVector z0; // common auxiliary per user
};

OracleAux oracle_aux(const ProblemInstance& inst, const BeamformerSet& beams) {
    const int U = inst.num_users();
    OracleAux aux;
    aux.z.resize(U);
    aux.z0.resize(U);
    for (int k = 0; k < U; ++k) {
        aux.z(k) = inst.channels.row(k).dot(beams.v.row(k)) / private_interference(inst, beams, k);
        aux.z0(k) = common_aux(inst, beams, k);
    }
    return aux;
}

struct SurrogateValue {
    double value = -std::numeric_limits<double>::infinity();
    int active_user = 0; // user attaining the common minimum
};

SurrogateValue surrogate(const ProblemInstance& inst, const BeamformerSet& beams, const OracleAux& aux, double f_max) {
    const int U = inst.num_users();
    SurrogateValue out;
    double total = 0.0;
    for (int k = 0; k < U; ++k) {
        const cplx a = inst.channels.row(k).dot(beams.v.row(k));
        const double phi = 1.0 + 2.0 * std::real(std::conj(aux.z(k)) * a) -
                           std::norm(aux.z(k)) * private_interference(inst, beams, k);
        if (!(phi > 0.0)) {
            return out;
        }
        total += inst.weights(k) * std::log2(phi);
    }
    double min_common = std::numeric_limits<double>::infinity();
    for (int k = 0; k < U; ++k) {
        const double phi0 = common_phi(inst, beams, aux.z0(k), k);
        if (!(phi0 > 0.0)) {
            return out;
        }
        if (std::log2(phi0) < min_common) {
            min_common = std::log2(phi0);
            out.active_user = k;
        }
    }
    out.value = total + f_max * min_common;
    return out;
}

BeamformerSet maximize_surrogate(const ProblemInstance& inst, const BeamformerSet& start, const OracleAux& aux,
                                 double f_max, const SolverOptions& opts) {
    BeamformerSet current = start;
    SurrogateValue current_value = surrogate(inst, current, aux, f_max);
    double step = opts.inner_step;
    for (int t = 0; t < opts.inner_iters; ++t) {
        const int r = current_value.active_user;
        const AuxState grad_aux{aux.z0(r), aux.z};
        const GradientSet g = detail::gradients_at(inst, current, grad_aux, f_max, r, false);
        const BeamformerSet candidate = project_beamformers(detail::add_scaled(current, g.g_v0, g.g_v, step),
                                                            inst.power_budget, inst.p0);
        const SurrogateValue candidate_value = surrogate(inst, candidate, aux, f_max);
        if (candidate_value.value >= current_value.value) {
            current = candidate;
            current_value = candidate_value;
            step *= 1.25;
        } else {
            step *= 0.5;
            if (step < 1e-14) {
                break;
            }
        }
    }
    return current;
}

} // namespace

Solution solve_fp_oracle(const ProblemInstance& inst, const SolverOptions& opts,
                         const std::optional<BeamformerSet>& init) {
    opts.validate(inst.num_users());
    const int U = inst.num_users();
    const double f_max = inst.weights(heaviest_user(inst.weights));

    Iterate it;
    if (init) {
        check_dimensions(inst, *init);
        it.beams = project_beamformers(*init, inst.power_budget, inst.p0);
        it.rc = project_common_rate(RVector::Zero(U), inst, it.beams);
    } else {
        it = initial_point(inst, opts.seed);
    }

    Solution sol;
    double prev = wsr(inst, it.beams, it.rc);
    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        const OracleAux aux = oracle_aux(inst, it.beams);
        it.beams = maximize_surrogate(inst, it.beams, aux, f_max, opts);
        it.rc = project_common_rate(RVector::Zero(U), inst, it.beams);

        const double value = wsr(inst, it.beams, it.rc);
        sol.trace.wsr_per_iter.push_back(value);
        sol.trace.feasible_per_iter.push_back(check_feasibility(inst, it.beams, it.rc, 1e-9).all());
        sol.trace.iterations_used = iter;
        if (opts.keep_iterates) {
            sol.trace.iterates.push_back(it);
        }
        if (std::abs(value - prev) < opts.tol) {
            sol.trace.converged = true;
            break;
        }
        prev = value;
    }
    sol.beams = std::move(it.beams);
    sol.rc = std::move(it.rc);
    return sol;
}

} // namespace rsma
