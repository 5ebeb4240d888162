#include "rsma/pgd.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pgd_detail.hpp"
#include "rsma/rng.hpp"

namespace rsma {

namespace {

constexpr double kLn2 = std::numbers::ln2;

// Stream id for the beam initializer so it never collides with other users
// of the same seed.
constexpr std::uint64_t kInitStream = 0x1417;

} // namespace

StepSizes StepSizes::uniform(int num_users, double alpha) {
    return {RVector::Constant(num_users, alpha), alpha, RVector::Constant(num_users, alpha)};
}

StepSizes StepSizes::scaled(double factor) const { return {alpha_rc * factor, alpha_v0 * factor, alpha_v * factor}; }

SolverOptions SolverOptions::pgd_defaults(int num_users) {
    SolverOptions opts;
    opts.steps = StepSizes::uniform(num_users, 1e-3);
    opts.step_decay = 1.0;
    opts.max_iters = 2000;
    opts.tol = 1e-6;
    return opts;
}

SolverOptions SolverOptions::oracle_defaults(int num_users) {
    SolverOptions opts;
    opts.steps = StepSizes::uniform(num_users, 1e-3);
    opts.max_iters = 200;
    opts.tol = 1e-2;
    opts.inner_iters = 500;
    opts.inner_step = 1e-3;
    return opts;
}

void SolverOptions::validate(int num_users) const {
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("SolverOptions: lambda must be positive");
    }
    if (!(tol > 0.0) || max_iters < 1 || inner_iters < 1 || !(inner_step > 0.0)) {
        throw std::invalid_argument("SolverOptions: tol, max_iters, inner_iters and inner_step must be positive");
    }
    if (steps.alpha_rc.size() != num_users || steps.alpha_v.size() != num_users) {
        throw DimensionError("SolverOptions: step-size vectors must have one entry per user");
    }
    if (!(steps.alpha_v0 > 0.0) || !(steps.alpha_rc.array() > 0.0).all() || !(steps.alpha_v.array() > 0.0).all()) {
        throw std::invalid_argument("SolverOptions: step sizes must be strictly positive");
    }
    if (!(step_decay > 0.0)) {
        throw std::invalid_argument("SolverOptions: step_decay must be positive");
    }
}

namespace detail {

GradientSet gradients_at(const ProblemInstance& inst, const BeamformerSet& beams, const AuxState& aux, double lambda,
                         int common_user, bool with_parts) {
    check_dimensions(inst, beams);
    const int U = inst.num_users();
    const int M = inst.num_antennas();

    RVector phi(U);
    for (int k = 0; k < U; ++k) {
        const cplx a = inst.channels.row(k).dot(beams.v.row(k));
        phi(k) = 1.0 + 2.0 * std::real(std::conj(aux.z(k)) * a) - std::norm(aux.z(k)) * private_interference(inst, beams, k);
    }
    const double phi0 = common_phi(inst, beams, aux.z0, common_user);
    SurrogateTerms terms{phi0, phi};
    require_positive(terms, "gradients");

    const CVector h_ref = inst.channels.row(common_user).transpose();

    GradientSet g;
    g.g_rc = inst.weights.array() - lambda;
    g.g_v0 = (2.0 * lambda * aux.z0 / (phi0 * kLn2)) * h_ref;
    g.g_v = CMatrix::Zero(U, M);

    GradientParts parts;
    if (with_parts) {
        parts.zeta.resize(U);
        parts.beta.assign(U, std::vector<CVector>(U));
        parts.o.resize(U);
        parts.phi = phi;
        parts.phi0 = phi0;
    }

    for (int k = 0; k < U; ++k) {
        const CVector zeta = (2.0 * inst.weights(k) * aux.z(k) / kLn2) * inst.channels.row(k).transpose();
        CVector row = zeta / phi(k);
        for (int j = 0; j < U; ++j) {
            if (j == k) {
                continue;
            }
            const cplx a_jk = inst.channels.row(j).dot(beams.v.row(k));
            const CVector beta = (-2.0 * std::norm(aux.z(j)) * inst.weights(j) * a_jk / kLn2) *
                                 inst.channels.row(j).transpose();
            row += beta / phi(j);
            if (with_parts) {
                parts.beta[j][k] = beta;
            }
        }
        const cplx a_rk = h_ref.dot(beams.v.row(k).transpose());
        const CVector o = (-2.0 * lambda * std::norm(aux.z0) * a_rk / (phi0 * kLn2)) * h_ref;
        row += o;
        g.g_v.row(k) = row.transpose();
        if (with_parts) {
            parts.zeta[k] = zeta;
            parts.o[k] = o;
        }
    }
    if (with_parts) {
        g.parts = std::move(parts);
    }
    return g;
}

BeamformerSet add_scaled(const BeamformerSet& beams, const CVector& dv0, const CMatrix& dv, double step) {
    return {beams.v0 + step * dv0, beams.v + step * dv};
}

} // namespace detail

GradientSet gradients(const ProblemInstance& inst, const BeamformerSet& beams, const AuxState& aux, double lambda,
                      bool with_parts) {
    return detail::gradients_at(inst, beams, aux, lambda, inst.ref_user, with_parts);
}

AscentResult ascent_step(const BeamformerSet& beams, const RateAllocation& rc, const GradientSet& grads,
                         const StepSizes& steps) {
    AscentResult out;
    out.rc_tilde = rc.rc + steps.alpha_rc.cwiseProduct(grads.g_rc);
    out.beams.v0 = beams.v0 + steps.alpha_v0 * grads.g_v0;
    out.beams.v = beams.v;
    for (int k = 0; k < beams.v.rows(); ++k) {
        out.beams.v.row(k) += steps.alpha_v(k) * grads.g_v.row(k);
    }
    return out;
}

BeamformerSet project_beamformers(const BeamformerSet& tilde, double power_budget, double p0) {
    const int U = tilde.num_users();
    if (!(p0 >= 0.0) || !(power_budget > (U + 1) * p0)) {
        throw std::invalid_argument("project_beamformers: requires power_budget > (U+1)*p0 >= 0");
    }
    RVector norms(U + 1);
    norms(0) = tilde.v0.squaredNorm();
    for (int k = 0; k < U; ++k) {
        norms(k + 1) = tilde.v.row(k).squaredNorm();
    }
    for (int k = 0; k <= U; ++k) {
        if (norms(k) == 0.0 && p0 > 0.0) {
            std::ostringstream os;
            os << "project_beamformers: beamformer " << k << " is zero and cannot be scaled to p0 = " << p0;
            throw std::invalid_argument(os.str());
        }
    }
    const RVector excess = (norms.array().max(p0) - p0).matrix();
    const double excess_sum = excess.sum();
    RVector target(U + 1);
    if (excess_sum > 0.0) {
        target = excess / excess_sum * (power_budget - (U + 1) * p0);
        target.array() += p0;
    } else {
        target.setConstant(power_budget / (U + 1));
        if ((norms.array() == 0.0).any()) {
            throw std::invalid_argument("project_beamformers: all beamformers are zero");
        }
    }

    BeamformerSet out = tilde;
    auto scale = [&](int k) { return norms(k) > 0.0 ? std::sqrt(target(k) / norms(k)) : 0.0; };
    out.v0 *= scale(0);
    for (int k = 0; k < U; ++k) {
        out.v.row(k) *= scale(k + 1);
    }
    return out;
}

int heaviest_user(const RVector& weights) {
    int best = 0;
    for (int k = 1; k < weights.size(); ++k) {
        if (weights(k) > weights(best)) {
            best = k;
        }
    }
    return best;
}

RateAllocation project_common_rate(const RVector& rc_tilde, const ProblemInstance& inst, const BeamformerSet& beams,
                                   CommonRateMode mode) {
    const int U = inst.num_users();
    const double m = compute_rates(inst, beams).min_c;
    RateAllocation out = RateAllocation::zeros(U);
    if (mode == CommonRateMode::proportional) {
        if (rc_tilde.size() != U) {
            throw DimensionError("project_common_rate: rc_tilde length differs from number of users");
        }
        const RVector positive = rc_tilde.cwiseMax(0.0);
        const double total = positive.sum();
        if (total > 0.0) {
            out.rc = positive / total * m;
            return out;
        }
    }
    out.rc(heaviest_user(inst.weights)) = m;
    return out;
}

Iterate initial_point(const ProblemInstance& inst, std::uint64_t seed) {
    const int U = inst.num_users();
    const int M = inst.num_antennas();
    Rng rng(seed, {kInitStream});
    BeamformerSet beams = BeamformerSet::zeros(U, M);
    for (int m = 0; m < M; ++m) {
        beams.v0(m) = rng.complex_normal();
    }
    for (int k = 0; k < U; ++k) {
        for (int m = 0; m < M; ++m) {
            beams.v(k, m) = rng.complex_normal();
        }
    }
    beams = project_beamformers(beams, inst.power_budget, inst.p0);
    RateAllocation rc = project_common_rate(RVector::Zero(U), inst, beams);
    return {std::move(beams), std::move(rc)};
}

Iterate mrt_heuristic(const ProblemInstance& inst) {
    const int U = inst.num_users();
    const double power = inst.power_budget / (U + 1);
    BeamformerSet beams = BeamformerSet::zeros(U, inst.num_antennas());
    for (int k = 0; k < U; ++k) {
        const auto h = inst.channels.row(k);
        beams.v.row(k) = h / h.norm() * std::sqrt(power);
        beams.v0 += (h / h.norm()).transpose();
    }
    if (beams.v0.norm() == 0.0) {
        beams.v0 = inst.channels.row(inst.ref_user).transpose();
    }
    beams.v0 *= std::sqrt(power) / beams.v0.norm();
    RateAllocation rc = project_common_rate(RVector::Zero(U), inst, beams);
    return {std::move(beams), std::move(rc)};
}

Solution solve_pgd(const ProblemInstance& inst, const SolverOptions& opts, const std::optional<BeamformerSet>& init) {
    opts.validate(inst.num_users());
    Iterate it;
    if (init) {
        check_dimensions(inst, *init);
        it.beams = project_beamformers(*init, inst.power_budget, inst.p0);
        it.rc = project_common_rate(RVector::Zero(inst.num_users()), inst, it.beams);
    } else {
        it = initial_point(inst, opts.seed);
    }

    Solution sol;
    StepSizes steps = opts.steps;
    double prev = wsr(inst, it.beams, it.rc);
    for (int iter = 1; iter <= opts.max_iters; ++iter) {
        const AuxState aux = update_aux(inst, it.beams);
        GradientSet grads;
        try {
            grads = gradients(inst, it.beams, aux, opts.lambda);
        } catch (const NonPositivePhiError& e) {
            throw NonPositivePhiError(e.stream(), e.value(), "solve_pgd iteration " + std::to_string(iter));
        }
        AscentResult step = ascent_step(it.beams, it.rc, grads, steps);
        it.beams = project_beamformers(step.beams, inst.power_budget, inst.p0);
        it.rc = project_common_rate(step.rc_tilde, inst, it.beams, opts.rate_mode);

        const double value = wsr(inst, it.beams, it.rc);
        sol.trace.wsr_per_iter.push_back(value);
        sol.trace.feasible_per_iter.push_back(check_feasibility(inst, it.beams, it.rc, 1e-9).all());
        sol.trace.iterations_used = iter;
        if (opts.keep_iterates) {
            sol.trace.iterates.push_back(it);
        }
        steps = steps.scaled(opts.step_decay);
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

void write_trace_csv(std::ostream& os, const SolverTrace& trace) {
    os << "iter,wsr,feasible\n";
    const auto old_precision = os.precision(17);
    for (std::size_t i = 0; i < trace.wsr_per_iter.size(); ++i) {
        os << (i + 1) << ',' << trace.wsr_per_iter[i] << ',' << (trace.feasible_per_iter[i] ? 1 : 0) << '\n';
    }
    os.precision(old_precision);
}

} // namespace rsma
