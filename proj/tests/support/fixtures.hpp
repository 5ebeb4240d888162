#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "rsma/datagen.hpp"
#include "rsma/fp_transform.hpp"
#include "rsma/model.hpp"
#include "rsma/pgd.hpp"
#include "rsma/rng.hpp"

namespace rsma::testing {

inline SystemConfig small_config(int users, int antennas) {
    SystemConfig c;
    c.num_users = users;
    c.num_antennas = antennas;
    return c;
}

inline ProblemInstance random_instance(int users, int antennas, std::uint64_t seed) {
    Rng rng(seed, {0x7e57});
    return sample_instance(small_config(users, antennas), rng);
}

/// Projected random beams; feasible for the instance's budget and p0.
inline BeamformerSet random_beams(const ProblemInstance& inst, std::uint64_t seed) {
    return initial_point(inst, seed).beams;
}

/// Unprojected Gaussian beams with a random overall scale.
inline BeamformerSet raw_beams(int users, int antennas, Rng& rng) {
    BeamformerSet b = BeamformerSet::zeros(users, antennas);
    const double scale = std::exp(rng.uniform(-3.0, 3.0));
    for (int m = 0; m < antennas; ++m) {
        b.v0(m) = scale * rng.complex_normal();
        for (int k = 0; k < users; ++k) {
            b.v(k, m) = scale * rng.complex_normal() * rng.uniform();
        }
    }
    return b;
}

/// ||a - b|| / ||b||, falling back to the absolute error when b vanishes.
template <class A, class B>
double rel_error(const A& a, const B& b) {
    const double denom = b.norm();
    const double num = (a - b).norm();
    return denom > 0.0 ? num / denom : num;
}

inline double max_abs_diff(const BeamformerSet& a, const BeamformerSet& b) {
    return std::max((a.v0 - b.v0).cwiseAbs().maxCoeff(), (a.v - b.v).cwiseAbs().maxCoeff());
}

/// Central differences of the penalized objective over the real and imaginary
/// parts of every beam entry, packed as a GradientSet (g_rc left empty).
inline GradientSet fd_gradients(const ProblemInstance& inst, const BeamformerSet& beams, const RateAllocation& rc,
                                const AuxState& aux, double lambda, double h = 1e-6) {
    auto L = [&](const BeamformerSet& b) { return penalized_objective(inst, b, rc, aux, lambda); };
    auto partial = [&](cplx& entry, BeamformerSet& b) {
        const cplx saved = entry;
        entry = saved + h;
        const double re_plus = L(b);
        entry = saved - h;
        const double re_minus = L(b);
        entry = saved + cplx(0.0, h);
        const double im_plus = L(b);
        entry = saved - cplx(0.0, h);
        const double im_minus = L(b);
        entry = saved;
        return cplx((re_plus - re_minus) / (2.0 * h), (im_plus - im_minus) / (2.0 * h));
    };
    GradientSet g;
    BeamformerSet b = beams;
    g.g_v0 = CVector::Zero(b.v0.size());
    g.g_v = CMatrix::Zero(b.v.rows(), b.v.cols());
    for (Eigen::Index m = 0; m < b.v0.size(); ++m) {
        g.g_v0(m) = partial(b.v0(m), b);
    }
    for (Eigen::Index k = 0; k < b.v.rows(); ++k) {
        for (Eigen::Index m = 0; m < b.v.cols(); ++m) {
            g.g_v(k, m) = partial(b.v(k, m), b);
        }
    }
    return g;
}

/// Relative error of the stacked beam gradient [g_v0; vec(g_v)].
inline double gradient_rel_error(const GradientSet& analytic, const GradientSet& reference) {
    const double num = (analytic.g_v0 - reference.g_v0).squaredNorm() + (analytic.g_v - reference.g_v).squaredNorm();
    const double den = reference.g_v0.squaredNorm() + reference.g_v.squaredNorm();
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

/// A random (instance, beams, rc, aux, lambda) tuple with positive surrogates.
struct GradientTuple {
    ProblemInstance inst;
    BeamformerSet beams;
    RateAllocation rc;
    AuxState aux;
    double lambda = 1.0;
};

inline GradientTuple random_gradient_tuple(int users, int antennas, std::uint64_t seed) {
    Rng rng(seed, {0x9a});
    GradientTuple t;
    t.inst = random_instance(users, antennas, seed);
    t.beams = random_beams(t.inst, seed);
    // Auxiliaries from a nearby point, so they are not at the fixed point of t.beams.
    BeamformerSet nearby = t.beams;
    nearby.v0 += 0.1 * raw_beams(users, antennas, rng).v0.normalized() * std::sqrt(t.inst.power_budget);
    nearby.v += 0.1 * raw_beams(users, antennas, rng).v.normalized() * std::sqrt(t.inst.power_budget);
    t.aux = update_aux(t.inst, nearby);
    const SurrogateTerms s = surrogate_terms(t.inst, t.beams, t.aux);
    if (s.phi0 <= 0.0 || (s.phi.array() <= 0.0).any()) {
        t.aux = update_aux(t.inst, t.beams);
    }
    t.rc = RateAllocation::zeros(users);
    for (int k = 0; k < users; ++k) {
        t.rc.rc(k) = rng.uniform(0.0, 1.0);
    }
    t.lambda = rng.uniform(0.5, 3.0);
    return t;
}

} // namespace rsma::testing
