#include "rsma/model.hpp"

#include <cmath>
#include <sstream>

namespace rsma {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double SystemConfig::power_budget() const { return dbm_to_watts(p_max_dbm) - dbm_to_watts(p_c_dbm); }

void SystemConfig::validate() const {
    if (num_users < 1 || num_antennas < 1) {
        throw std::invalid_argument("SystemConfig: num_users and num_antennas must be positive");
    }
    if (!(p_max_dbm > p_c_dbm)) {
        throw std::invalid_argument("SystemConfig: p_max_dbm must exceed p_c_dbm");
    }
    if (!(channel_variance > 0.0) || !(noise_variance > 0.0)) {
        throw std::invalid_argument("SystemConfig: channel and noise variances must be positive");
    }
    if (p0_upper < 0.0) {
        throw std::invalid_argument("SystemConfig: p0_upper must be non-negative");
    }
    if (!(power_budget() > (num_users + 1) * p0_upper)) {
        std::ostringstream os;
        os << "SystemConfig: power budget " << power_budget() << " W does not exceed (U+1)*p0_upper = "
           << (num_users + 1) * p0_upper << " W";
        throw std::invalid_argument(os.str());
    }
}

int weakest_user(const CMatrix& channels) {
    int best = 0;
    double best_norm = channels.row(0).squaredNorm();
    for (int k = 1; k < channels.rows(); ++k) {
        const double n = channels.row(k).squaredNorm();
        if (n < best_norm) {
            best_norm = n;
            best = k;
        }
    }
    return best;
}

ProblemInstance make_instance(CMatrix channels, RVector weights, RVector noise_var, double p0,
                              double power_budget) {
    if (channels.rows() < 1 || channels.cols() < 1) {
        throw std::invalid_argument("make_instance: empty channel matrix");
    }
    ProblemInstance inst;
    inst.channels = std::move(channels);
    inst.weights = std::move(weights);
    inst.noise_var = std::move(noise_var);
    inst.p0 = p0;
    inst.power_budget = power_budget;
    inst.ref_user = weakest_user(inst.channels);
    validate_instance(inst);
    return inst;
}

void validate_instance(const ProblemInstance& inst) {
    const int U = inst.num_users();
    if (U < 1 || inst.num_antennas() < 1) {
        throw std::invalid_argument("ProblemInstance: empty channel matrix");
    }
    if (inst.weights.size() != U || inst.noise_var.size() != U) {
        throw DimensionError("ProblemInstance: weights/noise_var length differs from number of users");
    }
    if ((inst.weights.array() < 0.0).any() || std::abs(inst.weights.sum() - 1.0) > 1e-12) {
        throw std::invalid_argument("ProblemInstance: weights must be non-negative and sum to 1");
    }
    if (!(inst.noise_var.array() > 0.0).all()) {
        throw std::invalid_argument("ProblemInstance: noise variances must be positive");
    }
    if (inst.p0 < 0.0 || !(inst.power_budget > (U + 1) * inst.p0)) {
        throw std::invalid_argument("ProblemInstance: power_budget must exceed (U+1)*p0 >= 0");
    }
    if (inst.ref_user != weakest_user(inst.channels)) {
        throw std::invalid_argument("ProblemInstance: ref_user is not the weakest channel");
    }
}

BeamformerSet BeamformerSet::zeros(int num_users, int num_antennas) {
    return {CVector::Zero(num_antennas), CMatrix::Zero(num_users, num_antennas)};
}

void check_dimensions(const ProblemInstance& inst, const BeamformerSet& beams) {
    if (beams.v.rows() != inst.num_users() || beams.v.cols() != inst.num_antennas() ||
        beams.v0.size() != inst.num_antennas()) {
        std::ostringstream os;
        os << "beamformer shape (" << beams.v.rows() << "x" << beams.v.cols() << ", v0 " << beams.v0.size()
           << ") does not match instance (U=" << inst.num_users() << ", M=" << inst.num_antennas() << ")";
        throw DimensionError(os.str());
    }
}

RateReport compute_rates(const ProblemInstance& inst, const BeamformerSet& beams) {
    check_dimensions(inst, beams);
    const int U = inst.num_users();
    RateReport out;
    out.c.resize(U);
    out.rp.resize(U);
    for (int k = 0; k < U; ++k) {
        const auto h = inst.channels.row(k);
        double private_sum = 0.0;
        double self = 0.0;
        for (int j = 0; j < U; ++j) {
            const double g = std::norm(h.dot(beams.v.row(j)));
            private_sum += g;
            if (j == k) {
                self = g;
            }
        }
        const double common = std::norm(h.dot(beams.v0.transpose()));
        const double noise = inst.noise_var(k);
        out.c(k) = std::log2(1.0 + common / (noise + private_sum));
        out.rp(k) = std::log2(1.0 + self / (noise + private_sum - self));
    }
    Eigen::Index argmin = 0;
    out.min_c = out.c.minCoeff(&argmin);
    out.min_c_user = static_cast<int>(argmin);
    return out;
}

double wsr(const ProblemInstance& inst, const BeamformerSet& beams, const RateAllocation& rc) {
    if (rc.rc.size() != inst.num_users()) {
        throw DimensionError("wsr: rate allocation length differs from number of users");
    }
    const RateReport rates = compute_rates(inst, beams);
    return inst.weights.dot(rc.rc + rates.rp);
}

Feasibility check_feasibility(const ProblemInstance& inst, const BeamformerSet& beams,
                              const RateAllocation& rc, double tol) {
    check_dimensions(inst, beams);
    if (rc.rc.size() != inst.num_users()) {
        throw DimensionError("check_feasibility: rate allocation length differs from number of users");
    }
    const RateReport rates = compute_rates(inst, beams);
    Feasibility f;
    f.power = beams.total_power() <= inst.power_budget + tol;
    f.common_rate = rc.rc.sum() <= rates.min_c + tol;
    f.min_power = beams.v0.squaredNorm() >= inst.p0 - tol;
    for (int k = 0; k < inst.num_users(); ++k) {
        f.min_power = f.min_power && beams.v.row(k).squaredNorm() >= inst.p0 - tol;
    }
    f.nonnegative = (rc.rc.array() >= -tol).all();
    return f;
}

} // namespace rsma
