#pragma once

// Downlink multi-user MISO rate-splitting system model.
//
// A base station with M antennas serves U single-antenna users. Every user
// decodes a shared common stream (beamformer v0) and then its own private
// stream (beamformer v_k). Rates are evaluated analytically from the
// channels and beamformers; no symbol-level simulation is done here.
//
// Channel matrices are stored row-major with row k holding h_k. Inner
// products h_k^H v use Eigen's conjugating dot, i.e. h.dot(v).

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace rsma {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using CMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised when two objects describing the same system disagree on U or M.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

double dbm_to_watts(double dbm);

struct SystemConfig {
    int num_users = 3;
    int num_antennas = 12;
    double p_max_dbm = 33.0;
    double p_c_dbm = 30.0;
    double p0_upper = 0.125;        // watts
    double channel_variance = 10.0; // per-entry variance of h_k
    double noise_variance = 1.0;
    std::uint64_t seed = 0;

    /// Transmit budget after circuit power: watts(p_max) - watts(p_c).
    double power_budget() const;

    /// Throws std::invalid_argument when the configuration cannot produce
    /// a valid instance.
    void validate() const;
};

struct ProblemInstance {
    CMatrix channels;  // U x M, row k = h_k
    RVector weights;   // f_k, on the simplex
    RVector noise_var; // sigma_k^2
    double p0 = 0.0;   // minimum power per beamformer (watts)
    double power_budget = 1.0;
    int ref_user = 0;  // 0-based index of the weakest channel

    int num_users() const { return static_cast<int>(channels.rows()); }
    int num_antennas() const { return static_cast<int>(channels.cols()); }
};

/// Index of the user with the smallest ||h_k||, lowest index on ties.
int weakest_user(const CMatrix& channels);

/// Builds an instance and fills ref_user; throws std::invalid_argument when
/// an invariant is violated.
ProblemInstance make_instance(CMatrix channels, RVector weights, RVector noise_var, double p0,
                              double power_budget);

/// Checks every ProblemInstance invariant (simplex weights, positive noise,
/// budget above (U+1) p0, ref_user consistent with the channels).
void validate_instance(const ProblemInstance& inst);

struct BeamformerSet {
    CVector v0; // common-stream beamformer
    CMatrix v;  // U x M, row k = private beamformer of user k

    static BeamformerSet zeros(int num_users, int num_antennas);
    int num_users() const { return static_cast<int>(v.rows()); }
    int num_antennas() const { return static_cast<int>(v0.size()); }
    double total_power() const { return v0.squaredNorm() + v.squaredNorm(); }
};

struct RateAllocation {
    RVector rc; // common-rate shares R_k^c

    static RateAllocation zeros(int num_users) { return {RVector::Zero(num_users)}; }
};

struct RateReport {
    RVector c;  // common-stream capacity at each user
    RVector rp; // private rates
    double min_c = 0.0;
    int min_c_user = 0;
};

struct Feasibility {
    bool power = false;
    bool common_rate = false;
    bool min_power = false;
    bool nonnegative = false;

    bool all() const { return power && common_rate && min_power && nonnegative; }
};

RateReport compute_rates(const ProblemInstance& inst, const BeamformerSet& beams);

/// Weighted sum rate sum_k f_k (rc_k + rp_k).
double wsr(const ProblemInstance& inst, const BeamformerSet& beams, const RateAllocation& rc);

Feasibility check_feasibility(const ProblemInstance& inst, const BeamformerSet& beams,
                              const RateAllocation& rc, double tol);

void check_dimensions(const ProblemInstance& inst, const BeamformerSet& beams);

} // namespace rsma
