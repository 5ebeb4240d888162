#pragma once

// Quadratic-transform machinery for the fractional-programming surrogate.
//
// For a ratio |a|^2 / b the transform 1 + 2 Re{conj(z) a} - |z|^2 b is
// concave in the beamformers for fixed z and equals 1 + |a|^2 / b at
// z = a / b. Private streams use a = h_k^H v_k with b = noise plus private
// interference; the common stream uses the designated reference user.

#include <stdexcept>
#include <string>

#include "rsma/model.hpp"

namespace rsma {

struct AuxState {
    cplx z0{0.0, 0.0};
    CVector z;
};

struct SurrogateTerms {
    double phi0 = 1.0;
    RVector phi;
};

/// Thrown when a surrogate value that must go through log2 is not positive.
/// stream() is 0 for the common term and k+1 for user k.
class NonPositivePhiError : public std::runtime_error {
public:
    NonPositivePhiError(int stream, double value, const std::string& context = {});
    int stream() const noexcept { return stream_; }
    double value() const noexcept { return value_; }

private:
    int stream_;
    double value_;
};

/// Noise plus interference seen by the private stream of user k.
double private_interference(const ProblemInstance& inst, const BeamformerSet& beams, int k);
/// Noise plus all private-stream power seen by user k (common-stream denominator).
double common_interference(const ProblemInstance& inst, const BeamformerSet& beams, int k);

AuxState update_aux(const ProblemInstance& inst, const BeamformerSet& beams);

/// Common-stream auxiliary for an arbitrary user k (update_aux uses ref_user).
cplx common_aux(const ProblemInstance& inst, const BeamformerSet& beams, int k);
/// Common-stream transform value for user k with auxiliary z0.
double common_phi(const ProblemInstance& inst, const BeamformerSet& beams, cplx z0, int k);

/// Does not throw; callers that take log2 must check positivity.
SurrogateTerms surrogate_terms(const ProblemInstance& inst, const BeamformerSet& beams, const AuxState& aux);

/// Throws NonPositivePhiError naming the first non-positive term.
void require_positive(const SurrogateTerms& terms, const std::string& context = {});

/// L = sum_k f_k (rc_k + log2 phi_k) - lambda (sum_k rc_k - log2 phi0).
double penalized_objective(const ProblemInstance& inst, const BeamformerSet& beams, const RateAllocation& rc,
                           const AuxState& aux, double lambda);

} // namespace rsma
