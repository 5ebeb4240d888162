#pragma once

#include "rsma/pgd.hpp"

namespace rsma::detail {

/// Gradient of sum_k f_k log2 phi_k + lambda log2 phi0 where phi0 is taken at
/// user `common_user` with auxiliary aux.z0. The public gradients() calls this
/// with common_user = inst.ref_user.
GradientSet gradients_at(const ProblemInstance& inst, const BeamformerSet& beams, const AuxState& aux, double lambda,
                         int common_user, bool with_parts);

BeamformerSet add_scaled(const BeamformerSet& beams, const CVector& dv0, const CMatrix& dv, double step);

} // namespace rsma::detail
