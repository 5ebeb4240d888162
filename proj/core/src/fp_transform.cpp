#include "rsma/fp_transform.hpp"

#include <cmath>
#include <sstream>

namespace rsma {

namespace {

std::string phi_message(int stream, double value, const std::string& context) {
    std::ostringstream os;
    os << "non-positive surrogate phi_" << stream << " = " << value;
    if (!context.empty()) {
        os << " (" << context << ")";
    }
    return os.str();
}

double transform(cplx z, cplx a, double b) { return 1.0 + 2.0 * std::real(std::conj(z) * a) - std::norm(z) * b; }

} // namespace

NonPositivePhiError::NonPositivePhiError(int stream, double value, const std::string& context)
    : std::runtime_error(phi_message(stream, value, context)), stream_(stream), value_(value) {}

double private_interference(const ProblemInstance& inst, const BeamformerSet& beams, int k) {
    const auto h = inst.channels.row(k);
    double b = inst.noise_var(k);
    for (int j = 0; j < inst.num_users(); ++j) {
        if (j != k) {
            b += std::norm(h.dot(beams.v.row(j)));
        }
    }
    return b;
}

double common_interference(const ProblemInstance& inst, const BeamformerSet& beams, int k) {
    const auto h = inst.channels.row(k);
    double b = inst.noise_var(k);
    for (int j = 0; j < inst.num_users(); ++j) {
        b += std::norm(h.dot(beams.v.row(j)));
    }
    return b;
}

cplx common_aux(const ProblemInstance& inst, const BeamformerSet& beams, int k) {
    return inst.channels.row(k).dot(beams.v0.transpose()) / common_interference(inst, beams, k);
}

double common_phi(const ProblemInstance& inst, const BeamformerSet& beams, cplx z0, int k) {
    return transform(z0, inst.channels.row(k).dot(beams.v0.transpose()), common_interference(inst, beams, k));
}

AuxState update_aux(const ProblemInstance& inst, const BeamformerSet& beams) {
    check_dimensions(inst, beams);
    const int U = inst.num_users();
    AuxState aux;
    aux.z.resize(U);
    for (int k = 0; k < U; ++k) {
        aux.z(k) = inst.channels.row(k).dot(beams.v.row(k)) / private_interference(inst, beams, k);
    }
    aux.z0 = common_aux(inst, beams, inst.ref_user);
    return aux;
}

SurrogateTerms surrogate_terms(const ProblemInstance& inst, const BeamformerSet& beams, const AuxState& aux) {
    check_dimensions(inst, beams);
    const int U = inst.num_users();
    if (aux.z.size() != U) {
        throw DimensionError("surrogate_terms: aux length differs from number of users");
    }
    SurrogateTerms terms;
    terms.phi.resize(U);
    for (int k = 0; k < U; ++k) {
        terms.phi(k) = transform(aux.z(k), inst.channels.row(k).dot(beams.v.row(k)),
                                 private_interference(inst, beams, k));
    }
    terms.phi0 = common_phi(inst, beams, aux.z0, inst.ref_user);
    return terms;
}

void require_positive(const SurrogateTerms& terms, const std::string& context) {
    if (!(terms.phi0 > 0.0)) {
        throw NonPositivePhiError(0, terms.phi0, context);
    }
    for (int k = 0; k < terms.phi.size(); ++k) {
        if (!(terms.phi(k) > 0.0)) {
            throw NonPositivePhiError(k + 1, terms.phi(k), context);
        }
    }
}

double penalized_objective(const ProblemInstance& inst, const BeamformerSet& beams, const RateAllocation& rc,
                           const AuxState& aux, double lambda) {
    if (rc.rc.size() != inst.num_users()) {
        throw DimensionError("penalized_objective: rate allocation length differs from number of users");
    }
    const SurrogateTerms terms = surrogate_terms(inst, beams, aux);
    require_positive(terms, "penalized_objective");
    double value = 0.0;
    for (int k = 0; k < inst.num_users(); ++k) {
        value += inst.weights(k) * (rc.rc(k) + std::log2(terms.phi(k)));
    }
    return value - lambda * (rc.rc.sum() - std::log2(terms.phi0));
}

} // namespace rsma
