#pragma once

#include <functional>
#include <vector>

#include "ptfesh/spectral.hpp"

namespace ptfesh
{

enum class InnerMode
{
	metric,   // psi^dag P phi
	bilinear  // psi^T phi, the T-acts-right form after P^2 = 1 is dropped
};

cx pseudo_inner(const CVector& psi, const CVector& phi, const OperatorMatrix& P,
	InnerMode mode = InnerMode::metric);

// |self pseudo-norm| below this fraction of |psi|^2 means "undefined".
inline constexpr double degeneracy_threshold = 1e-8;

QuasiParity assign_quasi_parity(const CVector& psi, const OperatorMatrix& P,
	double threshold = degeneracy_threshold);

/// Returns P when H^dag = P H P (the indefinite metric is conserved), the
/// identity when H is Hermitian but does not commute that way, and throws
/// StructureError otherwise.
OperatorMatrix choose_metric(const OperatorMatrix& H, const OperatorMatrix& P);

/// Scales real levels to <psi_n|P|psi_n> = Q_n and replaces each pair partner
/// by the antilinear image of the unit-norm psi_plus, recording
/// c = <psi_plus|P|psi_minus>.
SpectralData pseudo_normalize(const SpectralData& spectral, const OperatorMatrix& P);

struct PseudoNormReport
{
	CMatrix gram;
	// Largest |<psi_m|P|psi_n>|, m != n, outside linked pairs.
	double max_offdiag_violation = 0.0;
	// Largest deviation of gram from diag(Q) + [[0, c], [c*, 0]] blocks.
	double max_structure_deviation = 0.0;
	std::vector<cx> self_norms;
};

PseudoNormReport gram_report(const SpectralData& spectral, const OperatorMatrix& P);

/// sum_n |psi_n> Q_n f(E_n) <psi_n|P| + pair terms
/// |psi_+> f(E)/c* <psi_-|P| + |psi_-> f(E*)/c <psi_+|P|.
CMatrix spectral_sum(const SpectralData& spectral, const OperatorMatrix& P,
	const std::function<cx(cx)>& f);

/// Max-entry deviation of spectral_sum(1) from the identity.
double reconstruct_identity(const SpectralData& spectral, const OperatorMatrix& P);

/// Max-entry deviation of spectral_sum(E) from H, relative to max|H|.
double reconstruct_hamiltonian(const SpectralData& spectral, const OperatorMatrix& P,
	const OperatorMatrix& H);

} // namespace ptfesh
