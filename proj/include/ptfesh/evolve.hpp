#pragma once

#include <optional>
#include <vector>

#include "ptfesh/spectral.hpp"

namespace ptfesh
{

struct EvolutionTrace
{
	std::vector<double> times;
	std::vector<cx> pseudo_norms;
	std::vector<double> euclidean_norms;
	std::vector<CVector> snapshots; // empty unless requested
	// First time index skipped because a growing mode would overflow.
	std::optional<std::size_t> overflow_at;
};

// psi[t] = exp(-iHt) psi0 expanded in pseudo-normalized eigenstates:
//   sum_n |psi_n> Q_n e^{-i E_n t} <psi_n|P|psi0>
//   + |psi_+> e^{-iEt}/c* <psi_-|P|psi0> + |psi_-> e^{-iE*t}/c <psi_+|P|psi0>.
// The quasi-parity is a metric weight, not part of the phase.
class SpectralPropagator
{
public:
	// Largest |Im E| t allowed before the state is considered overflowing.
	static constexpr double overflow_exponent = 700.0;

	SpectralPropagator(const SpectralData& spectral, const OperatorMatrix& P, const CVector& psi0);

	[[nodiscard]] CVector at(double t) const;
	[[nodiscard]] bool overflows(double t) const;

private:
	const SpectralData* spectral_;
	std::vector<cx> coefficients_; // weight * overlap, per level
	double max_growth_ = 0.0;
};

CVector evolve_state(const SpectralData& spectral, const OperatorMatrix& P, const CVector& psi0,
	double t);

EvolutionTrace trace_conservation(const SpectralData& spectral, const OperatorMatrix& P,
	const CVector& psi0, const std::vector<double>& times, bool keep_snapshots = false);

} // namespace ptfesh
