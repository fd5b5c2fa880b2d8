#include "ptfesh/evolve.hpp"

#include <cmath>

#include "ptfesh/errors.hpp"

namespace ptfesh
{

SpectralPropagator::SpectralPropagator(const SpectralData& spectral, const OperatorMatrix& P,
	const CVector& psi0)
	: spectral_(&spectral)
{
	if(!spectral.pseudo_normalized)
	{
		throw ContractError("evolution needs pseudo-normalized spectral data");
	}
	if(psi0.size() != P.dim() || spectral.dim() != P.dim())
	{
		throw std::invalid_argument("evolution: dimension mismatch");
	}
	const Eigen::Index n = spectral.size();
	// overlaps(k) = <psi_k|P|psi0>
	const CVector overlaps = spectral.vectors.adjoint() * (P.entries() * psi0);
	coefficients_.assign(n, cx{0.0, 0.0});
	for(Eigen::Index k = 0; k < n; ++k)
	{
		if(spectral.is_real(k))
		{
			coefficients_[k] = double(int(spectral.quasi_parities[k])) * overlaps(k);
		}
		else if(spectral.pair_of(k) < 0)
		{
			throw ContractError("complex level without pair link");
		}
		max_growth_ = std::max(max_growth_, spectral.eigenvalues[k].imag());
	}
	for(const PairLink& link : spectral.pairs)
	{
		coefficients_[link.plus] = overlaps(link.minus) / std::conj(link.c);
		coefficients_[link.minus] = overlaps(link.plus) / link.c;
	}
}

bool SpectralPropagator::overflows(double t) const
{
	return max_growth_ * std::abs(t) > overflow_exponent;
}

CVector SpectralPropagator::at(double t) const
{
	const SpectralData& s = *spectral_;
	CVector amp(s.size());
	for(Eigen::Index k = 0; k < s.size(); ++k)
	{
		amp(k) = coefficients_[k] * std::exp(cx{0.0, -t} * s.eigenvalues[k]);
	}
	return s.vectors * amp;
}

CVector evolve_state(const SpectralData& spectral, const OperatorMatrix& P, const CVector& psi0,
	double t)
{
	return SpectralPropagator(spectral, P, psi0).at(t);
}

EvolutionTrace trace_conservation(const SpectralData& spectral, const OperatorMatrix& P,
	const CVector& psi0, const std::vector<double>& times, bool keep_snapshots)
{
	for(std::size_t i = 1; i < times.size(); ++i)
	{
		if(!(times[i] > times[i - 1]))
		{
			throw std::invalid_argument("trace times must be strictly increasing");
		}
	}
	const SpectralPropagator prop(spectral, P, psi0);
	EvolutionTrace trace;
	for(std::size_t i = 0; i < times.size(); ++i)
	{
		if(prop.overflows(times[i]))
		{
			trace.overflow_at = i;
			break;
		}
		const CVector psi = prop.at(times[i]);
		trace.times.push_back(times[i]);
		trace.pseudo_norms.push_back(psi.dot(P.entries() * psi));
		trace.euclidean_norms.push_back(psi.norm());
		if(keep_snapshots)
		{
			trace.snapshots.push_back(psi);
		}
	}
	return trace;
}

} // namespace ptfesh
