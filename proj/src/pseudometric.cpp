#include "ptfesh/pseudometric.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "ptfesh/errors.hpp"
#include "ptfesh/partitioning.hpp"

namespace ptfesh
{

namespace
{

void check_dims(const CVector& a, const CVector& b, const OperatorMatrix& P)
{
	if(a.size() != b.size() || a.size() != P.dim())
	{
		throw std::invalid_argument("pseudo_inner: dimension mismatch");
	}
}

// |<a, b>| close to |a||b|.
bool parallel(const CVector& a, const CVector& b, double tol = 1e-6)
{
	const double na = a.norm();
	const double nb = b.norm();
	if(na == 0.0 || nb == 0.0)
	{
		return false;
	}
	return std::abs(std::abs(a.dot(b)) - na * nb) <= tol * na * nb;
}

// Fixes the free phase of a real-level eigenvector using whichever
// antilinear symmetry it is an eigenvector of.
CVector fix_phase(const CVector& psi, const OperatorMatrix& P, Antilinear& found)
{
	const CVector pt = P.entries() * psi.conjugate();
	if(parallel(psi, pt))
	{
		found = Antilinear::parity_conjugation;
		return normalize_pt_phase(psi, P, 1e-6);
	}
	if(parallel(psi, CVector(psi.conjugate())))
	{
		found = Antilinear::conjugation;
		Eigen::Index k;
		psi.cwiseAbs().maxCoeff(&k);
		const cx phase = std::abs(psi(k)) / psi(k);
		return phase * psi;
	}
	found = Antilinear::none;
	return psi;
}

} // namespace

cx pseudo_inner(const CVector& psi, const CVector& phi, const OperatorMatrix& P, InnerMode mode)
{
	check_dims(psi, phi, P);
	if(mode == InnerMode::metric)
	{
		return psi.dot(P.entries() * phi);
	}
	return (psi.transpose() * phi)(0, 0);
}

QuasiParity assign_quasi_parity(const CVector& psi, const OperatorMatrix& P, double threshold)
{
	const double n2 = psi.squaredNorm();
	if(n2 == 0.0)
	{
		throw std::invalid_argument("quasi-parity of a zero vector");
	}
	const cx s = pseudo_inner(psi, psi, P, InnerMode::metric);
	if(std::abs(s) < threshold * n2)
	{
		return QuasiParity::undefined;
	}
	return s.real() > 0.0 ? QuasiParity::plus : QuasiParity::minus;
}

OperatorMatrix choose_metric(const OperatorMatrix& H, const OperatorMatrix& P)
{
	if(H.dim() != P.dim())
	{
		throw std::invalid_argument("H and P dimensions differ");
	}
	const CMatrix& h = H.entries();
	const CMatrix& p = P.entries();
	const double scale = std::max(1.0, max_abs(h));
	const double pseudo = max_abs(h.adjoint() - p * h * p);
	if(pseudo <= structure_tolerance * scale)
	{
		return P;
	}
	if(H.hermitian_violation() <= structure_tolerance * scale)
	{
		return OperatorMatrix(CMatrix(CMatrix::Identity(H.dim(), H.dim())),
			SymmetryTag::hermitian);
	}
	throw StructureError("no conserved metric: H is neither Hermitian nor P-pseudo-Hermitian",
		pseudo);
}

SpectralData pseudo_normalize(const SpectralData& spectral, const OperatorMatrix& P)
{
	const Eigen::Index n = spectral.size();
	if(spectral.dim() != P.dim() || n != P.dim())
	{
		throw std::invalid_argument(
			"pseudo_normalize needs a complete eigenbasis of the metric's dimension");
	}
	for(Eigen::Index k = 0; k < n; ++k)
	{
		if(!spectral.is_real(k) && spectral.pair_of(k) < 0)
		{
			throw StructureError("complex level " + std::to_string(k) + " has no pair link",
				std::abs(spectral.eigenvalues[k].imag()));
		}
	}

	SpectralData out = spectral;
	out.quasi_parities.assign(n, QuasiParity::undefined);
	const CMatrix& p = P.entries();
	bool saw_parity_conj = false;
	bool saw_conj = false;
	bool saw_none = false;
	auto note = [&](Antilinear a) {
		saw_parity_conj |= a == Antilinear::parity_conjugation;
		saw_conj |= a == Antilinear::conjugation;
		saw_none |= a == Antilinear::none;
	};

	// Real levels, grouped into clusters of (numerically) equal energies so
	// the metric can be diagonalized inside degenerate eigenspaces.
	Eigen::Index k = 0;
	while(k < n)
	{
		if(!out.is_real(k))
		{
			++k;
			continue;
		}
		Eigen::Index end = k + 1;
		while(end < n && out.is_real(end)
			&& std::abs(out.eigenvalues[end].real() - out.eigenvalues[k].real())
				<= 1e-9 * (1.0 + std::abs(out.eigenvalues[k].real())))
		{
			++end;
		}
		const Eigen::Index m = end - k;
		if(m > 1)
		{
			const CMatrix block = out.vectors.middleCols(k, m);
			const CMatrix g = block.adjoint() * p * block;
			Eigen::SelfAdjointEigenSolver<CMatrix> es(g);
			out.vectors.middleCols(k, m) = block * es.eigenvectors();
		}
		for(Eigen::Index j = k; j < end; ++j)
		{
			CVector v = out.vectors.col(j);
			v /= v.norm();
			if(m == 1)
			{
				Antilinear found;
				v = fix_phase(v, P, found);
				note(found);
			}
			const double s = v.dot(p * v).real();
			if(std::abs(s) < degeneracy_threshold)
			{
				throw DegeneracyError("self pseudo-norm of level " + std::to_string(j)
						+ " vanishes (exceptional point)",
					long(j));
			}
			out.quasi_parities[j] = s > 0.0 ? QuasiParity::plus : QuasiParity::minus;
			out.vectors.col(j) = v / std::sqrt(std::abs(s));
		}
		k = end;
	}

	for(PairLink& link : out.pairs)
	{
		CVector plus = out.vectors.col(link.plus);
		plus /= plus.norm();
		const CVector computed = out.vectors.col(link.minus);
		const CVector pt = p * plus.conjugate();
		const CVector t = plus.conjugate();
		CVector minus;
		if(parallel(computed, pt))
		{
			minus = pt;
			note(Antilinear::parity_conjugation);
		}
		else if(parallel(computed, t))
		{
			minus = t;
			note(Antilinear::conjugation);
		}
		else
		{
			minus = computed / computed.norm();
			note(Antilinear::none);
		}
		link.c = plus.dot(p * minus);
		if(std::abs(link.c) < degeneracy_threshold)
		{
			throw DegeneracyError("pair pseudo-overlap of level " + std::to_string(link.plus)
					+ " vanishes (exceptional point)",
				long(link.plus));
		}
		out.vectors.col(link.plus) = plus;
		out.vectors.col(link.minus) = minus;
	}

	if(saw_none)
	{
		out.antilinear = Antilinear::none;
	}
	else if(saw_conj && !saw_parity_conj)
	{
		out.antilinear = Antilinear::conjugation;
	}
	else if(saw_parity_conj && !saw_conj)
	{
		out.antilinear = Antilinear::parity_conjugation;
	}
	else
	{
		// Both fit only when levels are real with definite parity, where the
		// two conventions coincide up to phase.
		out.antilinear = saw_parity_conj ? Antilinear::parity_conjugation : Antilinear::none;
	}
	out.experimental = saw_none;
	out.pseudo_normalized = true;
	return out;
}

PseudoNormReport gram_report(const SpectralData& spectral, const OperatorMatrix& P)
{
	if(spectral.dim() != P.dim())
	{
		throw std::invalid_argument("gram_report: dimension mismatch");
	}
	PseudoNormReport r;
	const Eigen::Index n = spectral.size();
	r.gram = spectral.vectors.adjoint() * P.entries() * spectral.vectors;
	CMatrix expected = CMatrix::Zero(n, n);
	for(Eigen::Index k = 0; k < n; ++k)
	{
		r.self_norms.push_back(r.gram(k, k));
		if(spectral.is_real(k) && !spectral.quasi_parities.empty())
		{
			expected(k, k) = double(int(spectral.quasi_parities[k]));
		}
	}
	for(const PairLink& link : spectral.pairs)
	{
		expected(link.plus, link.minus) = link.c;
		expected(link.minus, link.plus) = std::conj(link.c);
	}
	for(Eigen::Index i = 0; i < n; ++i)
	{
		for(Eigen::Index j = 0; j < n; ++j)
		{
			if(i == j)
			{
				continue;
			}
			const long pi = spectral.pair_of(i);
			if(pi >= 0 && pi == spectral.pair_of(j))
			{
				continue;
			}
			r.max_offdiag_violation = std::max(r.max_offdiag_violation, std::abs(r.gram(i, j)));
		}
	}
	if(spectral.pseudo_normalized)
	{
		r.max_structure_deviation = max_abs(r.gram - expected);
	}
	else
	{
		r.max_structure_deviation = r.max_offdiag_violation;
	}
	return r;
}

CMatrix spectral_sum(const SpectralData& spectral, const OperatorMatrix& P,
	const std::function<cx(cx)>& f)
{
	if(!spectral.pseudo_normalized)
	{
		throw ContractError("spectral data must be pseudo-normalized");
	}
	if(spectral.dim() != P.dim())
	{
		throw std::invalid_argument("spectral_sum: dimension mismatch");
	}
	const Eigen::Index n = spectral.size();
	CMatrix weights = CMatrix::Zero(n, n);
	for(Eigen::Index k = 0; k < n; ++k)
	{
		if(spectral.is_real(k))
		{
			weights(k, k) = double(int(spectral.quasi_parities[k])) * f(spectral.eigenvalues[k]);
		}
		else if(spectral.pair_of(k) < 0)
		{
			throw StructureError("complex level " + std::to_string(k) + " has no pair link",
				std::abs(spectral.eigenvalues[k].imag()));
		}
	}
	for(const PairLink& link : spectral.pairs)
	{
		const cx e = spectral.eigenvalues[link.plus];
		weights(link.plus, link.minus) = f(e) / std::conj(link.c);
		weights(link.minus, link.plus) = f(std::conj(e)) / link.c;
	}
	return spectral.vectors * weights * spectral.vectors.adjoint() * P.entries();
}

double reconstruct_identity(const SpectralData& spectral, const OperatorMatrix& P)
{
	const CMatrix s = spectral_sum(spectral, P, [](cx) { return cx{1.0, 0.0}; });
	return max_abs(s - CMatrix::Identity(P.dim(), P.dim()));
}

double reconstruct_hamiltonian(const SpectralData& spectral, const OperatorMatrix& P,
	const OperatorMatrix& H)
{
	const CMatrix s = spectral_sum(spectral, P, [](cx e) { return e; });
	return max_abs(s - H.entries()) / std::max(1e-300, max_abs(H.entries()));
}

} // namespace ptfesh
