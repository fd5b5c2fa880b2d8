#include "ptfesh/partitioning.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ptfesh/errors.hpp"

namespace ptfesh
{

const char* to_string(Provenance p)
{
	switch(p)
	{
	case Provenance::hermitian_model: return "hermitian-model";
	case Provenance::pt_model: return "pt-model";
	case Provenance::custom: return "custom";
	}
	return "custom";
}

PartitionedHamiltonian::PartitionedHamiltonian(RMatrix F, RMatrix G, CMatrix A, int alpha,
	Provenance provenance, std::optional<CMatrix> lower)
	: F_(std::move(F)), G_(std::move(G)), A_(std::move(A)), alpha_(alpha),
	  provenance_(provenance), lower_(std::move(lower))
{
	if(alpha_ != 1 && alpha_ != -1)
	{
		throw std::invalid_argument("alpha must be +1 or -1, got " + std::to_string(alpha_));
	}
	if(F_.rows() != F_.cols() || G_.rows() != G_.cols())
	{
		throw std::invalid_argument("F and G must be square");
	}
	if(F_.rows() == 0)
	{
		throw std::invalid_argument("model space (F) must be nonempty");
	}
	if(A_.rows() != F_.rows() || A_.cols() != G_.rows())
	{
		throw std::invalid_argument("coupling A must be n_even x n_odd");
	}
	if(lower_ && (lower_->rows() != G_.rows() || lower_->cols() != F_.rows()))
	{
		throw std::invalid_argument("lower coupling block must be n_odd x n_even");
	}
	const double fs = (F_ - F_.transpose()).cwiseAbs().maxCoeff();
	const double gs = G_.size() ? (G_ - G_.transpose()).cwiseAbs().maxCoeff() : 0.0;
	if(fs > symmetry_tolerance || gs > symmetry_tolerance)
	{
		throw std::invalid_argument("F and G must be symmetric");
	}
}

CMatrix PartitionedHamiltonian::lower() const
{
	return lower_ ? *lower_ : CMatrix(A_.adjoint());
}

bool PartitionedHamiltonian::coupling_is_real() const
{
	if(A_.size() == 0)
	{
		return true;
	}
	if(A_.imag().cwiseAbs().maxCoeff() != 0.0)
	{
		return false;
	}
	return !lower_ || lower_->imag().cwiseAbs().maxCoeff() == 0.0;
}

PartitionedHamiltonian PartitionedHamiltonian::with_coupling_scaled(double s) const
{
	std::optional<CMatrix> low;
	if(lower_)
	{
		low = (s * *lower_).eval();
	}
	return PartitionedHamiltonian(F_, G_, s * A_, alpha_, provenance_, std::move(low));
}

ParitySectors parity_sectors(const OperatorMatrix& P)
{
	ParitySectors s;
	const CMatrix& p = P.entries();
	const double offdiag = max_abs(p - CMatrix(p.diagonal().asDiagonal()));
	if(offdiag > 0.0)
	{
		throw std::invalid_argument("parity operator must be diagonal");
	}
	for(Eigen::Index n = 0; n < p.rows(); ++n)
	{
		const cx d = p(n, n);
		if(std::abs(d - cx{1.0, 0.0}) < 1e-14)
		{
			s.even.push_back(n);
		}
		else if(std::abs(d + cx{1.0, 0.0}) < 1e-14)
		{
			s.odd.push_back(n);
		}
		else
		{
			throw std::invalid_argument("parity operator entries must be +1 or -1");
		}
	}
	return s;
}

OperatorMatrix block_parity(const PartitionedHamiltonian& ph)
{
	RMatrix p = RMatrix::Identity(ph.dim(), ph.dim());
	for(Eigen::Index k = ph.n_even(); k < ph.dim(); ++k)
	{
		p(k, k) = -1.0;
	}
	return OperatorMatrix(p, SymmetryTag::hermitian);
}

namespace
{

CMatrix gather(const CMatrix& m, const std::vector<Eigen::Index>& rows,
	const std::vector<Eigen::Index>& cols)
{
	CMatrix out(rows.size(), cols.size());
	for(std::size_t i = 0; i < rows.size(); ++i)
	{
		for(std::size_t j = 0; j < cols.size(); ++j)
		{
			out(i, j) = m(rows[i], cols[j]);
		}
	}
	return out;
}

RMatrix symmetrized(const RMatrix& m)
{
	return 0.5 * (m + m.transpose());
}

void check_square_compatible(const OperatorMatrix& H, const OperatorMatrix& P)
{
	if(H.dim() != P.dim())
	{
		throw std::invalid_argument("H and P dimensions differ");
	}
}

} // namespace

PtStructureReport validate_pt_structure(const OperatorMatrix& H, const OperatorMatrix& P,
	double tolerance)
{
	check_square_compatible(H, P);
	const ParitySectors s = parity_sectors(P);
	const CMatrix& h = H.entries();
	const CMatrix ee = gather(h, s.even, s.even);
	const CMatrix oo = gather(h, s.odd, s.odd);
	const CMatrix eo = gather(h, s.even, s.odd);
	const CMatrix oe = gather(h, s.odd, s.even);

	PtStructureReport r;
	r.F_block = ee.real();
	r.G_block = oo.real();
	r.C_block = eo.imag();
	r.D_block = oe.imag();
	auto absmax = [](const RMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; };
	r.max_violation = std::max({absmax(ee.imag()), absmax(oo.imag()), absmax(eo.real()),
		absmax(oe.real())});
	r.pt_symmetric = r.max_violation <= tolerance * std::max(1.0, max_abs(h));
	return r;
}

PartitionedHamiltonian parity_partition(const OperatorMatrix& H, const OperatorMatrix& P)
{
	check_square_compatible(H, P);
	const ParitySectors s = parity_sectors(P);
	if(s.even.empty())
	{
		throw std::invalid_argument("parity operator has no even sector");
	}
	const CMatrix& h = H.entries();
	const double tol = structure_tolerance * std::max(1.0, max_abs(h));
	const CMatrix ee = gather(h, s.even, s.even);
	const CMatrix oo = gather(h, s.odd, s.odd);
	const CMatrix eo = gather(h, s.even, s.odd);
	const CMatrix oe = gather(h, s.odd, s.even);
	auto absmax = [](const auto& m) { return m.size() ? double(m.cwiseAbs().maxCoeff()) : 0.0; };

	const double diag_imag = std::max(absmax(ee.imag()), absmax(oo.imag()));

	// Hermitian with real diagonal blocks.
	const double herm = H.hermitian_violation();
	if(herm <= tol && diag_imag <= tol)
	{
		return PartitionedHamiltonian(symmetrized(ee.real()), symmetrized(oo.real()), eo, +1,
			Provenance::hermitian_model);
	}

	// PT-symmetric: real diagonal blocks, coupling blocks i*C (even-odd) and
	// i*D (odd-even). Rotating the odd sector by i gives [[F, -C], [D, G]].
	const PtStructureReport pt = validate_pt_structure(H, P);
	if(pt.pt_symmetric)
	{
		const CMatrix A = pt.C_block.cast<cx>();
		std::optional<CMatrix> lower;
		if(absmax(pt.D_block - pt.C_block.transpose()) > tol)
		{
			lower = pt.D_block.cast<cx>();
		}
		return PartitionedHamiltonian(symmetrized(pt.F_block), symmetrized(pt.G_block), A, -1,
			Provenance::pt_model, std::move(lower));
	}

	// Already rotated: real, with even-odd block equal to minus the transpose
	// of the odd-even block.
	const double imag_all = absmax(h.imag());
	const double rotated = absmax(eo.real() + oe.real().transpose());
	if(imag_all <= tol && rotated <= tol && !s.odd.empty())
	{
		return PartitionedHamiltonian(symmetrized(ee.real()), symmetrized(oo.real()),
			CMatrix((-eo.real()).cast<cx>()), -1, Provenance::pt_model);
	}

	const double violation = std::min(std::max(herm, diag_imag), pt.max_violation);
	throw StructureError("matrix is neither Hermitian nor PT-symmetric (violation "
			+ std::to_string(violation) + ")",
		violation);
}

OperatorMatrix assemble_full(const PartitionedHamiltonian& ph)
{
	const Eigen::Index ne = ph.n_even();
	const Eigen::Index no = ph.n_odd();
	CMatrix m(ne + no, ne + no);
	m.topLeftCorner(ne, ne) = ph.F().cast<cx>();
	m.bottomRightCorner(no, no) = ph.G().cast<cx>();
	m.topRightCorner(ne, no) = double(ph.alpha()) * ph.A();
	m.bottomLeftCorner(no, ne) = ph.lower();
	const bool hermitian = ph.alpha() == 1 && !ph.has_lower_override();
	if(hermitian)
	{
		return OperatorMatrix(std::move(m), SymmetryTag::hermitian);
	}
	return OperatorMatrix(std::move(m), SymmetryTag::general);
}

CVector normalize_pt_phase(const CVector& psi, const OperatorMatrix& P, double tolerance)
{
	if(psi.size() != P.dim())
	{
		throw std::invalid_argument("vector and parity dimensions differ");
	}
	const double norm2 = psi.squaredNorm();
	if(norm2 == 0.0)
	{
		throw std::invalid_argument("cannot phase-normalize a zero vector");
	}
	const CVector image = P.entries() * psi.conjugate();
	// PT psi = e^{i phi} psi  =>  e^{i phi} = <psi, PT psi> / <psi, psi>
	const cx eigen_phase = psi.dot(image) / norm2;
	const double defect = (image - eigen_phase * psi).norm() / std::sqrt(norm2);
	if(defect > tolerance || std::abs(std::abs(eigen_phase) - 1.0) > tolerance)
	{
		throw PhaseUndefinedError("vector is not a PT eigenstate (defect "
			+ std::to_string(defect) + "); PT phase undefined");
	}
	const double beta = 0.5 * std::arg(eigen_phase);
	CVector out = std::polar(1.0, beta) * psi;

	const ParitySectors s = parity_sectors(P);
	Eigen::Index pivot = -1;
	double best = 0.0;
	for(Eigen::Index k : s.even)
	{
		if(std::abs(out(k)) > best)
		{
			best = std::abs(out(k));
			pivot = k;
		}
	}
	if(pivot >= 0 && best > 0.0)
	{
		if(out(pivot).real() < 0.0)
		{
			out = -out;
		}
		return out;
	}
	// No even content: largest odd component gets a positive imaginary part.
	for(Eigen::Index k : s.odd)
	{
		if(std::abs(out(k)) > best)
		{
			best = std::abs(out(k));
			pivot = k;
		}
	}
	if(pivot >= 0 && out(pivot).imag() < 0.0)
	{
		out = -out;
	}
	return out;
}

} // namespace ptfesh
