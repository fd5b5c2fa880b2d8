#pragma once

#include <optional>
#include <vector>

#include "ptfesh/types.hpp"

namespace ptfesh
{

enum class Provenance
{
	hermitian_model,
	pt_model,
	custom
};

const char* to_string(Provenance p);

// Parity-blocked Hamiltonian
//
//     [ F      alpha*A ]
//     [ A^dag  G       ]
//
// with the even (model) sector first. F and G are real symmetric; A may be
// complex only for custom instances. The lower-left block defaults to A^dag;
// an explicit override exists so that inconsistent input can be represented
// and diagnosed rather than silently repaired.
class PartitionedHamiltonian
{
public:
	static constexpr double symmetry_tolerance = 1e-12;

	PartitionedHamiltonian(RMatrix F, RMatrix G, CMatrix A, int alpha,
		Provenance provenance = Provenance::custom,
		std::optional<CMatrix> lower = std::nullopt);

	[[nodiscard]] const RMatrix& F() const { return F_; }
	[[nodiscard]] const RMatrix& G() const { return G_; }
	[[nodiscard]] const CMatrix& A() const { return A_; }
	[[nodiscard]] int alpha() const { return alpha_; }
	[[nodiscard]] Provenance provenance() const { return provenance_; }

	// Lower-left coupling block; A^dag unless overridden.
	[[nodiscard]] CMatrix lower() const;
	[[nodiscard]] bool has_lower_override() const { return lower_.has_value(); }
	[[nodiscard]] bool coupling_is_real() const;

	[[nodiscard]] Eigen::Index n_even() const { return F_.rows(); }
	[[nodiscard]] Eigen::Index n_odd() const { return G_.rows(); }
	[[nodiscard]] Eigen::Index dim() const { return n_even() + n_odd(); }

	// Same blocks with A -> s*A (and the override, if any, scaled alike).
	[[nodiscard]] PartitionedHamiltonian with_coupling_scaled(double s) const;

private:
	RMatrix F_;
	RMatrix G_;
	CMatrix A_;
	int alpha_;
	Provenance provenance_;
	std::optional<CMatrix> lower_;
};

struct PtStructureReport
{
	RMatrix F_block;
	RMatrix G_block;
	RMatrix C_block; // even-odd block is i*C
	RMatrix D_block; // odd-even block is i*D
	double max_violation = 0.0;
	bool pt_symmetric = false;
};

// Relative tolerance used to classify input as Hermitian or PT-symmetric.
inline constexpr double structure_tolerance = 1e-10;

struct ParitySectors
{
	std::vector<Eigen::Index> even;
	std::vector<Eigen::Index> odd;
};

/// Splits basis indices by the sign of the (diagonal) parity operator.
ParitySectors parity_sectors(const OperatorMatrix& P);

/// Parity in the block ordering of assemble_full: diag(+1...,-1...).
OperatorMatrix block_parity(const PartitionedHamiltonian& ph);

/// Reorders H into even/odd blocks. Hermitian input gives alpha = +1. A
/// PT-symmetric input (real diagonal blocks, imaginary coupling i*Omega) has
/// its odd coefficients rotated by i so all blocks are real, giving alpha = -1.
/// A real matrix already in that rotated form is recognized as well.
PartitionedHamiltonian parity_partition(const OperatorMatrix& H, const OperatorMatrix& P);

/// [[F, alpha*A], [lower, G]] in block ordering.
OperatorMatrix assemble_full(const PartitionedHamiltonian& ph);

/// Extracts F, G, C, D of H = F + G + iC + iD over the parity sectors and
/// measures how far H is from satisfying H = PT H PT.
PtStructureReport validate_pt_structure(const OperatorMatrix& H, const OperatorMatrix& P,
	double tolerance = structure_tolerance);

/// Rotates an unbroken PT eigenvector by e^{i beta} so that PT psi = psi, i.e.
/// even components real and odd components imaginary. The overall sign makes
/// the largest even component positive.
CVector normalize_pt_phase(const CVector& psi, const OperatorMatrix& P,
	double tolerance = 1e-8);

} // namespace ptfesh
