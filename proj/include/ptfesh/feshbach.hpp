#pragma once

#include <vector>

#include "ptfesh/partitioning.hpp"

namespace ptfesh
{

struct EffectiveEvaluation
{
	double rho = 0.0;
	CMatrix H_eff;
	double pole_distance = 0.0;
};

struct LinearizedLevel
{
	double energy;
	CVector vector;
};

// Energy-dependent effective Hamiltonian on the even sector,
//
//     H_eff(rho) = F - alpha * A (G - rho)^{-1} A^dag,
//
// obtained by eliminating the odd sector. G is diagonalized once, so every
// evaluation is O(n_even^2 n_odd) plus the model-space eigensolve.
class FeshbachReduction
{
public:
	explicit FeshbachReduction(PartitionedHamiltonian ph);

	[[nodiscard]] const PartitionedHamiltonian& partitioned() const { return ph_; }

	// Sorted eigenvalues of G: the poles of the resolvent.
	[[nodiscard]] const RVector& poles() const { return pole_values_; }
	// Columns are the eigenvectors of G matching poles().
	[[nodiscard]] const RMatrix& pole_vectors() const { return pole_vectors_; }

	[[nodiscard]] static double pole_guard(double rho) { return 1e-8 * (1.0 + std::abs(rho)); }
	[[nodiscard]] double pole_distance(double rho) const;

	[[nodiscard]] EffectiveEvaluation evaluate(double rho) const;

	/// Ascending eigenvalues of H_eff(rho); no eigenvectors.
	[[nodiscard]] RVector branch_values(double rho) const;

	[[nodiscard]] std::vector<LinearizedLevel> linearized_spectrum(double rho) const;

	/// Eliminated odd-sector components w = -(G - rho)^{-1} lower v.
	[[nodiscard]] CVector reconstruct_eliminated(double rho, const CVector& v) const;

	// Largest |H_eff - H_eff^dag| relative to max(1, |H_eff|).
	[[nodiscard]] static double hermiticity_defect(const CMatrix& h_eff);

private:
	void check_pole(double rho) const;

	PartitionedHamiltonian ph_;
	RVector pole_values_;
	RMatrix pole_vectors_;
	CMatrix left_;  // alpha * A * U
	CMatrix right_; // U^T * lower
	RMatrix left_real_;
	RMatrix right_real_;
	bool real_ = true;
	bool hermitian_pair_ = true;
};

EffectiveEvaluation effective_hamiltonian(const PartitionedHamiltonian& ph, double rho);

std::vector<LinearizedLevel> linearized_spectrum(const PartitionedHamiltonian& ph, double rho);

CVector reconstruct_eliminated(const PartitionedHamiltonian& ph, double rho, const CVector& v);

} // namespace ptfesh
