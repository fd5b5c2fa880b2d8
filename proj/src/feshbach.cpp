#include "ptfesh/feshbach.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "ptfesh/errors.hpp"

namespace ptfesh
{

FeshbachReduction::FeshbachReduction(PartitionedHamiltonian ph) : ph_(std::move(ph))
{
	if(ph_.n_odd() > 0)
	{
		Eigen::SelfAdjointEigenSolver<RMatrix> es(ph_.G());
		if(es.info() != Eigen::Success)
		{
			throw OracleFailure("eigendecomposition of G failed");
		}
		pole_values_ = es.eigenvalues();
		pole_vectors_ = es.eigenvectors();
	}
	else
	{
		pole_values_.resize(0);
		pole_vectors_.resize(0, 0);
	}
	const CMatrix U = pole_vectors_.cast<cx>();
	left_ = double(ph_.alpha()) * ph_.A() * U;
	right_ = U.transpose() * ph_.lower();
	real_ = ph_.coupling_is_real();
	hermitian_pair_ = !ph_.has_lower_override();
	if(real_)
	{
		left_real_ = left_.real();
		right_real_ = right_.real();
	}
}

double FeshbachReduction::pole_distance(double rho) const
{
	double d = std::numeric_limits<double>::infinity();
	for(Eigen::Index k = 0; k < pole_values_.size(); ++k)
	{
		d = std::min(d, std::abs(rho - pole_values_(k)));
	}
	return d;
}

void FeshbachReduction::check_pole(double rho) const
{
	for(Eigen::Index k = 0; k < pole_values_.size(); ++k)
	{
		if(std::abs(rho - pole_values_(k)) <= pole_guard(rho))
		{
			throw PoleProximityError("rho = " + std::to_string(rho)
					+ " is within the pole guard of eigenvalue "
					+ std::to_string(pole_values_(k)) + " of G",
				pole_values_(k));
		}
	}
}

EffectiveEvaluation FeshbachReduction::evaluate(double rho) const
{
	check_pole(rho);
	const Eigen::Index no = pole_values_.size();
	CVector inv(no);
	for(Eigen::Index k = 0; k < no; ++k)
	{
		inv(k) = 1.0 / (pole_values_(k) - rho);
	}
	EffectiveEvaluation out;
	out.rho = rho;
	out.pole_distance = pole_distance(rho);
	out.H_eff = ph_.F().cast<cx>() - left_ * inv.asDiagonal() * right_;
	return out;
}

double FeshbachReduction::hermiticity_defect(const CMatrix& h_eff)
{
	return max_abs(h_eff - h_eff.adjoint()) / std::max(1.0, max_abs(h_eff));
}

RVector FeshbachReduction::branch_values(double rho) const
{
	if(real_ && hermitian_pair_)
	{
		check_pole(rho);
		RVector inv(pole_values_.size());
		for(Eigen::Index k = 0; k < inv.size(); ++k)
		{
			inv(k) = 1.0 / (pole_values_(k) - rho);
		}
		const RMatrix h = ph_.F() - left_real_ * inv.asDiagonal() * right_real_;
		Eigen::SelfAdjointEigenSolver<RMatrix> es(h, Eigen::EigenvaluesOnly);
		return es.eigenvalues();
	}
	const EffectiveEvaluation e = evaluate(rho);
	if(!hermitian_pair_ && hermiticity_defect(e.H_eff) > structure_tolerance)
	{
		throw StructureError("effective Hamiltonian is not Hermitian",
			hermiticity_defect(e.H_eff));
	}
	if(real_)
	{
		Eigen::SelfAdjointEigenSolver<RMatrix> es(e.H_eff.real(), Eigen::EigenvaluesOnly);
		return es.eigenvalues();
	}
	Eigen::SelfAdjointEigenSolver<CMatrix> es(e.H_eff, Eigen::EigenvaluesOnly);
	return es.eigenvalues();
}

std::vector<LinearizedLevel> FeshbachReduction::linearized_spectrum(double rho) const
{
	const EffectiveEvaluation e = evaluate(rho);
	if(!hermitian_pair_ && hermiticity_defect(e.H_eff) > structure_tolerance)
	{
		throw StructureError("effective Hamiltonian is not Hermitian",
			hermiticity_defect(e.H_eff));
	}
	std::vector<LinearizedLevel> levels;
	if(real_)
	{
		Eigen::SelfAdjointEigenSolver<RMatrix> es(e.H_eff.real());
		for(Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
		{
			levels.push_back({es.eigenvalues()(k), es.eigenvectors().col(k).cast<cx>()});
		}
	}
	else
	{
		Eigen::SelfAdjointEigenSolver<CMatrix> es(e.H_eff);
		for(Eigen::Index k = 0; k < es.eigenvalues().size(); ++k)
		{
			levels.push_back({es.eigenvalues()(k), es.eigenvectors().col(k)});
		}
	}
	return levels;
}

CVector FeshbachReduction::reconstruct_eliminated(double rho, const CVector& v) const
{
	if(v.size() != ph_.n_even())
	{
		throw std::invalid_argument("model-space vector has wrong dimension");
	}
	check_pole(rho);
	const Eigen::Index no = pole_values_.size();
	CVector t = right_ * v;
	for(Eigen::Index k = 0; k < no; ++k)
	{
		t(k) /= (pole_values_(k) - rho);
	}
	return -(pole_vectors_.cast<cx>() * t);
}

EffectiveEvaluation effective_hamiltonian(const PartitionedHamiltonian& ph, double rho)
{
	return FeshbachReduction(ph).evaluate(rho);
}

std::vector<LinearizedLevel> linearized_spectrum(const PartitionedHamiltonian& ph, double rho)
{
	return FeshbachReduction(ph).linearized_spectrum(rho);
}

CVector reconstruct_eliminated(const PartitionedHamiltonian& ph, double rho, const CVector& v)
{
	return FeshbachReduction(ph).reconstruct_eliminated(rho, v);
}

} // namespace ptfesh
