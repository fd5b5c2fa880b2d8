#include "ptfesh/hobasis.hpp"

#include <cmath>
#include <string>

namespace ptfesh
{

const char* to_string(SymmetryTag tag)
{
	switch(tag)
	{
	case SymmetryTag::hermitian: return "hermitian";
	case SymmetryTag::complex_symmetric: return "complex-symmetric";
	case SymmetryTag::general: return "general";
	}
	return "general";
}

OperatorMatrix::OperatorMatrix(CMatrix entries, SymmetryTag tag)
	: entries_(std::move(entries)), tag_(tag)
{
	if(entries_.rows() != entries_.cols())
	{
		throw std::invalid_argument("operator matrix must be square");
	}
	if(tag_ == SymmetryTag::hermitian && hermitian_violation() > hermitian_tolerance)
	{
		throw std::invalid_argument("matrix tagged hermitian is not Hermitian");
	}
}

OperatorMatrix::OperatorMatrix(const RMatrix& entries, SymmetryTag tag)
	: OperatorMatrix(CMatrix(entries.cast<cx>()), tag)
{
}

double OperatorMatrix::hermitian_violation() const
{
	return max_abs(entries_ - entries_.adjoint());
}

bool OperatorMatrix::is_real() const
{
	return entries_.imag().cwiseAbs().maxCoeff() == 0.0;
}

double max_abs(const CMatrix& m)
{
	return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

BasisSpec::BasisSpec(int dim) : dim_(dim)
{
	if(dim < 2)
	{
		throw std::invalid_argument("basis dim must be >= 2, got " + std::to_string(dim));
	}
}

void ModelSpec::validate() const
{
	if(even_power < 4 || even_power % 2 != 0)
	{
		throw std::invalid_argument(
			"even power must be an even integer >= 4, got " + std::to_string(even_power));
	}
}

namespace
{

// x = (a + a^dagger)/sqrt(2) in units where H0 = p^2 + x^2.
RMatrix ladder_position(int size)
{
	RMatrix x = RMatrix::Zero(size, size);
	for(int n = 0; n + 1 < size; ++n)
	{
		const double v = std::sqrt((n + 1) / 2.0);
		x(n, n + 1) = v;
		x(n + 1, n) = v;
	}
	return x;
}

RMatrix exact_power(int k, int dim)
{
	const int big = dim + k;
	const RMatrix x = ladder_position(big);
	RMatrix acc = x;
	for(int i = 1; i < k; ++i)
	{
		acc = acc * x;
	}
	const RMatrix block = acc.topLeftCorner(dim, dim);
	return 0.5 * (block + block.transpose());
}

} // namespace

OperatorMatrix build_position_power(int k, const BasisSpec& basis)
{
	if(k < 1)
	{
		throw std::invalid_argument("position power k must be >= 1, got " + std::to_string(k));
	}
	return OperatorMatrix(exact_power(k, basis.dim()), SymmetryTag::hermitian);
}

OperatorMatrix build_kinetic_plus_quadratic(const BasisSpec& basis)
{
	RMatrix h = RMatrix::Zero(basis.dim(), basis.dim());
	for(int n = 0; n < basis.dim(); ++n)
	{
		h(n, n) = 2.0 * n + 1.0;
	}
	return OperatorMatrix(h, SymmetryTag::hermitian);
}

OperatorMatrix build_parity(const BasisSpec& basis)
{
	RMatrix p = RMatrix::Zero(basis.dim(), basis.dim());
	for(int n = 0; n < basis.dim(); ++n)
	{
		p(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
	}
	return OperatorMatrix(p, SymmetryTag::hermitian);
}

OperatorMatrix build_model(const ModelSpec& spec, const BasisSpec& basis)
{
	spec.validate();
	const int dim = basis.dim();
	CMatrix h = build_kinetic_plus_quadratic(basis).entries();
	if(spec.quadratic != 1.0)
	{
		// p^2 + q x^2 = H0 + (q - 1) x^2
		h += (spec.quadratic - 1.0) * exact_power(2, dim).cast<cx>();
	}
	if(spec.cubic != cx{0.0, 0.0})
	{
		h += spec.cubic * exact_power(3, dim).cast<cx>();
	}
	if(spec.g != 0.0)
	{
		h += spec.g * exact_power(spec.even_power, dim).cast<cx>();
	}

	SymmetryTag tag = SymmetryTag::general;
	if(spec.cubic.imag() == 0.0)
	{
		tag = SymmetryTag::hermitian;
		// Remove rounding asymmetry from the matrix products.
		h = (0.5 * (h + h.adjoint())).eval();
	}
	else if(spec.cubic.real() == 0.0)
	{
		tag = SymmetryTag::complex_symmetric;
	}
	return OperatorMatrix(std::move(h), tag);
}

} // namespace ptfesh
