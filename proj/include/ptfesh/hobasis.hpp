#pragma once

#include "ptfesh/types.hpp"

namespace ptfesh
{

// Truncated harmonic-oscillator basis |0>..|dim-1> of H0 = p^2 + x^2,
// whose eigenvalues are 2n+1.
class BasisSpec
{
public:
	explicit BasisSpec(int dim);

	[[nodiscard]] int dim() const { return dim_; }
	[[nodiscard]] int n_even() const { return (dim_ + 1) / 2; }
	[[nodiscard]] int n_odd() const { return dim_ / 2; }

private:
	int dim_;
};

// H = p^2 + quadratic*x^2 + cubic*x^3 + g*x^even_power.
struct ModelSpec
{
	double quadratic = 1.0;
	cx cubic{0.0, 0.0};
	int even_power = 4;
	double g = 0.0;

	void validate() const;
};

/// Exact dim x dim block of x^k. The power is formed in a basis enlarged by k
/// and then truncated, so no entry is contaminated by the basis cutoff.
OperatorMatrix build_position_power(int k, const BasisSpec& basis);

/// diag(2n+1).
OperatorMatrix build_kinetic_plus_quadratic(const BasisSpec& basis);

/// diag((-1)^n).
OperatorMatrix build_parity(const BasisSpec& basis);

/// Model Hamiltonian. Tagged hermitian for real cubic coefficient and
/// complex_symmetric for a purely imaginary one.
OperatorMatrix build_model(const ModelSpec& spec, const BasisSpec& basis);

} // namespace ptfesh
