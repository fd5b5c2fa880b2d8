#include "ptfesh/random_instance.hpp"

#include <random>

namespace ptfesh
{

PartitionedHamiltonian random_partitioned(std::mt19937_64& rng, const RandomInstanceSpec& spec)
{
	std::uniform_int_distribution<int> size(spec.min_block, spec.max_block);
	std::uniform_real_distribution<double> u(-1.0, 1.0);
	const int ne = size(rng);
	const int no = size(rng);
	auto sym = [&](int n, double spread) {
		RMatrix m(n, n);
		for(int i = 0; i < n; ++i)
		{
			for(int j = 0; j <= i; ++j)
			{
				m(i, j) = m(j, i) = u(rng);
			}
			m(i, i) += spread * i;
		}
		return m;
	};
	RMatrix F = sym(ne, spec.diagonal_spread);
	RMatrix G = sym(no, spec.diagonal_spread);
	CMatrix A(ne, no);
	for(int i = 0; i < ne; ++i)
	{
		for(int j = 0; j < no; ++j)
		{
			const double re = spec.coupling_scale * u(rng);
			const double im = spec.complex_coupling ? spec.coupling_scale * u(rng) : 0.0;
			A(i, j) = cx{re, im};
		}
	}
	return PartitionedHamiltonian(std::move(F), std::move(G), std::move(A), spec.alpha);
}

} // namespace ptfesh
