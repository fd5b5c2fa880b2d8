#pragma once

#include <random>

#include "ptfesh/partitioning.hpp"

namespace ptfesh
{

// Random partitioned instances for property checks.
struct RandomInstanceSpec
{
	int min_block = 1;
	int max_block = 6;
	int alpha = 1;
	bool complex_coupling = false;
	double coupling_scale = 1.0;
	// Added to F(i,i), G(i,i) as spread*i so levels are not all bunched.
	double diagonal_spread = 1.0;
};

PartitionedHamiltonian random_partitioned(std::mt19937_64& rng, const RandomInstanceSpec& spec);

} // namespace ptfesh
