#pragma once

#include <vector>

#include "ptfesh/spectral.hpp"

namespace ptfesh
{

struct OracleOptions
{
	Eigen::Index max_dim = 512;
	// |Im E| <= snap_tolerance * (1 + |Re E|) is treated as real.
	double snap_tolerance = 1e-10;
};

/// Full dense eigendecomposition: symmetric solver for Hermitian input, real
/// Hessenberg-QR for real input (exact conjugate pairs), complex Schur
/// otherwise. Eigenvalues sorted by (Re, Im); conjugate pairs linked.
SpectralData direct_spectrum(const OperatorMatrix& H, const OracleOptions& options = {});

/// exp(-i H t) by Pade scaling and squaring.
CMatrix direct_propagator(const OperatorMatrix& H, double t);

struct SpikedSpec
{
	double G = 0.0;
	int n_max = 0;
};

struct SpikedLevel
{
	int n;
	int Q;
	cx energy;
};

/// Closed-form levels of H = p^2 + r^2 + G/r^2 on the PT-regularized line:
/// E = 4n + 2 - 2 Q gamma, gamma = sqrt(G + 1/4), for G >= -1/4, and
/// E = 4n + 2 - 2 i Q delta, delta = sqrt(-G - 1/4), below. Ordered by n,
/// then Q = +1 before Q = -1.
std::vector<SpikedLevel> spiked_oscillator_levels(const SpikedSpec& spec);

} // namespace ptfesh
