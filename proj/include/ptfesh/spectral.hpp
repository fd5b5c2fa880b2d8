#pragma once

#include <vector>

#include "ptfesh/types.hpp"

namespace ptfesh
{

enum class QuasiParity : int
{
	minus = -1,
	undefined = 0,
	plus = 1
};

const char* to_string(QuasiParity q);

// Complex-conjugate doublet H psi_plus = E psi_plus, H psi_minus = E* psi_minus
// with Im E > 0; c = <psi_plus|P|psi_minus> once pseudo-normalized.
struct PairLink
{
	Eigen::Index plus;
	Eigen::Index minus;
	cx c{0.0, 0.0};
};

// Which antilinear map relates the members of a pair (and fixes phases of
// real levels): P∘conj in the physical oscillator basis, plain conj for a
// real matrix (the phase-rotated form), or none detected.
enum class Antilinear
{
	parity_conjugation,
	conjugation,
	none
};

struct SpectralData
{
	std::vector<cx> eigenvalues;
	CMatrix vectors; // column n is the right eigenvector of eigenvalues[n]
	std::vector<QuasiParity> quasi_parities;
	std::vector<PairLink> pairs;
	Antilinear antilinear = Antilinear::none;
	bool pseudo_normalized = false;
	// Set when no antilinear symmetry was found, so the quasi-parity and pair
	// conventions are extrapolated rather than derived.
	bool experimental = false;

	[[nodiscard]] Eigen::Index size() const { return Eigen::Index(eigenvalues.size()); }
	[[nodiscard]] Eigen::Index dim() const { return vectors.rows(); }
	[[nodiscard]] bool is_real(Eigen::Index n) const { return eigenvalues[n].imag() == 0.0; }
	// Index of the pair containing level n, or -1.
	[[nodiscard]] long pair_of(Eigen::Index n) const;

	// Copy without level n (and without any pair touching it).
	[[nodiscard]] SpectralData without_level(Eigen::Index n) const;
};

} // namespace ptfesh
