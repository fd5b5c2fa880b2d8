#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ptfesh/feshbach.hpp"
#include "ptfesh/hobasis.hpp"
#include "ptfesh/spectral.hpp"

namespace ptfesh
{

struct Interval
{
	double lo;
	double hi;
};

struct SolverOptions
{
	double tol = 1e-10;
	// Minimum grid points on each stretch between consecutive poles.
	int points_per_segment = 8;
	double points_per_unit = 64.0;
	// Cap on the uniform points of one pole-free segment.
	int max_points_per_segment = 256;
	// Geometric grid refinement toward each pole: spacings seg/2^k.
	int pole_refinement_levels = 48;
};

enum class RootKind
{
	real_root,
	// Root inside the guard band of a pole of (G - rho)^{-1}, found through the
	// complementary reduction, or an eigenvalue of G that decouples from the
	// model space. Invisible to the H_eff(rho) grid.
	pole_adjacent
};

const char* to_string(RootKind k);

struct SelfConsistentRoot
{
	int level_index = 0;
	double energy = 0.0;
	double residual = 0.0;
	std::pair<double, double> bracket{0.0, 0.0};
	RootKind kind = RootKind::real_root;
	// 2 for a tangential (merging) root where g_n touches zero.
	int multiplicity = 1;
	// Branch of the complementary reduction (roles of F and G swapped) for
	// roots inside a pole guard band; -1 otherwise.
	int dual_level = -1;
};

/// Numerical range of the Hermitian part of the full matrix, padded by 1;
/// encloses the real part of every eigenvalue.
Interval default_interval(const PartitionedHamiltonian& ph);

// Finds all rho in an interval with rho = E_n(rho) for some branch n of the
// linearized spectrum of H_eff(rho).
//
// The interval is cut at the poles of (G - rho)^{-1}. On each piece a grid is
// laid out (uniform plus geometric refinement toward poles) and every branch
// g_n(rho) = E_n(rho) - rho is sampled. Branches are the ascending-ordered
// eigenvalues, which are continuous between poles. Sign changes are bisected
// and finished with one secant step; local minima of |g_n| are refined by
// golden section to catch close root pairs and tangential double roots.
class SelfConsistentSolver
{
public:
	explicit SelfConsistentSolver(const PartitionedHamiltonian& ph, SolverOptions options = {});

	[[nodiscard]] std::vector<SelfConsistentRoot> solve(Interval interval) const;

	[[nodiscard]] const FeshbachReduction& reduction() const { return reduction_; }

	// g_n(rho) for every branch.
	[[nodiscard]] RVector residuals(double rho) const;

	// Full-space eigenvector (v, w) of a real root, unit Euclidean norm.
	[[nodiscard]] CVector root_vector(const SelfConsistentRoot& root) const;

private:
	// Grid scan of every pole-free segment; false if no point survived the guards.
	bool scan(Interval interval, std::vector<SelfConsistentRoot>& roots) const;

	FeshbachReduction reduction_;
	SolverOptions options_;
};

std::vector<SelfConsistentRoot> solve_selfconsistent(const PartitionedHamiltonian& ph,
	Interval interval, const SolverOptions& options = {});

struct BreakingReport
{
	int total_dim = 0;
	// Counted with multiplicity.
	int real_roots_found = 0;
	int missing_pairs = 0;
	// Im > 0 member of each conjugate pair, from the oracle.
	std::vector<cx> complex_pairs;
	bool boundary_flag = false;
	std::vector<SelfConsistentRoot> roots;
	// Oracle eigenvalues no root accounts for (should stay empty).
	std::vector<cx> unmatched;
	SpectralData oracle;

	[[nodiscard]] bool consistent() const
	{
		return unmatched.empty() && real_roots_found + 2 * missing_pairs == total_dim;
	}
};

/// Compares self-consistent roots with the oracle spectrum of the assembled
/// matrix; energies without a real root come back as conjugate pairs.
BreakingReport detect_breaking(const PartitionedHamiltonian& ph, Interval interval,
	const SolverOptions& options = {});

struct PhaseDiagramRow
{
	double parameter = 0.0;
	std::vector<cx> energies; // sorted by real part
	// <psi|M|psi>/|psi|^2 per energy, M the conserved metric.
	std::vector<double> self_pseudo_norms;
	int broken_count = 0;
	bool boundary_flag = false;
	std::string error;
};

struct SweepResult
{
	std::vector<PhaseDiagramRow> rows;
	// Grid cell in which broken_count first increases.
	std::optional<std::pair<double, double>> transition;
};

using PartitionedFamily = std::function<PartitionedHamiltonian(double)>;

/// One row per grid value; a failing row records its error and the sweep
/// goes on. Rows are computed concurrently when threads > 1.
SweepResult sweep(const PartitionedFamily& family, const std::vector<double>& grid,
	std::optional<Interval> interval = std::nullopt, const SolverOptions& options = {},
	unsigned threads = 1);

enum class SweepParameter
{
	f_re,
	f_im,
	g,
	coupling // scales A of a custom partitioned instance
};

const char* to_string(SweepParameter p);

SweepResult sweep(const ModelSpec& base, SweepParameter parameter, const std::vector<double>& grid,
	const BasisSpec& basis, const SolverOptions& options = {}, unsigned threads = 1);

/// Metric conserved by the assembled matrix: block parity when it is
/// pseudo-Hermitian with respect to it, else the identity.
OperatorMatrix conserved_metric(const PartitionedHamiltonian& ph);

} // namespace ptfesh
