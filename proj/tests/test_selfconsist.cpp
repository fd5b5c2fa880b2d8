#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ptfesh/errors.hpp"
#include "ptfesh/hobasis.hpp"
#include "ptfesh/oracle.hpp"
#include "ptfesh/random_instance.hpp"
#include "ptfesh/selfconsist.hpp"

using namespace ptfesh;

namespace
{

PartitionedHamiltonian toy(double omega, int alpha)
{
	return PartitionedHamiltonian(RMatrix::Constant(1, 1, 1.0), RMatrix::Constant(1, 1, 2.0),
		CMatrix::Constant(1, 1, omega), alpha);
}

std::vector<double> energies(const std::vector<SelfConsistentRoot>& roots)
{
	std::vector<double> e;
	for(const auto& r : roots)
	{
		for(int k = 0; k < r.multiplicity; ++k)
		{
			e.push_back(r.energy);
		}
	}
	return e;
}

// Real oracle eigenvalues of the assembled matrix, sorted.
std::vector<double> oracle_real(const PartitionedHamiltonian& ph)
{
	std::vector<double> out;
	for(const cx& e : direct_spectrum(assemble_full(ph)).eigenvalues)
	{
		if(e.imag() == 0.0)
		{
			out.push_back(e.real());
		}
	}
	std::sort(out.begin(), out.end());
	return out;
}

void check_oracle_equivalence(const PartitionedHamiltonian& ph, double tol)
{
	const Interval iv = default_interval(ph);
	const BreakingReport rep = detect_breaking(ph, iv);
	CHECK(rep.consistent());
	const std::vector<double> roots = energies(rep.roots);
	const std::vector<double> oracle = oracle_real(ph);
	REQUIRE(roots.size() == oracle.size());
	for(std::size_t k = 0; k < roots.size(); ++k)
	{
		CHECK(std::abs(roots[k] - oracle[k]) <= tol * std::max(1.0, std::abs(oracle[k])));
	}
	for(const auto& r : rep.roots)
	{
		if(r.kind == RootKind::real_root && r.multiplicity == 1)
		{
			CHECK(r.residual <= 1e-10);
			CHECK(r.bracket.first <= r.energy);
			CHECK(r.energy <= r.bracket.second);
		}
	}
}

} // namespace

TEST_CASE("toy roots in closed form")
{
	SUBCASE("alpha = -1, omega = 0.3")
	{
		const auto roots = solve_selfconsistent(toy(0.3, -1), {0.0, 4.0});
		REQUIRE(roots.size() == 2);
		CHECK(roots[0].energy == doctest::Approx(1.1).epsilon(1e-12));
		CHECK(roots[1].energy == doctest::Approx(1.9).epsilon(1e-12));
		for(const auto& r : roots)
		{
			CHECK(r.residual <= 1e-10);
			CHECK(r.kind == RootKind::real_root);
		}
	}
	SUBCASE("alpha = +1, omega = 0.6")
	{
		const auto roots = solve_selfconsistent(toy(0.6, 1), {0.0, 4.0});
		REQUIRE(roots.size() == 2);
		CHECK(std::abs(roots[0].energy - (3.0 - std::sqrt(2.44)) / 2.0) <= 1e-10);
		CHECK(std::abs(roots[1].energy - (3.0 + std::sqrt(2.44)) / 2.0) <= 1e-10);
	}
	SUBCASE("decoupled: branch roots are eig(F), eig(G) only as pole-adjacent")
	{
		RMatrix F(2, 2);
		F << 1.0, 0.3, 0.3, 3.5;
		const PartitionedHamiltonian ph(F, RMatrix::Constant(1, 1, 2.0), CMatrix::Zero(2, 1), 1);
		const auto roots = solve_selfconsistent(ph, {-2.0, 6.0});
		std::vector<double> branch;
		std::vector<double> pole;
		for(const auto& r : roots)
		{
			(r.kind == RootKind::real_root ? branch : pole).push_back(r.energy);
		}
		Eigen::SelfAdjointEigenSolver<RMatrix> es(F);
		REQUIRE(branch.size() == 2);
		CHECK(branch[0] == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-12));
		CHECK(branch[1] == doctest::Approx(es.eigenvalues()(1)).epsilon(1e-12));
		REQUIRE(pole.size() == 1);
		CHECK(pole[0] == 2.0);
	}
}

TEST_CASE("interval errors")
{
	CHECK_THROWS_AS(solve_selfconsistent(toy(0.3, -1), {2.0 - 1e-9, 2.0 + 1e-9}), DegenerateIntervalError);
	CHECK_THROWS_AS(solve_selfconsistent(toy(0.3, -1), {3.0, 1.0}), std::invalid_argument);
	try
	{
		(void)detect_breaking(toy(0.3, -1), {0.0, 1.5});
		FAIL("expected CoverageError");
	}
	catch(const CoverageError& e)
	{
		CHECK(e.excluded() == doctest::Approx(1.9).epsilon(1e-12));
	}
}

TEST_CASE("breaking detection on the toy")
{
	SUBCASE("unbroken")
	{
		const BreakingReport r = detect_breaking(toy(0.3, -1), {0.0, 4.0});
		CHECK(r.real_roots_found == 2);
		CHECK(r.missing_pairs == 0);
		CHECK_FALSE(r.boundary_flag);
		CHECK(r.consistent());
	}
	SUBCASE("broken")
	{
		const BreakingReport r = detect_breaking(toy(0.6, -1), {0.0, 4.0});
		CHECK(r.real_roots_found == 0);
		CHECK(r.missing_pairs == 1);
		REQUIRE(r.complex_pairs.size() == 1);
		CHECK(std::abs(r.complex_pairs[0] - cx{1.5, 0.3316624790}) <= 1e-10);
		CHECK(r.consistent());
	}
	SUBCASE("exceptional point")
	{
		const BreakingReport r = detect_breaking(toy(0.5, -1), {0.0, 4.0});
		CHECK(r.boundary_flag);
		CHECK(r.real_roots_found == 2);
		CHECK(r.missing_pairs == 0);
		REQUIRE(r.roots.size() == 1);
		CHECK(r.roots[0].multiplicity == 2);
		CHECK(std::abs(r.roots[0].energy - 1.5) <= 1e-6);
		CHECK(r.consistent());
	}
	SUBCASE("exceptional point off the sampling grid")
	{
		const BreakingReport r = detect_breaking(toy(0.5, -1), {0.0123, 3.71});
		CHECK(r.boundary_flag);
		CHECK(r.real_roots_found == 2);
		REQUIRE(r.roots.size() == 1);
		CHECK(std::abs(r.roots[0].energy - 1.5) <= 1e-6);
	}
	SUBCASE("close real pair just before the exceptional point")
	{
		const double omega = 0.4999;
		const BreakingReport r = detect_breaking(toy(omega, -1), {0.0, 4.0});
		CHECK(r.real_roots_found == 2);
		const double disc = std::sqrt(1.0 - 4.0 * omega * omega);
		REQUIRE(r.roots.size() == 2);
		CHECK(std::abs(r.roots[0].energy - (3.0 - disc) / 2.0) <= 1e-10);
		CHECK(std::abs(r.roots[1].energy - (3.0 + disc) / 2.0) <= 1e-10);
	}
}

TEST_CASE("level repulsion and attraction in the toy")
{
	double prev_plus = 0.0;
	double prev_minus = 10.0;
	for(int i = 1; i <= 20; ++i)
	{
		const double omega = 0.49 * i / 20.0;
		const auto rp = solve_selfconsistent(toy(omega, 1), {-1.0, 4.0});
		const auto rm = solve_selfconsistent(toy(omega, -1), {-1.0, 4.0});
		REQUIRE(rp.size() == 2);
		REQUIRE(rm.size() == 2);
		const double gp = rp[1].energy - rp[0].energy;
		const double gm = rm[1].energy - rm[0].energy;
		CHECK(gp > prev_plus);
		CHECK(gm < prev_minus);
		prev_plus = gp;
		prev_minus = gm;
	}
}

TEST_CASE("random instances match the oracle")
{
	std::mt19937_64 rng(2024);
	for(int trial = 0; trial < 60; ++trial)
	{
		RandomInstanceSpec spec;
		spec.alpha = trial % 2 ? 1 : -1;
		spec.coupling_scale = trial % 3 == 0 ? 0.3 : 1.0;
		const PartitionedHamiltonian ph = random_partitioned(rng, spec);
		CAPTURE(trial);
		check_oracle_equivalence(ph, 1e-8);
		if(spec.alpha == 1)
		{
			const BreakingReport rep = detect_breaking(ph, default_interval(ph));
			CHECK(rep.missing_pairs == 0);
			CHECK(rep.real_roots_found == int(ph.dim()));
		}
	}
}

TEST_CASE("roots beside a weakly coupled pole")
{
	RMatrix F(1, 1);
	F << 0.986490807787739;
	RMatrix G(2, 2);
	G << -0.696953100234371, 0.128244271132707, 0.128244271132707, 10.3243426412679;
	CMatrix A(1, 2);
	A << 0.000564610725931169, 0.00146348915475045;
	const PartitionedHamiltonian ph(F, G, A, 1);
	const BreakingReport rep = detect_breaking(ph, default_interval(ph));
	CHECK(rep.consistent());
	const std::vector<double> found = energies(rep.roots);
	const std::vector<double> oracle = oracle_real(ph);
	REQUIRE(found.size() == oracle.size());
	for(std::size_t k = 0; k < found.size(); ++k)
	{
		CHECK(std::abs(found[k] - oracle[k]) <= 1e-8 * std::max(1.0, std::abs(oracle[k])));
	}

	const SelfConsistentSolver solver(ph);
	const std::vector<SelfConsistentRoot> roots = solver.solve(default_interval(ph));
	REQUIRE(roots.size() == 3);
	const CMatrix H = assemble_full(ph).entries();
	for(const auto& r : roots)
	{
		CAPTURE(r.energy);
		const CVector psi = solver.root_vector(r);
		CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
		CHECK((H * psi - r.energy * psi).norm() <= 1e-8);
	}
	const auto hidden = std::count_if(roots.begin(), roots.end(),
		[](const auto& r) { return r.dual_level >= 0; });
	CHECK(hidden >= 1);
}

TEST_CASE("model Hamiltonians match the oracle")
{
	for(int dim : {8, 15, 30})
	{
		const BasisSpec b(dim);
		const OperatorMatrix P = build_parity(b);
		for(const ModelSpec& spec : {ModelSpec{1.0, {0.0, 0.0}, 4, 1.0}, ModelSpec{1.0, {0.2, 0.0}, 4, 0.1},
				ModelSpec{1.0, {0.0, 0.2}, 4, 0.1}, ModelSpec{1.0, {0.0, 0.6}, 4, 0.1}})
		{
			CAPTURE(dim);
			CAPTURE(spec.cubic);
			const PartitionedHamiltonian ph = parity_partition(build_model(spec, b), P);
			check_oracle_equivalence(ph, 1e-8);
		}
	}
}

TEST_CASE("solver is deterministic")
{
	const BasisSpec b(14);
	const PartitionedHamiltonian ph = parity_partition(build_model({1.0, {0.0, 0.3}, 4, 0.1}, b), build_parity(b));
	const auto a = solve_selfconsistent(ph, default_interval(ph));
	const auto c = solve_selfconsistent(ph, default_interval(ph));
	REQUIRE(a.size() == c.size());
	for(std::size_t k = 0; k < a.size(); ++k)
	{
		CHECK(a[k].energy == c[k].energy);
		CHECK(a[k].residual == c[k].residual);
	}
}

TEST_CASE("sweeps")
{
	SUBCASE("Hermitian quartic family never breaks")
	{
		const SweepResult s = sweep(ModelSpec{}, SweepParameter::g, {0.1, 0.5, 1.0}, BasisSpec(16));
		for(const auto& row : s.rows)
		{
			CHECK(row.error.empty());
			CHECK(row.broken_count == 0);
			CHECK(row.energies.size() == 16);
		}
		CHECK_FALSE(s.transition.has_value());
	}
	SUBCASE("toy family")
	{
		const PartitionedHamiltonian base = toy(1.0, -1);
		const SweepResult s = sweep([&](double w) { return base.with_coupling_scaled(w); },
			{0.3, 0.5, 0.6}, Interval{0.0, 4.0});
		CHECK(s.rows[0].broken_count == 0);
		CHECK(s.rows[1].broken_count == 0);
		CHECK(s.rows[1].boundary_flag);
		CHECK(s.rows[2].broken_count == 2);
		REQUIRE(s.transition.has_value());
		CHECK(s.transition->first == 0.5);
		CHECK(s.transition->second == 0.6);
		// Pseudo-norms: Q = +1 and -1 levels below the boundary, vanishing in the pair.
		CHECK(s.rows[0].self_pseudo_norms[0] * s.rows[0].self_pseudo_norms[1] < 0.0);
		CHECK(std::abs(s.rows[2].self_pseudo_norms[0]) <= 1e-10);
	}
	SUBCASE("imaginary cubic family: transition where the oracle first sees a pair")
	{
		const BasisSpec b(12);
		std::vector<double> grid;
		for(int i = 0; i <= 12; ++i)
		{
			grid.push_back(0.1 * i);
		}
		const ModelSpec base{1.0, {0.0, 0.0}, 4, 0.1};
		const SweepResult s = sweep(base, SweepParameter::f_im, grid, b, {}, 4);
		int first_broken = -1;
		for(std::size_t i = 0; i < grid.size(); ++i)
		{
			CHECK(s.rows[i].error.empty());
			if(i > 0)
			{
				CHECK(s.rows[i].broken_count >= s.rows[i - 1].broken_count);
			}
			ModelSpec spec = base;
			spec.cubic = {0.0, grid[i]};
			bool complex = false;
			for(const cx& e : direct_spectrum(build_model(spec, b)).eigenvalues)
			{
				complex |= e.imag() != 0.0;
			}
			if(complex && first_broken < 0)
			{
				first_broken = int(i);
			}
		}
		REQUIRE(first_broken > 0);
		REQUIRE(s.transition.has_value());
		CHECK(s.transition->second == grid[first_broken]);
		CHECK(s.transition->first == grid[first_broken - 1]);
	}
	SUBCASE("threaded rows equal sequential rows")
	{
		const PartitionedHamiltonian base = toy(1.0, -1);
		std::vector<double> grid;
		for(int i = 0; i < 9; ++i)
		{
			grid.push_back(0.2 + 0.05 * i);
		}
		auto fam = [&](double w) { return base.with_coupling_scaled(w); };
		const SweepResult a = sweep(fam, grid, Interval{0.0, 4.0}, {}, 1);
		const SweepResult c = sweep(fam, grid, Interval{0.0, 4.0}, {}, 4);
		for(std::size_t i = 0; i < grid.size(); ++i)
		{
			CHECK(a.rows[i].energies == c.rows[i].energies);
		}
	}
	SUBCASE("grid validation")
	{
		CHECK_THROWS_AS(sweep(ModelSpec{}, SweepParameter::g, {}, BasisSpec(4)), std::invalid_argument);
		CHECK_THROWS_AS(sweep(ModelSpec{}, SweepParameter::g, {0.1, 0.1}, BasisSpec(4)), std::invalid_argument);
		CHECK_THROWS_AS(sweep(ModelSpec{}, SweepParameter::coupling, {0.1}, BasisSpec(4)), std::invalid_argument);
	}
}
