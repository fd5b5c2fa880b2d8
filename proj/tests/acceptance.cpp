// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ptfesh/evolve.hpp"
#include "ptfesh/feshbach.hpp"
#include "ptfesh/hobasis.hpp"
#include "ptfesh/oracle.hpp"
#include "ptfesh/partitioning.hpp"
#include "ptfesh/pseudometric.hpp"
#include "ptfesh/random_instance.hpp"
#include "ptfesh/selfconsist.hpp"

using namespace ptfesh;

namespace
{

constexpr double inf = std::numeric_limits<double>::infinity();

struct Outcome
{
	bool pass = true;
	std::string detail;

	void require(bool ok, const std::string& what, double value)
	{
		char buf[160];
		std::snprintf(buf, sizeof buf, "%s%s=%.3g", detail.empty() ? "" : " ", what.c_str(), value);
		detail += buf;
		if(!ok)
		{
			pass = false;
			detail += "(FAIL)";
		}
	}
};

struct Criterion
{
	const char* id;
	const char* title;
	double budget_ms;
	std::function<Outcome()> body;
};

PartitionedHamiltonian toy(double omega, int alpha)
{
	return PartitionedHamiltonian(RMatrix::Constant(1, 1, 1.0), RMatrix::Constant(1, 1, 2.0),
		CMatrix::Constant(1, 1, omega), alpha);
}

PartitionedHamiltonian model_partition(const ModelSpec& spec, int dim)
{
	const BasisSpec b(dim);
	return parity_partition(build_model(spec, b), build_parity(b));
}

std::vector<PartitionedHamiltonian> random_instances()
{
	std::mt19937_64 rng(20240601);
	std::vector<PartitionedHamiltonian> out;
	for(int k = 0; k < 100; ++k)
	{
		RandomInstanceSpec spec;
		spec.max_block = 6;
		spec.alpha = k % 2 == 0 ? 1 : -1;
		spec.coupling_scale = k % 4 < 2 ? 1.0 : 0.4;
		out.push_back(random_partitioned(rng, spec));
	}
	return out;
}

const ModelSpec quartic{1.0, {0.0, 0.0}, 4, 1.0};
const ModelSpec weak_pt{1.0, {0.0, 0.2}, 4, 0.1};
const ModelSpec real_cubic{1.0, {0.2, 0.0}, 4, 0.1};
const ModelSpec stiff_pt{1.0, {0.0, 0.2}, 4, 1.0};
const ModelSpec sextic_pt{1.0, {0.0, 0.3}, 6, 0.05};

std::vector<double> sorted_real_eigenvalues(const SpectralData& s)
{
	std::vector<double> out;
	for(Eigen::Index k = 0; k < s.size(); ++k)
	{
		if(s.is_real(k))
		{
			out.push_back(s.eigenvalues[k].real());
		}
	}
	std::sort(out.begin(), out.end());
	return out;
}

std::vector<double> expanded(const std::vector<SelfConsistentRoot>& roots)
{
	std::vector<double> out;
	for(const SelfConsistentRoot& r : roots)
	{
		out.insert(out.end(), r.multiplicity, r.energy);
	}
	return out;
}

// Largest relative gap between roots and the oracle's real eigenvalues.
double oracle_gap(const BreakingReport& rep)
{
	const std::vector<double> roots = expanded(rep.roots);
	const std::vector<double> real = sorted_real_eigenvalues(rep.oracle);
	if(!rep.consistent() || roots.size() != real.size())
	{
		return inf;
	}
	double worst = 0.0;
	for(std::size_t k = 0; k < real.size(); ++k)
	{
		worst = std::max(worst, std::abs(roots[k] - real[k]) / std::max(1.0, std::abs(real[k])));
	}
	return worst;
}

struct Normalized
{
	OperatorMatrix H;
	OperatorMatrix P;
	SpectralData s;
};

Normalized normalized_model(const ModelSpec& spec, int dim)
{
	const BasisSpec b(dim);
	OperatorMatrix H = build_model(spec, b);
	OperatorMatrix P = choose_metric(H, build_parity(b));
	SpectralData s = pseudo_normalize(direct_spectrum(H), P);
	return {std::move(H), std::move(P), std::move(s)};
}

Normalized normalized_partition(const PartitionedHamiltonian& ph)
{
	OperatorMatrix H = assemble_full(ph);
	OperatorMatrix P = conserved_metric(ph);
	SpectralData s = pseudo_normalize(direct_spectrum(H), P);
	return {std::move(H), std::move(P), std::move(s)};
}

// Three weakly coupled broken toys, |Im E| near 1/3.
PartitionedHamiltonian broken_ladder()
{
	RMatrix F = RMatrix::Zero(3, 3);
	RMatrix G = RMatrix::Zero(3, 3);
	CMatrix A = CMatrix::Zero(3, 3);
	for(int k = 0; k < 3; ++k)
	{
		F(k, k) = 1.0 + 3.0 * k;
		G(k, k) = 2.0 + 3.0 * k;
		A(k, k) = 0.6;
	}
	A(0, 1) = A(1, 2) = 0.05;
	A(2, 0) = -0.04;
	return PartitionedHamiltonian(F, G, A, -1);
}

Outcome ac1()
{
	Outcome o;
	double err = 0.0;
	std::vector<double> odd;
	for(const SpikedLevel& l : spiked_oscillator_levels({0.0, 20}))
	{
		odd.push_back(l.energy.real());
		err = std::max(err, std::abs(l.energy.imag()));
	}
	std::sort(odd.begin(), odd.end());
	for(std::size_t k = 0; k < odd.size(); ++k)
	{
		err = std::max(err, std::abs(odd[k] - double(2 * k + 1)));
	}
	o.require(err == 0.0, "G=0_err", err);

	err = 0.0;
	for(const SpikedLevel& l : spiked_oscillator_levels({-0.25, 20}))
	{
		err = std::max(err, std::abs(l.energy - cx{4.0 * l.n + 2.0, 0.0}));
	}
	o.require(err == 0.0, "G=-1/4_err", err);

	err = 0.0;
	for(const SpikedLevel& l : spiked_oscillator_levels({-0.5, 20}))
	{
		err = std::max(err, std::abs(l.energy - cx{4.0 * l.n + 2.0, -double(l.Q)}));
	}
	o.require(err <= 1e-15, "G=-1/2_err", err);
	return o;
}

Outcome ac2()
{
	Outcome o;
	std::mt19937_64 rng(99);
	double worst = 0.0;
	int evaluated = 0;
	for(const PartitionedHamiltonian& ph : random_instances())
	{
		const FeshbachReduction red(ph);
		const Interval iv = default_interval(ph);
		std::uniform_real_distribution<double> u(iv.lo, iv.hi);
		for(int k = 0; k < 50;)
		{
			const double rho = u(rng);
			if(red.pole_distance(rho) <= 1e3 * FeshbachReduction::pole_guard(rho))
			{
				continue;
			}
			const CMatrix h = red.evaluate(rho).H_eff;
			worst = std::max(worst, (h - h.adjoint()).cwiseAbs().maxCoeff());
			++k;
			++evaluated;
		}
	}
	o.require(evaluated == 5000, "evaluations", evaluated);
	o.require(worst <= 1e-12, "max_asymmetry", worst);
	return o;
}

Outcome ac3()
{
	Outcome o;
	double worst = 0.0;
	int incomplete_hermitian = 0;
	for(const PartitionedHamiltonian& ph : random_instances())
	{
		const BreakingReport rep = detect_breaking(ph, default_interval(ph));
		worst = std::max(worst, oracle_gap(rep));
		if(ph.alpha() == 1 && rep.real_roots_found != ph.dim())
		{
			++incomplete_hermitian;
		}
	}
	o.require(worst <= 1e-8, "random_gap", worst);
	double model_worst = 0.0;
	for(const ModelSpec& spec : {quartic, weak_pt})
	{
		const PartitionedHamiltonian ph = model_partition(spec, 30);
		const BreakingReport rep = detect_breaking(ph, default_interval(ph));
		model_worst = std::max(model_worst, oracle_gap(rep));
		if(spec.cubic == cx{0.0, 0.0} && (rep.missing_pairs != 0 || rep.real_roots_found != 30))
		{
			++incomplete_hermitian;
		}
	}
	o.require(model_worst <= 1e-8, "model_gap", model_worst);
	o.require(incomplete_hermitian == 0, "incomplete_hermitian", incomplete_hermitian);
	return o;
}

Outcome ac4()
{
	Outcome o;
	double err = 0.0;
	for(double w : {0.3, 0.49})
	{
		const auto r = solve_selfconsistent(toy(w, -1), {0.0, 4.0});
		const double d = std::sqrt(1.0 - 4.0 * w * w);
		if(r.size() != 2)
		{
			err = inf;
			continue;
		}
		err = std::max({err, std::abs(r[0].energy - (3.0 - d) / 2.0), std::abs(r[1].energy - (3.0 + d) / 2.0)});
	}
	o.require(err <= 1e-10, "attractive_err", err);

	const BreakingReport ep = detect_breaking(toy(0.5, -1), {0.0, 4.0});
	const bool double_root = ep.roots.size() == 1 && ep.roots[0].multiplicity == 2 && ep.boundary_flag;
	const double ep_err = double_root ? std::abs(ep.roots[0].energy - 1.5) : inf;
	o.require(double_root && ep_err <= 1e-6, "double_root_err", ep_err);

	const BreakingReport br = detect_breaking(toy(0.6, -1), {0.0, 4.0});
	const cx expect{1.5, std::sqrt(4.0 * 0.36 - 1.0) / 2.0};
	const double pair_err = br.complex_pairs.size() == 1 && br.real_roots_found == 0
		? std::abs(br.complex_pairs[0] - expect) : inf;
	o.require(pair_err <= 1e-10, "pair_err", pair_err);

	err = 0.0;
	for(double w : {0.3, 0.6})
	{
		const auto r = solve_selfconsistent(toy(w, 1), {-1.0, 4.0});
		const double d = std::sqrt(1.0 + 4.0 * w * w);
		if(r.size() != 2)
		{
			err = inf;
			continue;
		}
		err = std::max({err, std::abs(r[0].energy - (3.0 - d) / 2.0), std::abs(r[1].energy - (3.0 + d) / 2.0)});
	}
	o.require(err <= 1e-10, "repulsive_err", err);

	int violations = 0;
	double prev_rep = -inf;
	double prev_att = inf;
	for(int i = 0; i < 20; ++i)
	{
		const double w = 0.02 + 0.47 * i / 19.0;
		const auto rp = solve_selfconsistent(toy(w, 1), {-1.0, 4.0});
		const auto ra = solve_selfconsistent(toy(w, -1), {-1.0, 4.0});
		if(rp.size() != 2 || ra.size() != 2)
		{
			++violations;
			continue;
		}
		const double gp = rp[1].energy - rp[0].energy;
		const double ga = ra[1].energy - ra[0].energy;
		violations += !(gp > prev_rep) + !(ga < prev_att);
		prev_rep = gp;
		prev_att = ga;
	}
	o.require(violations == 0, "monotonicity_violations", violations);
	return o;
}

Outcome ac5()
{
	Outcome o;
	double spectrum_gap = 0.0;
	double flip_gap = 0.0;
	for(const ModelSpec& spec : {quartic, weak_pt, real_cubic, stiff_pt, sextic_pt})
	{
		const PartitionedHamiltonian ph = model_partition(spec, 30);
		const PartitionedHamiltonian neg = ph.with_coupling_scaled(-1.0);
		const Interval iv = default_interval(ph);
		const auto a = solve_selfconsistent(ph, iv);
		const auto b = solve_selfconsistent(neg, iv);
		if(a.size() != b.size())
		{
			spectrum_gap = inf;
			continue;
		}
		const FeshbachReduction ra(ph);
		const FeshbachReduction rb(neg);
		for(std::size_t k = 0; k < a.size(); ++k)
		{
			spectrum_gap = std::max(spectrum_gap, std::abs(a[k].energy - b[k].energy));
			if(a[k].kind != RootKind::real_root)
			{
				continue;
			}
			const std::vector<LinearizedLevel> levels = ra.linearized_spectrum(a[k].energy);
			const CVector& v = levels[std::size_t(a[k].level_index)].vector;
			const CVector wa = ra.reconstruct_eliminated(a[k].energy, v);
			const CVector wb = rb.reconstruct_eliminated(a[k].energy, v);
			flip_gap = std::max(flip_gap, (wa + wb).cwiseAbs().maxCoeff());
		}
	}
	o.require(spectrum_gap <= 1e-12, "spectrum_gap", spectrum_gap);
	o.require(flip_gap <= 1e-12, "eliminated_flip_gap", flip_gap);
	return o;
}

Outcome ac6()
{
	Outcome o;
	const BasisSpec b40(40);
	const SpectralData s40 = direct_spectrum(build_model(weak_pt, b40));
	double max_im = 0.0;
	for(const cx& e : s40.eigenvalues)
	{
		if(e.real() < 20.0)
		{
			max_im = std::max(max_im, std::abs(e.imag()));
		}
	}
	o.require(max_im <= 1e-8, "max_im_below_20", max_im);

	const PartitionedHamiltonian ph = parity_partition(build_model(weak_pt, b40), build_parity(b40));
	const BreakingReport rep = detect_breaking(ph, default_interval(ph));
	o.require(oracle_gap(rep) <= 1e-8, "feshbach_oracle_gap", oracle_gap(rep));

	const SpectralData s60 = direct_spectrum(build_model(weak_pt, BasisSpec(60)));
	double conv = 0.0;
	for(int k = 0; k < 6; ++k)
	{
		conv = std::max(conv, std::abs(s40.eigenvalues[k] - s60.eigenvalues[k]));
	}
	o.require(conv <= 1e-6, "dim40_vs_60", conv);
	return o;
}

Outcome ac7()
{
	Outcome o;
	double structure = 0.0;
	double ortho = 0.0;
	double self_overlap = 0.0;
	int pairs = 0;
	std::vector<Normalized> cases;
	cases.push_back(normalized_model(quartic, 20));
	cases.push_back(normalized_model(stiff_pt, 20));
	cases.push_back(normalized_model(weak_pt, 20));
	cases.push_back(normalized_model(real_cubic, 20));
	cases.push_back(normalized_partition(toy(0.3, -1)));
	cases.push_back(normalized_partition(toy(0.6, -1)));
	cases.push_back(normalized_partition(broken_ladder()));
	for(const Normalized& c : cases)
	{
		const PseudoNormReport r = gram_report(c.s, c.P);
		structure = std::max(structure, r.max_structure_deviation);
		ortho = std::max(ortho, r.max_offdiag_violation);
		for(const PairLink& p : c.s.pairs)
		{
			self_overlap = std::max({self_overlap, std::abs(r.gram(p.plus, p.plus)), std::abs(r.gram(p.minus, p.minus))});
			++pairs;
		}
	}
	o.require(structure <= 1e-10, "gram_structure", structure);
	o.require(ortho <= 1e-10, "orthogonality", ortho);
	o.require(pairs > 0 && self_overlap <= 1e-10, "pair_self_overlap", self_overlap);
	return o;
}

Outcome ac8()
{
	Outcome o;
	double id_unbroken = 0.0;
	double h_unbroken = 0.0;
	for(const ModelSpec& spec : {quartic, stiff_pt})
	{
		const Normalized c = normalized_model(spec, 20);
		id_unbroken = std::max(id_unbroken, reconstruct_identity(c.s, c.P));
		h_unbroken = std::max(h_unbroken, reconstruct_hamiltonian(c.s, c.P, c.H));
	}
	double id_broken = 0.0;
	double h_broken = 0.0;
	std::vector<Normalized> broken;
	broken.push_back(normalized_model(weak_pt, 20));
	broken.push_back(normalized_model({1.0, {0.0, 1.2}, 4, 0.1}, 20));
	broken.push_back(normalized_partition(broken_ladder()));
	int pairs = 0;
	for(const Normalized& c : broken)
	{
		pairs += int(c.s.pairs.size());
		id_broken = std::max(id_broken, reconstruct_identity(c.s, c.P));
		h_broken = std::max(h_broken, reconstruct_hamiltonian(c.s, c.P, c.H));
	}
	o.require(id_unbroken <= 1e-8, "identity_unbroken", id_unbroken);
	o.require(h_unbroken <= 1e-8, "hamiltonian_unbroken", h_unbroken);
	o.require(pairs > 0 && id_broken <= 1e-8, "identity_broken", id_broken);
	o.require(h_broken <= 1e-8, "hamiltonian_broken", h_broken);
	return o;
}

Outcome ac9()
{
	Outcome o;
	std::vector<double> times;
	for(int i = 0; i < 200; ++i)
	{
		times.push_back(10.0 * i / 199.0);
	}
	struct Case
	{
		Normalized n;
		bool hermitian;
	};
	std::vector<Case> cases;
	cases.push_back({normalized_model(quartic, 20), true});
	cases.push_back({normalized_model(stiff_pt, 20), false});
	cases.push_back({normalized_partition(toy(0.6, -1)), false});
	cases.push_back({normalized_partition(broken_ladder()), false});

	double drift = 0.0;
	double expm_gap = 0.0;
	double min_euclid_change = inf;
	for(const Case& c : cases)
	{
		const Eigen::Index dim = c.n.H.dim();
		CVector psi0 = CVector::Zero(dim);
		psi0(0) = 1.0;
		psi0(1) = cx{0.0, 1.0};
		psi0 /= psi0.norm();
		const EvolutionTrace tr = trace_conservation(c.n.s, c.n.P, psi0, times);
		if(tr.times.size() != times.size())
		{
			drift = inf;
			continue;
		}
		const cx n0 = tr.pseudo_norms.front();
		for(const cx& n : tr.pseudo_norms)
		{
			drift = std::max(drift, std::abs(n - n0) / (1.0 + std::abs(n0)));
		}
		for(double t : {0.5, 2.0, 5.0})
		{
			const CVector direct = direct_propagator(c.n.H, t) * psi0;
			const CVector spectral = evolve_state(c.n.s, c.n.P, psi0, t);
			expm_gap = std::max(expm_gap,
				(direct - spectral).cwiseAbs().maxCoeff() / std::max(1.0, direct.cwiseAbs().maxCoeff()));
		}
		if(!c.hermitian)
		{
			const double change = std::abs(evolve_state(c.n.s, c.n.P, psi0, 5.0).norm() - psi0.norm());
			min_euclid_change = std::min(min_euclid_change, change);
		}
	}
	o.require(drift <= 1e-8, "pseudo_norm_drift", drift);
	o.require(expm_gap <= 1e-7, "expm_gap", expm_gap);
	o.require(min_euclid_change > 1e-6, "min_euclid_change_t5", min_euclid_change);
	return o;
}

Outcome ac10()
{
	Outcome o;
	std::vector<double> grid;
	for(int i = 0; i < 31; ++i)
	{
		grid.push_back(0.30 + 0.30 * i / 30.0);
	}
	const PartitionedHamiltonian base = toy(1.0, -1);
	const SweepResult s =
		sweep([&](double w) { return base.with_coupling_scaled(w); }, grid, Interval{0.0, 4.0}, {}, 4);
	if(!s.transition)
	{
		o.require(false, "transition_found", 0);
		return o;
	}
	const auto [lo, hi] = *s.transition;
	const double width = hi - lo;
	o.require(lo <= 0.5 && 0.5 <= hi && width <= 0.01 + 1e-12, "bracket_width", width);

	// Merging doublet: the two levels of every row before the bracket.
	std::vector<double> merging;
	for(const PhaseDiagramRow& row : s.rows)
	{
		if(row.parameter <= lo && row.energies.size() == 2)
		{
			merging.push_back(std::min(std::abs(row.self_pseudo_norms[0]), std::abs(row.self_pseudo_norms[1])));
		}
	}
	int violations = merging.size() < 5 ? 1 : 0;
	for(std::size_t k = merging.size() >= 5 ? merging.size() - 4 : 1; k < merging.size(); ++k)
	{
		violations += !(merging[k] < merging[k - 1]);
	}
	o.require(violations == 0, "pseudo_norm_monotonicity_violations", violations);
	o.require(true, "last_pre_transition_pseudo_norm", merging.empty() ? inf : merging.back());
	return o;
}

} // namespace

int main()
{
	const std::vector<Criterion> criteria{
		{"AC1", "spiked oscillator closed form", 1.0, ac1},
		{"AC2", "Hermiticity of the reduction", 5000.0, ac2},
		{"AC3", "Schur / oracle equivalence", 30000.0, ac3},
		{"AC4", "2x2 toy exact thresholds", 1000.0, ac4},
		{"AC5", "sign-flip invariance", 10000.0, ac5},
		{"AC6", "PT reality at weak coupling", 10000.0, ac6},
		{"AC7", "pseudo-metric structure", 10000.0, ac7},
		{"AC8", "spectral reconstructions", 5000.0, ac8},
		{"AC9", "pseudo-unitary evolution", 10000.0, ac9},
		{"AC10", "sweep transition bracketing", 5000.0, ac10},
	};
	int failures = 0;
	for(const Criterion& c : criteria)
	{
		Outcome out;
		const auto t0 = std::chrono::steady_clock::now();
		try
		{
			out = c.body();
		}
		catch(const std::exception& e)
		{
			out.pass = false;
			out.detail = std::string("exception: ") + e.what();
		}
		const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
		const bool in_time = ms < c.budget_ms;
		const bool pass = out.pass && in_time;
		failures += !pass;
		std::printf("%-4s %s  %-30s %s  time=%.3f ms (limit %.0f ms)%s\n", c.id, pass ? "PASS" : "FAIL", c.title,
			out.detail.c_str(), ms, c.budget_ms, in_time ? "" : " TOO SLOW");
	}
	std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
	return failures == 0 ? 0 : 1;
}
