#include "ptfesh/selfconsist.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include <Eigen/SVD>

#include "ptfesh/errors.hpp"
#include "ptfesh/oracle.hpp"
#include "ptfesh/pseudometric.hpp"

namespace ptfesh
{

const char* to_string(RootKind k)
{
	return k == RootKind::real_root ? "real-root" : "pole-adjacent";
}

const char* to_string(SweepParameter p)
{
	switch(p)
	{
	case SweepParameter::f_re: return "f_re";
	case SweepParameter::f_im: return "f_im";
	case SweepParameter::g: return "g";
	case SweepParameter::coupling: return "coupling";
	}
	return "g";
}

Interval default_interval(const PartitionedHamiltonian& ph)
{
	// Every eigenvalue has its real part in the numerical range of the
	// Hermitian part.
	const CMatrix m = assemble_full(ph).entries();
	const CMatrix herm = 0.5 * (m + m.adjoint());
	const Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
	if(es.info() != Eigen::Success)
	{
		throw OracleFailure("numerical range: eigensolver did not converge");
	}
	return {es.eigenvalues()(0) - 1.0, es.eigenvalues()(es.eigenvalues().size() - 1) + 1.0};
}

SelfConsistentSolver::SelfConsistentSolver(const PartitionedHamiltonian& ph, SolverOptions options)
	: reduction_(ph), options_(options)
{
	if(!(options_.tol > 0.0))
	{
		throw std::invalid_argument("solver tolerance must be positive");
	}
}

RVector SelfConsistentSolver::residuals(double rho) const
{
	return (reduction_.branch_values(rho).array() - rho).matrix();
}

namespace
{

PartitionedHamiltonian complementary(const PartitionedHamiltonian& ph)
{
	const int alpha = ph.alpha();
	std::optional<CMatrix> lower;
	if(ph.has_lower_override())
	{
		lower = double(alpha) * ph.A();
	}
	return PartitionedHamiltonian(ph.G(), ph.F(), double(alpha) * ph.lower(), alpha,
		ph.provenance(), lower);
}

constexpr double golden = 0.6180339887498949;

struct Sample
{
	double x;
	double g;
};

class BranchScanner
{
public:
	BranchScanner(const SelfConsistentSolver& solver, double tol) : solver_(solver), tol_(tol) {}

	double g(Eigen::Index n, double x) const { return solver_.residuals(x)(n); }

	SelfConsistentRoot bisect(Eigen::Index n, Sample a, Sample b) const
	{
		const std::pair<double, double> bracket{a.x, b.x};
		for(int iter = 0; iter < 400; ++iter)
		{
			const double width = b.x - a.x;
			if(width <= tol_ && std::min(std::abs(a.g), std::abs(b.g)) <= tol_)
			{
				break;
			}
			const double floor = 4.0 * std::numeric_limits<double>::epsilon()
				* std::max({1.0, std::abs(a.x), std::abs(b.x)});
			if(width <= floor)
			{
				break;
			}
			const double m = 0.5 * (a.x + b.x);
			const double gm = g(n, m);
			if(gm == 0.0)
			{
				a = b = {m, gm};
				break;
			}
			if((gm < 0.0) == (a.g < 0.0))
			{
				a = {m, gm};
			}
			else
			{
				b = {m, gm};
			}
		}
		Sample best = std::abs(a.g) <= std::abs(b.g) ? a : b;
		if(b.g != a.g && b.x > a.x)
		{
			const double xs = a.x - a.g * (b.x - a.x) / (b.g - a.g);
			if(xs > a.x && xs < b.x)
			{
				const double gs = g(n, xs);
				if(std::abs(gs) < std::abs(best.g))
				{
					best = {xs, gs};
				}
			}
		}
		SelfConsistentRoot r;
		r.level_index = int(n);
		r.energy = best.x;
		r.residual = std::abs(best.g);
		r.bracket = bracket;
		return r;
	}

	// |g_n| has a local minimum near mid without a sign change on the grid:
	// either two close roots or a tangential double root, or nothing.
	void refine_extremum(Eigen::Index n, Sample left, Sample mid, Sample right,
		std::vector<SelfConsistentRoot>& out) const
	{
		const double s = mid.g >= 0.0 ? 1.0 : -1.0;
		double a = left.x;
		double b = right.x;
		double c = b - golden * (b - a);
		double d = a + golden * (b - a);
		double gc = g(n, c);
		double gd = g(n, d);
		Sample best = mid;
		auto consider = [&](double x, double gx) {
			if(s * gx < s * best.g)
			{
				best = {x, gx};
			}
		};
		consider(c, gc);
		consider(d, gd);
		for(int iter = 0; iter < 200 && s * best.g >= 0.0; ++iter)
		{
			if(b - a <= 1e-9 * (1.0 + std::abs(a) + std::abs(b)))
			{
				break;
			}
			if(s * gc < s * gd)
			{
				b = d;
				d = c;
				gd = gc;
				c = b - golden * (b - a);
				gc = g(n, c);
				consider(c, gc);
			}
			else
			{
				a = c;
				c = d;
				gc = gd;
				d = a + golden * (b - a);
				gd = g(n, d);
				consider(d, gd);
			}
		}
		if(s * best.g < 0.0)
		{
			out.push_back(bisect(n, left, best));
			out.push_back(bisect(n, best, right));
			return;
		}
		if(std::abs(best.g) <= tol_)
		{
			SelfConsistentRoot r;
			r.level_index = int(n);
			r.energy = best.x;
			r.residual = std::abs(best.g);
			r.bracket = {left.x, right.x};
			r.multiplicity = 2;
			out.push_back(r);
		}
	}

private:
	const SelfConsistentSolver& solver_;
	double tol_;
};

std::vector<double> segment_grid(double a, double b, bool a_pole, bool b_pole,
	const SolverOptions& opt)
{
	const double len = b - a;
	const int n = std::clamp(int(std::ceil(opt.points_per_unit * len)), opt.points_per_segment,
		std::max(opt.points_per_segment, opt.max_points_per_segment));
	std::vector<double> pts;
	pts.reserve(n + 1 + 2 * opt.pole_refinement_levels);
	for(int j = 0; j <= n; ++j)
	{
		pts.push_back(a + len * double(j) / double(n));
	}
	double step = 0.5 * len;
	for(int k = 1; k <= opt.pole_refinement_levels; ++k)
	{
		step *= 0.5;
		if(a_pole)
		{
			pts.push_back(a + step);
		}
		if(b_pole)
		{
			pts.push_back(b - step);
		}
	}
	std::sort(pts.begin(), pts.end());
	pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
	return pts;
}

} // namespace

bool SelfConsistentSolver::scan(Interval interval, std::vector<SelfConsistentRoot>& roots) const
{
	const RVector& poles = reduction_.poles();
	std::vector<double> cuts{interval.lo};
	std::vector<bool> is_pole{false};
	for(Eigen::Index k = 0; k < poles.size(); ++k)
	{
		if(poles(k) > interval.lo && poles(k) < interval.hi && poles(k) > cuts.back())
		{
			cuts.push_back(poles(k));
			is_pole.push_back(true);
		}
	}
	cuts.push_back(interval.hi);
	is_pole.push_back(false);

	const BranchScanner scanner(*this, options_.tol);
	const Eigen::Index branches = reduction_.partitioned().n_even();
	bool any_point = false;

	for(std::size_t s = 0; s + 1 < cuts.size(); ++s)
	{
		std::vector<double> grid;
		for(double x : segment_grid(cuts[s], cuts[s + 1], is_pole[s], is_pole[s + 1], options_))
		{
			if(reduction_.pole_distance(x) > 2.0 * FeshbachReduction::pole_guard(x))
			{
				grid.push_back(x);
			}
		}
		any_point |= !grid.empty();
		if(grid.size() < 2)
		{
			continue;
		}
		const Eigen::Index m = Eigen::Index(grid.size());
		RMatrix values(branches, m);
		for(Eigen::Index i = 0; i < m; ++i)
		{
			values.col(i) = residuals(grid[i]);
		}
		for(Eigen::Index n = 0; n < branches; ++n)
		{
			for(Eigen::Index i = 0; i + 1 < m; ++i)
			{
				const Sample a{grid[i], values(n, i)};
				const Sample b{grid[i + 1], values(n, i + 1)};
				if((a.g < 0.0) != (b.g < 0.0))
				{
					roots.push_back(scanner.bisect(n, a, b));
				}
			}
			for(Eigen::Index i = 1; i + 1 < m; ++i)
			{
				const double gl = values(n, i - 1);
				const double gm = values(n, i);
				const double gr = values(n, i + 1);
				const bool same_sign = (gl < 0.0) == (gm < 0.0) && (gm < 0.0) == (gr < 0.0);
				if(same_sign && std::abs(gm) < std::abs(gl)
					&& std::abs(gm) <= std::abs(gr))
				{
					scanner.refine_extremum(n, {grid[i - 1], gl}, {grid[i], gm},
						{grid[i + 1], gr}, roots);
				}
			}
		}
	}
	return any_point;
}

std::vector<SelfConsistentRoot> SelfConsistentSolver::solve(Interval interval) const
{
	if(!std::isfinite(interval.lo) || !std::isfinite(interval.hi) || !(interval.lo < interval.hi))
	{
		throw std::invalid_argument("root interval must be finite with lo < hi");
	}
	std::vector<SelfConsistentRoot> roots;
	if(!scan(interval, roots))
	{
		throw DegenerateIntervalError("interval has no sample point outside the pole guards");
	}

	// Roots hidden in the guard band of a pole of G, or decoupled from the model space.
	const PartitionedHamiltonian& ph = reduction_.partitioned();
	const RVector& poles = reduction_.poles();
	const SelfConsistentSolver dual(complementary(ph), options_);
	const RMatrix& U = reduction_.pole_vectors();
	const double threshold = 1e-10 * std::max(1.0, max_abs(ph.A()));
	Eigen::Index k = 0;
	while(k < poles.size())
	{
		Eigen::Index end = k + 1;
		while(end < poles.size() && poles(end) - poles(k) <= 1e-9 * (1.0 + std::abs(poles(k))))
		{
			++end;
		}
		const double lambda = poles.segment(k, end - k).mean();
		std::vector<SelfConsistentRoot> hidden;
		const Interval band{
			std::max(interval.lo, poles(k) - 5.0 * FeshbachReduction::pole_guard(poles(k))),
			std::min(interval.hi, poles(end - 1) + 5.0 * FeshbachReduction::pole_guard(poles(end - 1)))};
		if(band.lo < band.hi)
		{
			std::vector<SelfConsistentRoot> found;
			dual.scan(band, found);
			for(SelfConsistentRoot& r : found)
			{
				const bool seen = std::any_of(roots.begin(), roots.end(), [&](const SelfConsistentRoot& p) {
					return std::abs(p.energy - r.energy) <= 1e-9 * (1.0 + std::abs(r.energy));
				});
				if(!seen)
				{
					r.dual_level = r.level_index;
					r.level_index = int(ph.n_even()) + r.level_index;
					r.kind = RootKind::pole_adjacent;
					hidden.push_back(r);
				}
			}
		}
		std::vector<SelfConsistentRoot> decoupled;
		if(lambda >= interval.lo && lambda <= interval.hi)
		{
			const CMatrix coupled = ph.A() * U.middleCols(k, end - k).cast<cx>();
			Eigen::JacobiSVD<CMatrix> svd(coupled);
			const RVector sv = svd.singularValues();
			const Eigen::Index rank_full = end - k;
			// singular values come sorted descending; pad for n_even < cluster size
			for(Eigen::Index j = 0; j < rank_full; ++j)
			{
				const double sigma = j < sv.size() ? sv(j) : 0.0;
				if(sigma <= threshold)
				{
					SelfConsistentRoot r;
					r.level_index = int(ph.n_even() + k + j);
					r.energy = lambda;
					r.residual = sigma;
					r.bracket = {lambda, lambda};
					r.kind = RootKind::pole_adjacent;
					decoupled.push_back(r);
				}
			}
		}
		const auto& pick = hidden.size() >= decoupled.size() ? hidden : decoupled;
		roots.insert(roots.end(), pick.begin(), pick.end());
		k = end;
	}

	std::stable_sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
		if(a.energy != b.energy)
		{
			return a.energy < b.energy;
		}
		return a.level_index < b.level_index;
	});
	return roots;
}

CVector SelfConsistentSolver::root_vector(const SelfConsistentRoot& root) const
{
	const PartitionedHamiltonian& ph = reduction_.partitioned();
	CVector psi = CVector::Zero(ph.dim());
	if(root.dual_level >= 0)
	{
		const SelfConsistentSolver dual(complementary(ph), options_);
		SelfConsistentRoot d = root;
		d.level_index = root.dual_level;
		d.dual_level = -1;
		d.kind = RootKind::real_root;
		const CVector swapped = dual.root_vector(d);
		psi.head(ph.n_even()) = swapped.tail(ph.n_even());
		psi.tail(ph.n_odd()) = swapped.head(ph.n_odd());
		return psi;
	}
	if(root.kind == RootKind::pole_adjacent)
	{
		const Eigen::Index col = root.level_index - ph.n_even();
		psi.tail(ph.n_odd()) = reduction_.pole_vectors().col(col).cast<cx>();
		return psi;
	}
	const std::vector<LinearizedLevel> levels = reduction_.linearized_spectrum(root.energy);
	std::size_t pick = std::size_t(root.level_index);
	if(root.level_index < 0 || pick >= levels.size())
	{
		pick = 0;
		double best = std::numeric_limits<double>::infinity();
		for(std::size_t i = 0; i < levels.size(); ++i)
		{
			const double d = std::abs(levels[i].energy - root.energy);
			if(d < best)
			{
				best = d;
				pick = i;
			}
		}
	}
	const CVector& v = levels[pick].vector;
	psi.head(ph.n_even()) = v;
	psi.tail(ph.n_odd()) = reduction_.reconstruct_eliminated(root.energy, v);
	return psi / psi.norm();
}

std::vector<SelfConsistentRoot> solve_selfconsistent(const PartitionedHamiltonian& ph,
	Interval interval, const SolverOptions& options)
{
	return SelfConsistentSolver(ph, options).solve(interval);
}

BreakingReport detect_breaking(const PartitionedHamiltonian& ph, Interval interval,
	const SolverOptions& options)
{
	BreakingReport rep;
	rep.total_dim = int(ph.dim());
	rep.oracle = direct_spectrum(assemble_full(ph));
	for(const cx& e : rep.oracle.eigenvalues)
	{
		if(e.real() < interval.lo || e.real() > interval.hi)
		{
			throw CoverageError("interval [" + std::to_string(interval.lo) + ", "
					+ std::to_string(interval.hi) + "] excludes eigenvalue with real part "
					+ std::to_string(e.real()),
				e.real());
		}
	}
	rep.roots = solve_selfconsistent(ph, interval, options);

	const std::size_t n = rep.oracle.eigenvalues.size();
	std::vector<bool> used(n, false);
	for(const SelfConsistentRoot& r : rep.roots)
	{
		rep.real_roots_found += r.multiplicity;
		if(r.multiplicity > 1)
		{
			rep.boundary_flag = true;
		}
		for(int copy = 0; copy < r.multiplicity; ++copy)
		{
			std::size_t best = n;
			double best_d = std::numeric_limits<double>::infinity();
			for(std::size_t k = 0; k < n; ++k)
			{
				if(used[k])
				{
					continue;
				}
				const double d = std::abs(rep.oracle.eigenvalues[k] - r.energy);
				if(d < best_d)
				{
					best_d = d;
					best = k;
				}
			}
			if(best < n && best_d <= 1e-5 * (1.0 + std::abs(r.energy)))
			{
				used[best] = true;
			}
		}
	}
	for(std::size_t i = 1; i < rep.roots.size(); ++i)
	{
		if(rep.roots[i].energy - rep.roots[i - 1].energy <= 1e2 * options.tol)
		{
			rep.boundary_flag = true;
		}
	}
	for(const PairLink& link : rep.oracle.pairs)
	{
		if(!used[link.plus] && !used[link.minus])
		{
			used[link.plus] = used[link.minus] = true;
			rep.complex_pairs.push_back(rep.oracle.eigenvalues[link.plus]);
			++rep.missing_pairs;
		}
	}
	for(std::size_t k = 0; k < n; ++k)
	{
		if(!used[k])
		{
			rep.unmatched.push_back(rep.oracle.eigenvalues[k]);
		}
	}
	return rep;
}

OperatorMatrix conserved_metric(const PartitionedHamiltonian& ph)
{
	const OperatorMatrix full = assemble_full(ph);
	try
	{
		return choose_metric(full, block_parity(ph));
	}
	catch(const StructureError&)
	{
		return OperatorMatrix(CMatrix(CMatrix::Identity(ph.dim(), ph.dim())),
			SymmetryTag::hermitian);
	}
}

namespace
{

PhaseDiagramRow make_row(const PartitionedFamily& family, double x,
	const std::optional<Interval>& interval, const SolverOptions& options)
{
	PhaseDiagramRow row;
	row.parameter = x;
	try
	{
		const PartitionedHamiltonian ph = family(x);
		const Interval iv = interval ? *interval : default_interval(ph);
		const BreakingReport rep = detect_breaking(ph, iv, options);
		const OperatorMatrix metric = conserved_metric(ph);
		const SelfConsistentSolver solver(ph, options);

		std::vector<std::pair<cx, double>> levels;
		for(const SelfConsistentRoot& r : rep.roots)
		{
			const CVector psi = solver.root_vector(r);
			const double s = psi.dot(metric.entries() * psi).real();
			for(int copy = 0; copy < r.multiplicity; ++copy)
			{
				levels.emplace_back(cx{r.energy, 0.0}, s);
			}
		}
		for(const PairLink& link : rep.oracle.pairs)
		{
			const cx e = rep.oracle.eigenvalues[link.plus];
			if(std::find(rep.complex_pairs.begin(), rep.complex_pairs.end(), e)
				== rep.complex_pairs.end())
			{
				continue;
			}
			for(Eigen::Index idx : {link.plus, link.minus})
			{
				const CVector psi = rep.oracle.vectors.col(idx);
				levels.emplace_back(rep.oracle.eigenvalues[idx],
					psi.dot(metric.entries() * psi).real() / psi.squaredNorm());
			}
		}
		std::stable_sort(levels.begin(), levels.end(), [](const auto& a, const auto& b) {
			if(a.first.real() != b.first.real())
			{
				return a.first.real() < b.first.real();
			}
			return a.first.imag() < b.first.imag();
		});
		for(const auto& [e, s] : levels)
		{
			row.energies.push_back(e);
			row.self_pseudo_norms.push_back(s);
		}
		row.broken_count = 2 * rep.missing_pairs;
		row.boundary_flag = rep.boundary_flag;
		if(!rep.consistent())
		{
			row.error = "root count inconsistent with oracle ("
				+ std::to_string(rep.unmatched.size()) + " unmatched eigenvalues)";
		}
	}
	catch(const std::exception& e)
	{
		row.error = e.what();
	}
	return row;
}

} // namespace

SweepResult sweep(const PartitionedFamily& family, const std::vector<double>& grid,
	std::optional<Interval> interval, const SolverOptions& options, unsigned threads)
{
	if(grid.empty())
	{
		throw std::invalid_argument("sweep grid must be nonempty");
	}
	const bool up = grid.size() < 2 || grid[1] > grid[0];
	for(std::size_t i = 1; i < grid.size(); ++i)
	{
		if(up ? !(grid[i] > grid[i - 1]) : !(grid[i] < grid[i - 1]))
		{
			throw std::invalid_argument("sweep grid must be strictly monotone");
		}
	}

	SweepResult result;
	result.rows.resize(grid.size());
	const unsigned workers = std::max(1u, std::min<unsigned>(threads, unsigned(grid.size())));
	if(workers == 1)
	{
		for(std::size_t i = 0; i < grid.size(); ++i)
		{
			result.rows[i] = make_row(family, grid[i], interval, options);
		}
	}
	else
	{
		std::atomic<std::size_t> next{0};
		std::vector<std::thread> pool;
		for(unsigned w = 0; w < workers; ++w)
		{
			pool.emplace_back([&] {
				for(std::size_t i = next++; i < grid.size(); i = next++)
				{
					result.rows[i] = make_row(family, grid[i], interval, options);
				}
			});
		}
		for(std::thread& t : pool)
		{
			t.join();
		}
	}

	for(std::size_t i = 1; i < result.rows.size(); ++i)
	{
		if(result.rows[i].broken_count > result.rows[i - 1].broken_count)
		{
			result.transition = std::make_pair(grid[i - 1], grid[i]);
			break;
		}
	}
	return result;
}

SweepResult sweep(const ModelSpec& base, SweepParameter parameter, const std::vector<double>& grid,
	const BasisSpec& basis, const SolverOptions& options, unsigned threads)
{
	if(parameter == SweepParameter::coupling)
	{
		throw std::invalid_argument("coupling sweeps apply to custom partitioned instances only");
	}
	base.validate();
	const OperatorMatrix P = build_parity(basis);
	auto family = [=](double x) {
		ModelSpec spec = base;
		switch(parameter)
		{
		case SweepParameter::f_re: spec.cubic = cx{x, spec.cubic.imag()}; break;
		case SweepParameter::f_im: spec.cubic = cx{spec.cubic.real(), x}; break;
		case SweepParameter::g: spec.g = x; break;
		case SweepParameter::coupling: break;
		}
		return parity_partition(build_model(spec, basis), P);
	};
	return sweep(family, grid, std::nullopt, options, threads);
}

} // namespace ptfesh
