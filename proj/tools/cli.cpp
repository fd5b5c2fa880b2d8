#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <thread>
#include <variant>

#include "ptfesh/errors.hpp"
#include "ptfesh/evolve.hpp"
#include "ptfesh/feshbach.hpp"
#include "ptfesh/hobasis.hpp"
#include "ptfesh/oracle.hpp"
#include "ptfesh/partitioning.hpp"
#include "ptfesh/pseudometric.hpp"
#include "ptfesh/random_instance.hpp"
#include "ptfesh/selfconsist.hpp"

namespace ptfesh::cli
{

using json = nlohmann::json;

namespace
{

class ConfigError : public std::runtime_error
{
public:
	using std::runtime_error::runtime_error;
};

enum class Command
{
	spectrum,
	sweep,
	evolve,
	check
};

enum class Method
{
	feshbach,
	direct,
	both
};

struct CustomModel
{
	RMatrix F;
	RMatrix G;
	CMatrix A;
	int alpha = -1;
	std::optional<CMatrix> lower;
};

struct SweepConfig
{
	SweepParameter param = SweepParameter::g;
	double from = 0.0;
	double to = 1.0;
	int steps = 11;
};

struct EvolveConfig
{
	double t_max = 10.0;
	int steps = 200;
	// basis index, or eigenstate index when from_level is set
	int initial = 0;
	bool from_level = false;
};

struct RunConfig
{
	Command command = Command::spectrum;
	ModelSpec model{1.0, {0.0, 0.0}, 4, 1.0};
	std::optional<CustomModel> custom;
	int basis_dim = 20;
	Method method = Method::feshbach;
	std::optional<Interval> interval;
	double tol = 1e-10;
	std::optional<SweepConfig> sweep;
	std::optional<EvolveConfig> evolve;
	std::string csv_path;
	std::string json_path;
	std::uint64_t seed = 1;
};

std::string num(double x)
{
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.17g", x);
	return buf;
}

double parse_real(const std::string& s, const std::string& what)
{
	try
	{
		std::size_t used = 0;
		const double v = std::stod(s, &used);
		if(used == s.size())
		{
			return v;
		}
	}
	catch(const std::exception&)
	{
	}
	throw ConfigError("cannot parse " + what + " from '" + s + "'");
}

}	// namespace

cx parse_complex(const std::string& text)
{
	std::string s;
	for(char c : text)
	{
		if(!std::isspace(static_cast<unsigned char>(c)))
		{
			s += c;
		}
	}
	if(s.empty())
	{
		throw ConfigError("empty complex number");
	}
	if(s.back() != 'i' && s.back() != 'j')
	{
		return {parse_real(s, "complex number"), 0.0};
	}
	s.pop_back();
	// split at the last sign that is not an exponent sign
	std::size_t split = std::string::npos;
	for(std::size_t k = s.size(); k-- > 1;)
	{
		if((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E')
		{
			split = k;
			break;
		}
	}
	const std::string re = split == std::string::npos ? "" : s.substr(0, split);
	std::string im = split == std::string::npos ? s : s.substr(split);
	if(im.empty() || im == "+")
	{
		im = "1";
	}
	else if(im == "-")
	{
		im = "-1";
	}
	return {re.empty() ? 0.0 : parse_real(re, "complex number"), parse_real(im, "complex number")};
}

namespace
{

cx complex_entry(const json& j, const std::string& what)
{
	if(j.is_number())
	{
		return {j.get<double>(), 0.0};
	}
	if(j.is_string())
	{
		return parse_complex(j.get<std::string>());
	}
	throw ConfigError(what + ": entries must be numbers or \"re+imi\" strings");
}

CMatrix complex_matrix(const json& j, const std::string& what)
{
	if(!j.is_array() || j.empty() || !j[0].is_array())
	{
		throw ConfigError(what + " must be a nonempty array of rows");
	}
	const std::size_t rows = j.size();
	const std::size_t cols = j[0].size();
	CMatrix m(rows, cols);
	for(std::size_t r = 0; r < rows; ++r)
	{
		if(!j[r].is_array() || j[r].size() != cols)
		{
			throw ConfigError(what + ": ragged rows");
		}
		for(std::size_t c = 0; c < cols; ++c)
		{
			m(r, c) = complex_entry(j[r][c], what);
		}
	}
	return m;
}

RMatrix real_matrix(const json& j, const std::string& what)
{
	const CMatrix m = complex_matrix(j, what);
	if(m.imag().cwiseAbs().maxCoeff() != 0.0)
	{
		throw ConfigError(what + " must be real");
	}
	return m.real();
}

template<typename T>
T get_field(const json& j, const char* key, const std::string& scope)
{
	try
	{
		return j.at(key).get<T>();
	}
	catch(const json::exception&)
	{
		throw ConfigError(scope + "." + key + " missing or of the wrong type");
	}
}

SweepParameter sweep_param(const std::string& s)
{
	if(s == "f_im")
	{
		return SweepParameter::f_im;
	}
	if(s == "f_re")
	{
		return SweepParameter::f_re;
	}
	if(s == "g")
	{
		return SweepParameter::g;
	}
	if(s == "coupling")
	{
		return SweepParameter::coupling;
	}
	throw ConfigError("sweep.param must be one of f_im, f_re, g, coupling");
}

Method method_from(const std::string& s)
{
	if(s == "feshbach")
	{
		return Method::feshbach;
	}
	if(s == "direct")
	{
		return Method::direct;
	}
	if(s == "both")
	{
		return Method::both;
	}
	throw ConfigError("method must be feshbach, direct or both, got '" + s + "'");
}

Command command_from(const std::string& s)
{
	if(s == "spectrum")
	{
		return Command::spectrum;
	}
	if(s == "sweep")
	{
		return Command::sweep;
	}
	if(s == "evolve")
	{
		return Command::evolve;
	}
	if(s == "check")
	{
		return Command::check;
	}
	throw ConfigError("unknown command '" + s + "'");
}

void parse_model(const json& m, RunConfig& cfg)
{
	if(!m.is_object())
	{
		throw ConfigError("model must be an object");
	}
	if(m.contains("custom"))
	{
		const json& c = m.at("custom");
		CustomModel cm;
		cm.F = real_matrix(c.at("F"), "model.custom.F");
		cm.G = c.contains("G") ? real_matrix(c.at("G"), "model.custom.G") : RMatrix(0, 0);
		cm.A = c.contains("A") ? complex_matrix(c.at("A"), "model.custom.A") : CMatrix(cm.F.rows(), 0);
		cm.alpha = c.value("alpha", -1);
		if(c.contains("A_adjoint"))
		{
			cm.lower = complex_matrix(c.at("A_adjoint"), "model.custom.A_adjoint");
		}
		cfg.custom = std::move(cm);
		return;
	}
	if(m.contains("f"))
	{
		cfg.model.cubic = complex_entry(m.at("f"), "model.f");
	}
	cfg.model.g = m.value("g", cfg.model.g);
	cfg.model.even_power = m.value("power", cfg.model.even_power);
	cfg.model.quadratic = m.value("quadratic", cfg.model.quadratic);
}

RunConfig parse_config(const json& j)
{
	if(!j.is_object())
	{
		throw ConfigError("config must be a JSON object");
	}
	RunConfig cfg;
	try
	{
		if(j.contains("command"))
		{
			cfg.command = command_from(j.at("command").get<std::string>());
		}
		if(j.contains("model"))
		{
			parse_model(j.at("model"), cfg);
		}
		cfg.basis_dim = j.value("basis_dim", cfg.basis_dim);
		if(j.contains("method"))
		{
			cfg.method = method_from(j.at("method").get<std::string>());
		}
		if(j.contains("interval"))
		{
			const json& iv = j.at("interval");
			if(!iv.is_array() || iv.size() != 2)
			{
				throw ConfigError("interval must be [lo, hi]");
			}
			cfg.interval = Interval{iv[0].get<double>(), iv[1].get<double>()};
		}
		cfg.tol = j.value("tol", cfg.tol);
		if(j.contains("sweep"))
		{
			const json& s = j.at("sweep");
			SweepConfig sc;
			sc.param = sweep_param(get_field<std::string>(s, "param", "sweep"));
			sc.from = get_field<double>(s, "from", "sweep");
			sc.to = get_field<double>(s, "to", "sweep");
			sc.steps = get_field<int>(s, "steps", "sweep");
			cfg.sweep = sc;
		}
		if(j.contains("evolve"))
		{
			const json& e = j.at("evolve");
			EvolveConfig ec;
			ec.t_max = e.value("t_max", ec.t_max);
			ec.steps = e.value("steps", ec.steps);
			if(e.contains("initial"))
			{
				const json& init = e.at("initial");
				if(init.is_number_integer())
				{
					ec.initial = init.get<int>();
				}
				else if(init.is_string() && init.get<std::string>().rfind("level:", 0) == 0)
				{
					const std::string n = init.get<std::string>().substr(6);
					const double v = parse_real(n, "evolve.initial level");
					if(v != std::floor(v))
					{
						throw ConfigError("evolve.initial level must be an integer");
					}
					ec.initial = int(v);
					ec.from_level = true;
				}
				else
				{
					throw ConfigError("evolve.initial must be a basis index or \"level:n\"");
				}
			}
			cfg.evolve = ec;
		}
		if(j.contains("output"))
		{
			const json& o = j.at("output");
			cfg.csv_path = o.value("csv", std::string{});
			cfg.json_path = o.value("json", std::string{});
		}
		cfg.seed = j.value("seed", cfg.seed);
	}
	catch(const json::exception& e)
	{
		throw ConfigError(std::string("malformed config: ") + e.what());
	}
	return cfg;
}

void validate(const RunConfig& cfg)
{
	if(!cfg.custom)
	{
		if(cfg.basis_dim < 2)
		{
			throw ConfigError("basis_dim must be >= 2, got " + std::to_string(cfg.basis_dim));
		}
		try
		{
			cfg.model.validate();
		}
		catch(const std::invalid_argument& e)
		{
			throw ConfigError(std::string("model: ") + e.what());
		}
	}
	if(!(cfg.tol > 0.0))
	{
		throw ConfigError("tol must be > 0");
	}
	if(cfg.interval && !(cfg.interval->lo < cfg.interval->hi))
	{
		throw ConfigError("interval must satisfy lo < hi");
	}
	if(cfg.command == Command::sweep)
	{
		if(!cfg.sweep)
		{
			throw ConfigError("sweep command needs a sweep block");
		}
		if(cfg.sweep->steps < 1)
		{
			throw ConfigError("sweep.steps must be >= 1");
		}
		if(cfg.sweep->steps > 1 && cfg.sweep->from == cfg.sweep->to)
		{
			throw ConfigError("sweep.from and sweep.to must differ when steps > 1");
		}
		const bool coupling = cfg.sweep->param == SweepParameter::coupling;
		if(coupling != bool(cfg.custom))
		{
			throw ConfigError("sweep.param coupling applies to custom models only, and only it does");
		}
	}
	if(cfg.command == Command::evolve && !cfg.evolve)
	{
		throw ConfigError("evolve command needs an evolve block");
	}
	if(cfg.evolve)
	{
		if(cfg.evolve->steps < 1)
		{
			throw ConfigError("evolve.steps must be >= 1");
		}
		if(!(cfg.evolve->t_max >= 0.0) || !std::isfinite(cfg.evolve->t_max))
		{
			throw ConfigError("evolve.t_max must be finite and >= 0");
		}
		if(cfg.evolve->initial < 0)
		{
			throw ConfigError("evolve.initial must be >= 0");
		}
	}
}

// The Hamiltonian in the form handed to each module.
struct System
{
	PartitionedHamiltonian ph;
	OperatorMatrix H; // full matrix for the oracle and evolution
	OperatorMatrix P; // parity (or block parity) of H's basis
};

PartitionedHamiltonian make_custom(const CustomModel& cm)
{
	try
	{
		return PartitionedHamiltonian(cm.F, cm.G, cm.A, cm.alpha, Provenance::custom, cm.lower);
	}
	catch(const std::invalid_argument& e)
	{
		throw ConfigError(std::string("model.custom: ") + e.what());
	}
}

System make_system(const RunConfig& cfg)
{
	if(cfg.custom)
	{
		PartitionedHamiltonian ph = make_custom(*cfg.custom);
		OperatorMatrix H = assemble_full(ph);
		OperatorMatrix P = block_parity(ph);
		return {std::move(ph), std::move(H), std::move(P)};
	}
	const BasisSpec basis(cfg.basis_dim);
	OperatorMatrix H = build_model(cfg.model, basis);
	OperatorMatrix P = build_parity(basis);
	PartitionedHamiltonian ph = parity_partition(H, P);
	return {std::move(ph), std::move(H), std::move(P)};
}

SolverOptions solver_options(const RunConfig& cfg)
{
	SolverOptions o;
	o.tol = cfg.tol;
	return o;
}

unsigned worker_count()
{
	return std::clamp(std::thread::hardware_concurrency(), 1u, 8u);
}

struct Level
{
	cx energy;
	QuasiParity q = QuasiParity::undefined;
	double self_norm = 0.0;
	double residual = 0.0;
	std::string method;
};

void describe_vector(const CVector& v, const OperatorMatrix& metric, Level& level)
{
	const CVector u = v / v.norm();
	level.self_norm = pseudo_inner(u, u, metric).real();
	level.q = assign_quasi_parity(u, metric);
}

double eigen_residual(const OperatorMatrix& H, const CVector& v, cx e)
{
	return (H.entries() * v - e * v).norm() / v.norm();
}

bool energy_less(const Level& a, const Level& b)
{
	if(a.energy.real() != b.energy.real())
	{
		return a.energy.real() < b.energy.real();
	}
	return a.energy.imag() < b.energy.imag();
}

std::vector<Level> feshbach_levels(const RunConfig& cfg, const System& sys)
{
	const OperatorMatrix metric = conserved_metric(sys.ph);
	const OperatorMatrix full = assemble_full(sys.ph);
	const SolverOptions opts = solver_options(cfg);
	const SelfConsistentSolver solver(sys.ph, opts);
	const Interval iv = cfg.interval ? *cfg.interval : default_interval(sys.ph);

	std::vector<SelfConsistentRoot> roots;
	std::vector<std::pair<cx, CVector>> pairs;
	try
	{
		const BreakingReport rep = detect_breaking(sys.ph, iv, opts);
		if(!rep.consistent())
		{
			throw Error("self-consistent roots do not account for the spectrum ("
				+ std::to_string(rep.unmatched.size()) + " unmatched eigenvalues)");
		}
		roots = rep.roots;
		for(const PairLink& link : rep.oracle.pairs)
		{
			const cx e = rep.oracle.eigenvalues[link.plus];
			if(std::find(rep.complex_pairs.begin(), rep.complex_pairs.end(), e) == rep.complex_pairs.end())
			{
				continue;
			}
			for(Eigen::Index idx : {link.plus, link.minus})
			{
				pairs.emplace_back(rep.oracle.eigenvalues[idx], rep.oracle.vectors.col(idx));
			}
		}
	}
	catch(const CoverageError&)
	{
		if(!cfg.interval)
		{
			throw;
		}
		// a user interval may cover part of the spectrum only
		roots = solver.solve(iv);
		const SpectralData oracle = direct_spectrum(full);
		for(Eigen::Index k = 0; k < oracle.size(); ++k)
		{
			const cx e = oracle.eigenvalues[k];
			if(!oracle.is_real(k) && e.real() >= iv.lo && e.real() <= iv.hi)
			{
				pairs.emplace_back(e, oracle.vectors.col(k));
			}
		}
	}

	std::vector<Level> out;
	for(const SelfConsistentRoot& r : roots)
	{
		Level level;
		level.energy = r.energy;
		level.residual = r.residual;
		level.method = "feshbach";
		describe_vector(solver.root_vector(r), metric, level);
		for(int copy = 0; copy < r.multiplicity; ++copy)
		{
			out.push_back(level);
		}
	}
	for(const auto& [e, v] : pairs)
	{
		Level level;
		level.energy = e;
		level.residual = eigen_residual(full, v, e);
		level.method = "oracle";
		describe_vector(v, metric, level);
		out.push_back(level);
	}
	std::stable_sort(out.begin(), out.end(), energy_less);
	return out;
}

OperatorMatrix system_metric(const System& sys)
{
	try
	{
		return choose_metric(sys.H, sys.P);
	}
	catch(const StructureError&)
	{
		return OperatorMatrix(CMatrix(CMatrix::Identity(sys.H.dim(), sys.H.dim())), SymmetryTag::hermitian);
	}
}

std::vector<Level> direct_levels(const System& sys)
{
	const OperatorMatrix metric = system_metric(sys);
	const SpectralData s = direct_spectrum(sys.H);
	std::vector<Level> out;
	for(Eigen::Index n = 0; n < s.size(); ++n)
	{
		Level level;
		level.energy = s.eigenvalues[n];
		level.method = "direct";
		const CVector v = s.vectors.col(n);
		level.residual = eigen_residual(sys.H, v, level.energy);
		describe_vector(v, metric, level);
		out.push_back(level);
	}
	return out;
}

double discrepancy(const std::vector<Level>& a, const std::vector<Level>& b)
{
	if(a.size() != b.size())
	{
		return std::numeric_limits<double>::infinity();
	}
	std::vector<bool> used(b.size(), false);
	double worst = 0.0;
	for(const Level& l : a)
	{
		std::size_t best = b.size();
		double gap = std::numeric_limits<double>::infinity();
		for(std::size_t k = 0; k < b.size(); ++k)
		{
			const double d = std::abs(l.energy - b[k].energy);
			if(!used[k] && d < gap)
			{
				gap = d;
				best = k;
			}
		}
		used[best] = true;
		worst = std::max(worst, gap / std::max(1.0, std::abs(l.energy)));
	}
	return worst;
}

int cmd_spectrum(const RunConfig& cfg, std::string& csv, std::ostream& out)
{
	const System sys = make_system(cfg);
	std::vector<Level> fesh;
	std::vector<Level> direct;
	if(cfg.method != Method::direct)
	{
		fesh = feshbach_levels(cfg, sys);
	}
	if(cfg.method != Method::feshbach)
	{
		direct = direct_levels(sys);
	}
	std::ostringstream os;
	os << "index,energy_re,energy_im,quasi_parity,self_pseudo_norm,residual,method\n";
	for(const auto* list : {&fesh, &direct})
	{
		for(std::size_t k = 0; k < list->size(); ++k)
		{
			const Level& l = (*list)[k];
			os << k << ',' << num(l.energy.real()) << ',' << num(l.energy.imag()) << ','
			   << to_string(l.q) << ',' << num(l.self_norm) << ',' << num(l.residual) << ','
			   << l.method << '\n';
		}
	}
	if(cfg.method == Method::both)
	{
		const double d = discrepancy(fesh, direct);
		os << "# max_discrepancy," << num(d) << '\n';
		out << "max |feshbach - direct| = " << num(d) << '\n';
	}
	csv = os.str();
	return exit_ok;
}

std::vector<double> linspace(double from, double to, int points)
{
	std::vector<double> g;
	for(int i = 0; i < points; ++i)
	{
		g.push_back(points == 1 ? from : from + (to - from) * double(i) / double(points - 1));
	}
	return g;
}

int cmd_sweep(const RunConfig& cfg, std::string& csv, std::ostream& out)
{
	const SweepConfig& sc = *cfg.sweep;
	const std::vector<double> grid = linspace(sc.from, sc.to, sc.steps);
	SweepResult result;
	if(cfg.custom)
	{
		const PartitionedHamiltonian base = make_custom(*cfg.custom);
		result = sweep([&base](double s) { return base.with_coupling_scaled(s); }, grid, cfg.interval,
			solver_options(cfg), worker_count());
	}
	else
	{
		result = sweep(cfg.model, sc.param, grid, BasisSpec(cfg.basis_dim), solver_options(cfg), worker_count());
	}
	std::ostringstream os;
	os << "param,level,energy_re,energy_im,self_pseudo_norm,broken_count\n";
	bool failed = false;
	for(const PhaseDiagramRow& row : result.rows)
	{
		if(!row.error.empty())
		{
			os << "# error," << num(row.parameter) << ',' << row.error << '\n';
			failed = true;
			continue;
		}
		for(std::size_t k = 0; k < row.energies.size(); ++k)
		{
			os << num(row.parameter) << ',' << k << ',' << num(row.energies[k].real()) << ','
			   << num(row.energies[k].imag()) << ',' << num(row.self_pseudo_norms[k]) << ','
			   << row.broken_count << '\n';
		}
		if(row.boundary_flag)
		{
			os << "# boundary," << num(row.parameter) << '\n';
		}
	}
	if(result.transition)
	{
		os << "# transition," << num(result.transition->first) << ',' << num(result.transition->second) << '\n';
		out << "breaking transition in [" << num(result.transition->first) << ", "
			<< num(result.transition->second) << "]\n";
	}
	else
	{
		os << "# transition,none\n";
		out << "no breaking transition on the grid\n";
	}
	csv = os.str();
	return failed ? exit_solver_failure : exit_ok;
}

CVector initial_state(const EvolveConfig& ec, const SpectralData& s)
{
	if(ec.initial >= s.dim())
	{
		throw ConfigError("evolve.initial " + std::to_string(ec.initial) + " out of range for dimension "
			+ std::to_string(s.dim()));
	}
	if(ec.from_level)
	{
		return s.vectors.col(ec.initial);
	}
	CVector v = CVector::Zero(s.dim());
	v(ec.initial) = 1.0;
	return v;
}

struct Prepared
{
	System sys;
	OperatorMatrix metric;
	SpectralData spectral;
};

Prepared prepare_evolution(const RunConfig& cfg)
{
	System sys = make_system(cfg);
	OperatorMatrix metric = choose_metric(sys.H, sys.P);
	SpectralData spectral = pseudo_normalize(direct_spectrum(sys.H), metric);
	return {std::move(sys), std::move(metric), std::move(spectral)};
}

int cmd_evolve(const RunConfig& cfg, std::string& csv, std::ostream& out)
{
	const EvolveConfig& ec = *cfg.evolve;
	const Prepared prep = prepare_evolution(cfg);
	const CVector psi0 = initial_state(ec, prep.spectral);
	const EvolutionTrace tr = trace_conservation(prep.spectral, prep.metric, psi0, linspace(0.0, ec.t_max, ec.steps));
	std::ostringstream os;
	const cx n0 = tr.pseudo_norms.front();
	os << "# pseudo_norm_t0," << num(n0.real()) << ',' << num(n0.imag()) << '\n';
	os << "t,pseudo_re,pseudo_im,euclid\n";
	double drift = 0.0;
	for(std::size_t i = 0; i < tr.times.size(); ++i)
	{
		os << num(tr.times[i]) << ',' << num(tr.pseudo_norms[i].real()) << ',' << num(tr.pseudo_norms[i].imag())
		   << ',' << num(tr.euclidean_norms[i]) << '\n';
		drift = std::max(drift, std::abs(tr.pseudo_norms[i] - n0));
	}
	if(tr.overflow_at)
	{
		os << "# overflow_from_t," << num(linspace(0.0, ec.t_max, ec.steps)[*tr.overflow_at]) << '\n';
	}
	out << "pseudo-norm drift " << num(drift) << " over " << tr.times.size() << " samples\n";
	csv = os.str();
	return exit_ok;
}

// Check suite

struct Invariant
{
	std::string name;
	double threshold;
	std::function<double()> measure;
};

double rel(double x, double scale)
{
	return x / std::max(1.0, scale);
}

std::vector<PartitionedHamiltonian> random_instances(std::uint64_t seed, int count, Eigen::Index max_block)
{
	std::mt19937_64 rng(seed);
	std::vector<PartitionedHamiltonian> out;
	for(int k = 0; k < count; ++k)
	{
		RandomInstanceSpec spec;
		spec.min_block = 1;
		spec.max_block = int(max_block);
		spec.alpha = k % 2 == 0 ? -1 : 1;
		out.push_back(random_partitioned(rng, spec));
	}
	return out;
}

std::vector<PartitionedHamiltonian> schur_instances(std::uint64_t seed, int count)
{
	std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
	std::vector<PartitionedHamiltonian> out;
	for(int k = 0; k < count; ++k)
	{
		RandomInstanceSpec spec;
		spec.min_block = 3;
		spec.max_block = 3;
		spec.alpha = k % 2 == 0 ? -1 : 1;
		out.push_back(random_partitioned(rng, spec));
	}
	return out;
}

double heff_asymmetry(const PartitionedHamiltonian& ph, std::mt19937_64& rng, int samples)
{
	const FeshbachReduction red(ph);
	const Interval iv = default_interval(ph);
	std::uniform_real_distribution<double> u(iv.lo, iv.hi);
	double worst = 0.0;
	int done = 0;
	for(int attempt = 0; done < samples && attempt < 50 * samples; ++attempt)
	{
		const double rho = u(rng);
		if(red.pole_distance(rho) <= 1e3 * FeshbachReduction::pole_guard(rho))
		{
			continue;
		}
		worst = std::max(worst, FeshbachReduction::hermiticity_defect(red.evaluate(rho).H_eff));
		++done;
	}
	return worst;
}

// Largest |root - oracle eigenvalue|; infinite when the counts disagree.
double oracle_gap(const PartitionedHamiltonian& ph, const SolverOptions& opts)
{
	const BreakingReport rep = detect_breaking(ph, default_interval(ph), opts);
	if(!rep.consistent())
	{
		return std::numeric_limits<double>::infinity();
	}
	std::vector<double> roots;
	for(const SelfConsistentRoot& r : rep.roots)
	{
		roots.insert(roots.end(), r.multiplicity, r.energy);
	}
	std::vector<double> real;
	for(Eigen::Index k = 0; k < rep.oracle.size(); ++k)
	{
		if(rep.oracle.is_real(k))
		{
			real.push_back(rep.oracle.eigenvalues[k].real());
		}
	}
	std::sort(real.begin(), real.end());
	if(real.size() != roots.size())
	{
		return std::numeric_limits<double>::infinity();
	}
	double worst = 0.0;
	for(std::size_t k = 0; k < real.size(); ++k)
	{
		worst = std::max(worst, rel(std::abs(roots[k] - real[k]), std::abs(real[k])));
	}
	return worst;
}

double sign_flip_gap(const PartitionedHamiltonian& ph, const SolverOptions& opts)
{
	const PartitionedHamiltonian flipped = ph.with_coupling_scaled(-1.0);
	const Interval iv = default_interval(ph);
	const auto a = solve_selfconsistent(ph, iv, opts);
	const auto b = solve_selfconsistent(flipped, iv, opts);
	if(a.size() != b.size())
	{
		return std::numeric_limits<double>::infinity();
	}
	double worst = 0.0;
	for(std::size_t k = 0; k < a.size(); ++k)
	{
		worst = std::max(worst, rel(std::abs(a[k].energy - b[k].energy), std::abs(a[k].energy)));
	}
	const FeshbachReduction ra(ph);
	const FeshbachReduction rb(flipped);
	for(const SelfConsistentRoot& r : a)
	{
		if(r.kind != RootKind::real_root || ra.pole_distance(r.energy) <= 1e3 * FeshbachReduction::pole_guard(r.energy))
		{
			continue;
		}
		CVector v = CVector::Zero(ph.n_even());
		v(0) = 1.0;
		const CVector wa = ra.reconstruct_eliminated(r.energy, v);
		const CVector wb = rb.reconstruct_eliminated(r.energy, v);
		worst = std::max(worst, rel((wa + wb).cwiseAbs().maxCoeff(), wa.cwiseAbs().maxCoeff()));
	}
	return worst;
}

int cmd_check(const RunConfig& cfg, nlohmann::ordered_json& report)
{
	const SolverOptions opts = solver_options(cfg);
	const EvolveConfig ec = cfg.evolve ? *cfg.evolve : EvolveConfig{};

	std::optional<System> sys;
	std::optional<Prepared> prep;
	auto system = [&]() -> const System& {
		if(!sys)
		{
			sys = make_system(cfg);
		}
		return *sys;
	};
	auto prepared = [&]() -> const Prepared& {
		if(!prep)
		{
			prep = prepare_evolution(cfg);
		}
		return *prep;
	};

	const std::vector<Invariant> suite{
		{"heff_hermiticity", 1e-12,
			[&] {
				std::mt19937_64 rng(cfg.seed);
				double worst = heff_asymmetry(system().ph, rng, 50);
				for(const auto& ph : random_instances(cfg.seed, 100, 6))
				{
					worst = std::max(worst, heff_asymmetry(ph, rng, 50));
				}
				return worst;
			}},
		{"sign_flip_invariance", 1e-12, [&] { return sign_flip_gap(system().ph, opts); }},
		{"schur_identity", 1e-9,
			[&] {
				double worst = 0.0;
				for(const auto& ph : schur_instances(cfg.seed, 100))
				{
					worst = std::max(worst, oracle_gap(ph, opts));
				}
				return worst;
			}},
		{"oracle_equivalence", 1e-8, [&] { return oracle_gap(system().ph, opts); }},
		{"orthogonality", 1e-10,
			[&] { return gram_report(prepared().spectral, prepared().metric).max_offdiag_violation; }},
		{"gram_structure", 1e-10,
			[&] { return gram_report(prepared().spectral, prepared().metric).max_structure_deviation; }},
		{"completeness", 1e-8, [&] { return reconstruct_identity(prepared().spectral, prepared().metric); }},
		{"hamiltonian_reconstruction", 1e-8,
			[&] { return reconstruct_hamiltonian(prepared().spectral, prepared().metric, prepared().sys.H); }},
		{"pseudo_norm_conservation", 1e-8,
			[&] {
				const Prepared& p = prepared();
				const CVector psi0 = initial_state(ec, p.spectral);
				const EvolutionTrace tr =
					trace_conservation(p.spectral, p.metric, psi0, linspace(0.0, ec.t_max, std::max(ec.steps, 2)));
				if(tr.overflow_at)
				{
					return std::numeric_limits<double>::infinity();
				}
				double worst = 0.0;
				for(const cx& n : tr.pseudo_norms)
				{
					worst = std::max(worst, std::abs(n - tr.pseudo_norms.front()) / (1.0 + std::abs(tr.pseudo_norms.front())));
				}
				return worst;
			}},
		{"expm_equivalence", 1e-7,
			[&] {
				const Prepared& p = prepared();
				const CVector psi0 = initial_state(ec, p.spectral);
				double worst = 0.0;
				for(double t : {0.5, 1.0, 2.5, 5.0})
				{
					const CVector direct = direct_propagator(p.sys.H, t) * psi0;
					const CVector spectral = evolve_state(p.spectral, p.metric, psi0, t);
					worst = std::max(worst, rel((direct - spectral).cwiseAbs().maxCoeff(), direct.cwiseAbs().maxCoeff()));
				}
				return worst;
			}},
	};

	bool all = true;
	for(const Invariant& inv : suite)
	{
		nlohmann::ordered_json entry;
		try
		{
			const double r = inv.measure();
			entry["pass"] = std::isfinite(r) && r <= inv.threshold;
			entry["residual"] = std::isfinite(r) ? nlohmann::ordered_json(r) : nlohmann::ordered_json(nullptr);
		}
		catch(const ConfigError&)
		{
			throw;
		}
		catch(const std::exception& e)
		{
			entry["pass"] = false;
			entry["residual"] = nullptr;
			entry["error"] = e.what();
		}
		entry["threshold"] = inv.threshold;
		all = all && entry["pass"].get<bool>();
		report[inv.name] = entry;
	}
	return all ? exit_ok : exit_check_failed;
}

void write_file(const std::string& path, const std::string& content)
{
	std::ofstream f(path, std::ios::binary);
	if(!f)
	{
		throw ConfigError("cannot open output file '" + path + "'");
	}
	f << content;
	if(!f)
	{
		throw ConfigError("failed writing '" + path + "'");
	}
}

}	// namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
	CLI::App app{"Feshbach reduction and pseudo-metric toolkit for PT-symmetric Hamiltonians", "ptfesh"};
	std::string command;
	std::string config_path;
	int dim = 0;
	double g = 0.0;
	std::string f;
	std::string method;
	std::string out_path;
	std::uint64_t seed = 0;
	app.add_option("command", command, "spectrum | sweep | evolve | check")
		->required()
		->check(CLI::IsMember({"spectrum", "sweep", "evolve", "check"}));
	app.add_option("--config", config_path, "JSON run configuration")->required();
	app.add_option("--dim", dim, "oscillator basis dimension");
	app.add_option("--g", g, "anharmonic coupling");
	app.add_option("--f", f, "cubic coupling as RE+IMi");
	app.add_option("--method", method, "feshbach | direct | both");
	app.add_option("--out", out_path, "output path (CSV, or JSON for check)");
	app.add_option("--seed", seed, "seed for randomized checks");

	std::vector<std::string> reversed(args.rbegin(), args.rend());
	try
	{
		app.parse(reversed);
	}
	catch(const CLI::CallForHelp&)
	{
		out << app.help();
		return exit_ok;
	}
	catch(const CLI::ParseError& e)
	{
		err << "ptfesh: " << e.what() << '\n';
		return exit_config_error;
	}

	RunConfig cfg;
	try
	{
		std::ifstream in(config_path);
		if(!in)
		{
			throw ConfigError("cannot read config '" + config_path + "'");
		}
		json j;
		try
		{
			j = json::parse(in);
		}
		catch(const json::parse_error& e)
		{
			throw ConfigError(std::string("config is not valid JSON: ") + e.what());
		}
		cfg = parse_config(j);
		cfg.command = command_from(command);
		if(app.count("--dim"))
		{
			cfg.basis_dim = dim;
		}
		if((app.count("--g") || app.count("--f")) && cfg.custom)
		{
			throw ConfigError("--g and --f do not apply to custom models");
		}
		if(app.count("--g"))
		{
			cfg.model.g = g;
		}
		if(app.count("--f"))
		{
			cfg.model.cubic = parse_complex(f);
		}
		if(app.count("--method"))
		{
			cfg.method = method_from(method);
		}
		if(app.count("--seed"))
		{
			cfg.seed = seed;
		}
		if(app.count("--out"))
		{
			(cfg.command == Command::check ? cfg.json_path : cfg.csv_path) = out_path;
		}
		validate(cfg);
	}
	catch(const ConfigError& e)
	{
		err << "ptfesh: config error: " << e.what() << '\n';
		return exit_config_error;
	}

	try
	{
		if(cfg.command == Command::check)
		{
			nlohmann::ordered_json report = nlohmann::ordered_json::object();
			const int code = cmd_check(cfg, report);
			const std::string text = report.dump(2) + "\n";
			out << text;
			if(!cfg.json_path.empty())
			{
				write_file(cfg.json_path, text);
			}
			return code;
		}
		std::string csv;
		std::ostringstream summary;
		int code = exit_ok;
		switch(cfg.command)
		{
		case Command::spectrum: code = cmd_spectrum(cfg, csv, summary); break;
		case Command::sweep: code = cmd_sweep(cfg, csv, summary); break;
		case Command::evolve: code = cmd_evolve(cfg, csv, summary); break;
		case Command::check: break;
		}
		if(cfg.csv_path.empty())
		{
			out << csv;
		}
		else
		{
			write_file(cfg.csv_path, csv);
			out << summary.str() << "wrote " << cfg.csv_path << '\n';
		}
		return code;
	}
	catch(const ConfigError& e)
	{
		err << "ptfesh: config error: " << e.what() << '\n';
		return exit_config_error;
	}
	catch(const std::exception& e)
	{
		err << "ptfesh: solver failure: " << e.what() << '\n';
		return exit_solver_failure;
	}
}

int run(int argc, char** argv)
{
	std::vector<std::string> args;
	for(int i = 1; i < argc; ++i)
	{
		args.emplace_back(argv[i]);
	}
	return run(args, std::cout, std::cerr);
}

} // namespace ptfesh::cli
