#include "ptfesh/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "ptfesh/errors.hpp"

namespace ptfesh
{

const char* to_string(QuasiParity q)
{
	switch(q)
	{
	case QuasiParity::plus: return "+1";
	case QuasiParity::minus: return "-1";
	case QuasiParity::undefined: return "undefined";
	}
	return "undefined";
}

long SpectralData::pair_of(Eigen::Index n) const
{
	for(std::size_t k = 0; k < pairs.size(); ++k)
	{
		if(pairs[k].plus == n || pairs[k].minus == n)
		{
			return long(k);
		}
	}
	return -1;
}

SpectralData SpectralData::without_level(Eigen::Index n) const
{
	SpectralData out;
	out.antilinear = antilinear;
	out.pseudo_normalized = pseudo_normalized;
	out.experimental = experimental;
	out.vectors.resize(dim(), size() - 1);
	auto remap = [n](Eigen::Index k) { return k < n ? k : k - 1; };
	for(Eigen::Index k = 0, j = 0; k < size(); ++k)
	{
		if(k == n)
		{
			continue;
		}
		out.eigenvalues.push_back(eigenvalues[k]);
		if(!quasi_parities.empty())
		{
			out.quasi_parities.push_back(quasi_parities[k]);
		}
		out.vectors.col(j++) = vectors.col(k);
	}
	for(const PairLink& p : pairs)
	{
		if(p.plus != n && p.minus != n)
		{
			out.pairs.push_back({remap(p.plus), remap(p.minus), p.c});
		}
	}
	return out;
}

namespace
{

void link_pairs(SpectralData& s)
{
	std::vector<bool> used(s.size(), false);
	for(Eigen::Index i = 0; i < s.size(); ++i)
	{
		const cx e = s.eigenvalues[i];
		if(e.imag() <= 0.0 || used[i])
		{
			continue;
		}
		Eigen::Index best = -1;
		double best_d = 0.0;
		for(Eigen::Index j = 0; j < s.size(); ++j)
		{
			if(used[j] || s.eigenvalues[j].imag() >= 0.0)
			{
				continue;
			}
			const double d = std::abs(s.eigenvalues[j] - std::conj(e));
			if(best < 0 || d < best_d)
			{
				best = j;
				best_d = d;
			}
		}
		if(best >= 0 && best_d <= 1e-6 * (1.0 + std::abs(e)))
		{
			used[i] = used[best] = true;
			s.pairs.push_back({i, best, cx{0.0, 0.0}});
		}
	}
}

} // namespace

SpectralData direct_spectrum(const OperatorMatrix& H, const OracleOptions& options)
{
	const Eigen::Index n = H.dim();
	if(n > options.max_dim)
	{
		throw std::invalid_argument("matrix dimension " + std::to_string(n)
			+ " exceeds oracle limit " + std::to_string(options.max_dim));
	}
	std::vector<cx> values(n);
	CMatrix vectors(n, n);

	const double scale = std::max(1.0, max_abs(H.entries()));
	const bool hermitian = H.tag() == SymmetryTag::hermitian
		|| H.hermitian_violation() <= 1e-14 * scale;
	if(hermitian)
	{
		Eigen::SelfAdjointEigenSolver<CMatrix> es(H.entries());
		if(es.info() != Eigen::Success)
		{
			throw OracleFailure("Hermitian eigensolver did not converge");
		}
		for(Eigen::Index k = 0; k < n; ++k)
		{
			values[k] = es.eigenvalues()(k);
		}
		vectors = es.eigenvectors();
	}
	else if(H.is_real())
	{
		Eigen::EigenSolver<RMatrix> es(H.entries().real());
		if(es.info() != Eigen::Success)
		{
			throw OracleFailure("real nonsymmetric eigensolver did not converge");
		}
		for(Eigen::Index k = 0; k < n; ++k)
		{
			values[k] = es.eigenvalues()(k);
		}
		vectors = es.eigenvectors();
	}
	else
	{
		Eigen::ComplexEigenSolver<CMatrix> es(H.entries());
		if(es.info() != Eigen::Success)
		{
			throw OracleFailure("complex eigensolver did not converge");
		}
		for(Eigen::Index k = 0; k < n; ++k)
		{
			values[k] = es.eigenvalues()(k);
		}
		vectors = es.eigenvectors();
	}

	for(cx& e : values)
	{
		if(std::abs(e.imag()) <= options.snap_tolerance * (1.0 + std::abs(e.real())))
		{
			e = cx{e.real(), 0.0};
		}
	}

	std::vector<Eigen::Index> order(n);
	std::iota(order.begin(), order.end(), 0);
	std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
		if(values[a].real() != values[b].real())
		{
			return values[a].real() < values[b].real();
		}
		return values[a].imag() < values[b].imag();
	});

	SpectralData s;
	s.vectors.resize(n, n);
	for(Eigen::Index k = 0; k < n; ++k)
	{
		s.eigenvalues.push_back(values[order[k]]);
		const CVector v = vectors.col(order[k]);
		const double nv = v.norm();
		if(!(nv > 0.0) || !std::isfinite(nv))
		{
			throw OracleFailure("eigensolver returned a degenerate eigenvector");
		}
		s.vectors.col(k) = v / nv;
	}
	s.quasi_parities.assign(n, QuasiParity::undefined);
	link_pairs(s);
	return s;
}

CMatrix direct_propagator(const OperatorMatrix& H, double t)
{
	const CMatrix generator = cx{0.0, -t} * H.entries();
	return generator.exp();
}

std::vector<SpikedLevel> spiked_oscillator_levels(const SpikedSpec& spec)
{
	if(spec.n_max < 0)
	{
		throw std::invalid_argument("n_max must be >= 0");
	}
	std::vector<SpikedLevel> levels;
	const double shift = spec.G + 0.25;
	for(int n = 0; n <= spec.n_max; ++n)
	{
		for(int Q : {+1, -1})
		{
			cx e;
			if(shift >= 0.0)
			{
				const double gamma = std::sqrt(shift);
				e = cx{4.0 * n + 2.0 - 2.0 * Q * gamma, 0.0};
			}
			else
			{
				const double delta = std::sqrt(-shift);
				e = cx{4.0 * n + 2.0, -2.0 * Q * delta};
			}
			levels.push_back({n, Q, e});
		}
	}
	return levels;
}

} // namespace ptfesh
