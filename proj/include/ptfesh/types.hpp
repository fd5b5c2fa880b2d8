#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

namespace ptfesh
{

using cx = std::complex<double>;
using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

enum class SymmetryTag
{
	hermitian,
	complex_symmetric,
	general
};

const char* to_string(SymmetryTag tag);

// Dense square operator in a fixed basis. The tag is advisory metadata but a
// hermitian tag is verified on construction.
class OperatorMatrix
{
public:
	static constexpr double hermitian_tolerance = 1e-14;

	OperatorMatrix() = default;
	explicit OperatorMatrix(CMatrix entries, SymmetryTag tag = SymmetryTag::general);
	explicit OperatorMatrix(const RMatrix& entries, SymmetryTag tag = SymmetryTag::general);

	[[nodiscard]] Eigen::Index dim() const { return entries_.rows(); }
	[[nodiscard]] const CMatrix& entries() const { return entries_; }
	[[nodiscard]] SymmetryTag tag() const { return tag_; }
	[[nodiscard]] cx operator()(Eigen::Index m, Eigen::Index n) const { return entries_(m, n); }

	// Largest |H(m,n) - conj(H(n,m))|.
	[[nodiscard]] double hermitian_violation() const;
	[[nodiscard]] bool is_real() const;

private:
	CMatrix entries_;
	SymmetryTag tag_ = SymmetryTag::general;
};

// Largest absolute entry; the norm used for relative tolerances throughout.
double max_abs(const CMatrix& m);

} // namespace ptfesh
