#pragma once

#include <stdexcept>
#include <string>

namespace ptfesh
{

class Error : public std::runtime_error
{
public:
	using std::runtime_error::runtime_error;
};

// Matrix is neither Hermitian nor PT-symmetric, or spectral data lacks the
// structure an operation needs.
class StructureError : public Error
{
public:
	StructureError(const std::string& what, double violation)
		: Error(what), violation_(violation) {}
	[[nodiscard]] double violation() const { return violation_; }

private:
	double violation_;
};

// Energy parameter too close to an eigenvalue of the eliminated block.
class PoleProximityError : public Error
{
public:
	PoleProximityError(const std::string& what, double pole)
		: Error(what), pole_(pole) {}
	[[nodiscard]] double pole() const { return pole_; }

private:
	double pole_;
};

class PhaseUndefinedError : public Error
{
public:
	using Error::Error;
};

// Vanishing self pseudo-norm of a level (exceptional point).
class DegeneracyError : public Error
{
public:
	DegeneracyError(const std::string& what, long level)
		: Error(what), level_(level) {}
	[[nodiscard]] long level() const { return level_; }

private:
	long level_;
};

class DegenerateIntervalError : public Error
{
public:
	using Error::Error;
};

// Root-search interval excludes part of the spectrum.
class CoverageError : public Error
{
public:
	CoverageError(const std::string& what, double excluded)
		: Error(what), excluded_(excluded) {}
	[[nodiscard]] double excluded() const { return excluded_; }

private:
	double excluded_;
};

class OracleFailure : public Error
{
public:
	using Error::Error;
};

class ContractError : public Error
{
public:
	using Error::Error;
};

} // namespace ptfesh
