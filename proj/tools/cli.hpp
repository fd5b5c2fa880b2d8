#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ptfesh/types.hpp"

namespace ptfesh::cli
{

// Exit codes.
inline constexpr int exit_ok = 0;
inline constexpr int exit_check_failed = 1;
inline constexpr int exit_solver_failure = 2;
inline constexpr int exit_config_error = 3;

// "1.5", "0.2i", "-0.1+0.3i", "1e-3-2e-2i"; throws std::runtime_error.
cx parse_complex(const std::string& text);

int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ptfesh::cli
