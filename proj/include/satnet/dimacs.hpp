// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>

#include "satnet/sdp_solver.hpp"

namespace satnet {

/// Parses DIMACS CNF ("p cnf <vars> <clauses>", clauses terminated by 0,
/// 'c' comment lines). Throws std::runtime_error with the offending line on
/// malformed input, a clause count that disagrees with the header, an empty
/// clause, or a clause holding both x and -x.
CnfInstance read_dimacs(std::istream& in);
CnfInstance read_dimacs_file(const std::string& path);

void write_dimacs(std::ostream& out, const CnfInstance& cnf);

}  // namespace satnet
