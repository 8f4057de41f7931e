// SPDX-License-Identifier: Apache-2.0

#include "satnet/dimacs.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace satnet {

namespace {

[[noreturn]] void fail(int line, const std::string& what) {
  throw std::runtime_error("dimacs line " + std::to_string(line) + ": " + what);
}

}  // namespace

CnfInstance read_dimacs(std::istream& in) {
  CnfInstance cnf;
  long declared_clauses = -1;
  std::vector<int8_t> clause;
  bool clause_open = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::string first;
    if (!(tokens >> first)) continue;
    if (first == "c" || first[0] == 'c' || first == "%") continue;
    if (first == "p") {
      std::string format;
      long vars = -1;
      if (!(tokens >> format >> vars >> declared_clauses) || format != "cnf" ||
          vars < 0 || declared_clauses < 0)
        fail(line_no, "bad problem line");
      if (declared_clauses > 0 && cnf.num_vars == 0 && !cnf.clauses.empty())
        fail(line_no, "problem line after clauses");
      cnf.num_vars = static_cast<int>(vars);
      continue;
    }
    if (declared_clauses < 0) fail(line_no, "clause before problem line");
    tokens.clear();
    tokens.str(line);
    long lit = 0;
    while (tokens >> lit) {
      if (!clause_open) {
        clause.assign(cnf.num_vars, 0);
        clause_open = true;
      }
      if (lit == 0) {
        bool any = false;
        for (int8_t s : clause) any = any || s != 0;
        if (!any) fail(line_no, "empty clause");
        cnf.clauses.push_back(clause);
        clause_open = false;
        continue;
      }
      const long var = std::labs(lit);
      if (var > cnf.num_vars) fail(line_no, "variable out of range");
      const int8_t sign = lit > 0 ? 1 : -1;
      int8_t& slot = clause[var - 1];
      if (slot == -sign) fail(line_no, "tautological clause");
      slot = sign;
    }
    if (!tokens.eof()) fail(line_no, "non-integer token");
  }
  if (clause_open) fail(line_no, "last clause not terminated by 0");
  if (declared_clauses < 0) throw std::runtime_error("dimacs: missing problem line");
  if (static_cast<long>(cnf.clauses.size()) != declared_clauses)
    throw std::runtime_error("dimacs: header declares " +
                             std::to_string(declared_clauses) +
                             " clauses, found " +
                             std::to_string(cnf.clauses.size()));
  return cnf;
}

CnfInstance read_dimacs_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_dimacs(in);
}

void write_dimacs(std::ostream& out, const CnfInstance& cnf) {
  out << "p cnf " << cnf.num_vars << ' ' << cnf.clauses.size() << '\n';
  for (const auto& clause : cnf.clauses) {
    for (int i = 0; i < cnf.num_vars; ++i)
      if (clause[i] != 0) out << (clause[i] > 0 ? i + 1 : -(i + 1)) << ' ';
    out << "0\n";
  }
}

}  // namespace satnet
