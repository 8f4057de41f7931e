// SPDX-License-Identifier: Apache-2.0
//
// Datasets for the parity and Sudoku tasks, their bit encodings, and the
// line-oriented dataset file format.
//
// Dataset files start with one header line
//   #satnet-dataset v1 task=<parity|sudoku> <key>=<value> ...
// followed by one record per line:
//   parity:  <bits> <parity>
//   sudoku:  <puzzle bits> <mask bits> <solution bits>
// where every field is a compact 0/1 string.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace satnet::tasks {

using Bits = std::vector<uint8_t>;

/// Per-sample generator stream derived from (seed, index).
std::mt19937_64 sample_rng(uint64_t seed, uint64_t index);

// Parity ---------------------------------------------------------------

struct ParitySample {
  Bits bits;
  uint8_t parity = 0;
};

uint8_t xor_fold(std::span<const uint8_t> bits);

std::vector<ParitySample> gen_parity(int length, int count, uint64_t seed);

struct ParityDataset {
  int length = 0;
  uint64_t seed = 0;
  std::vector<ParitySample> samples;
};

// Sudoku ---------------------------------------------------------------

/// Row-major B x B board; 0 marks an empty cell, otherwise 1..B.
struct SudokuBoard {
  int size = 0;
  std::vector<int> cells;

  SudokuBoard() = default;
  explicit SudokuBoard(int B) : size(B), cells(static_cast<std::size_t>(B) * B, 0) {}

  int& at(int r, int c) { return cells[static_cast<std::size_t>(r) * size + c]; }
  int at(int r, int c) const { return cells[static_cast<std::size_t>(r) * size + c]; }
  int filled() const;
  bool operator==(const SudokuBoard&) const = default;
};

/// Side of the square sub-grids; throws unless B is 4 or 9.
int box_size(int B);

/// True if no row, column, or box repeats a digit among filled cells.
bool is_consistent(const SudokuBoard& board);

/// Full board satisfying every all-different constraint.
bool is_valid_solution(const SudokuBoard& board);

/// Number of completions of `board`, counting stops at `limit`.
int count_solutions(const SudokuBoard& board, int limit = 2);

SudokuBoard random_full_board(int B, std::mt19937_64& rng);

/// Cell (r, c) = d sets bit (r B + c) B + (d - 1); empty cells stay zero.
Bits encode_board(const SudokuBoard& board);

/// Per-cell argmax over the B bits of each cell. A cell whose bits are all
/// <= 0 decodes as empty. Throws std::invalid_argument unless the length is
/// 64 or 729.
SudokuBoard decode_bits(std::span<const double> bits);
SudokuBoard decode_bits(std::span<const uint8_t> bits);

struct SudokuSample {
  int size = 0;
  Bits puzzle;
  /// 1 for every bit belonging to a filled cell.
  Bits mask;
  Bits solution;
};

SudokuSample make_sudoku_sample(const SudokuBoard& puzzle, const SudokuBoard& solution);

struct GivensRange {
  int lo = 0;
  int hi = 0;
};

/// Default givens range: [6, 10] for 4x4, [30, 42] for 9x9.
GivensRange default_givens(int B);

/// Random full boards dug down to a uniformly drawn givens count while the
/// puzzle keeps a unique solution.
std::vector<SudokuSample> gen_sudoku(int B, int count, uint64_t seed);

/// Bijection on bit indices, stored as map[i] = image of i.
struct Permutation {
  std::vector<int> map;

  /// Throws std::invalid_argument unless map is a bijection on [0, size).
  void validate() const;
  Permutation inverse() const;
  static Permutation identity(int size);
  static Permutation random(int size, uint64_t seed);
};

/// Moves bit i of puzzle, mask, and solution to position perm.map[i].
std::vector<SudokuSample> permute_dataset(const std::vector<SudokuSample>& data,
                                          const Permutation& perm);

Bits permute_bits(std::span<const uint8_t> bits, const Permutation& perm);

struct SudokuDataset {
  int size = 0;
  uint64_t seed = 0;
  /// Seed of Permutation::random applied to every sample, if any.
  std::optional<uint64_t> perm_seed;
  std::vector<SudokuSample> samples;
};

// Files ----------------------------------------------------------------

using Dataset = std::variant<ParityDataset, SudokuDataset>;

void write_dataset(std::ostream& out, const Dataset& data);
/// Throws std::runtime_error naming the line on any malformed record.
Dataset read_dataset(std::istream& in);
Dataset read_dataset_file(const std::string& path);

/// One "<from> <to>" pair per line.
void write_permutation(std::ostream& out, const Permutation& perm);
Permutation read_permutation(std::istream& in);

std::string bits_to_string(std::span<const uint8_t> bits);
Bits bits_from_string(const std::string& text);

}  // namespace satnet::tasks
