// SPDX-License-Identifier: Apache-2.0

#include "satnet/tasks_data.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace satnet::tasks {

std::mt19937_64 sample_rng(uint64_t seed, uint64_t index) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(index), static_cast<uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

uint8_t xor_fold(std::span<const uint8_t> bits) {
  uint8_t acc = 0;
  for (uint8_t b : bits) acc ^= (b & 1u);
  return acc;
}

std::vector<ParitySample> gen_parity(int length, int count, uint64_t seed) {
  if (length < 2) throw std::invalid_argument("parity length must be >= 2");
  if (count < 0) throw std::invalid_argument("negative sample count");
  std::vector<ParitySample> out(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    auto rng = sample_rng(seed, static_cast<uint64_t>(s));
    auto& sample = out[s];
    sample.bits.resize(length);
    for (auto& b : sample.bits) b = static_cast<uint8_t>(rng() & 1u);
    sample.parity = xor_fold(sample.bits);
  }
  return out;
}

// Sudoku ---------------------------------------------------------------

int SudokuBoard::filled() const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(),
                                        [](int v) { return v != 0; }));
}

int box_size(int B) {
  if (B == 4) return 2;
  if (B == 9) return 3;
  throw std::invalid_argument("board size must be 4 or 9");
}

namespace {

// Candidate bookkeeping with one bit per digit (bit d-1 for digit d).
class Grid {
 public:
  explicit Grid(const SudokuBoard& board)
      : board_(board), B_(board.size), box_(box_size(board.size)),
        rows_(B_, 0), cols_(B_, 0), boxes_(B_, 0) {
    consistent_ = true;
    for (int r = 0; r < B_; ++r)
      for (int c = 0; c < B_; ++c)
        if (const int d = board_.at(r, c); d != 0) {
          if (d < 1 || d > B_ || (used(r, c) >> (d - 1)) & 1u) consistent_ = false;
          place(r, c, d);
        }
  }

  bool consistent() const { return consistent_; }
  int size() const { return B_; }
  SudokuBoard& board() { return board_; }

  unsigned used(int r, int c) const {
    return rows_[r] | cols_[c] | boxes_[box_index(r, c)];
  }
  unsigned candidates(int r, int c) const {
    return ~used(r, c) & ((1u << B_) - 1u);
  }
  void place(int r, int c, int d) {
    const unsigned bit = 1u << (d - 1);
    board_.at(r, c) = d;
    rows_[r] |= bit;
    cols_[c] |= bit;
    boxes_[box_index(r, c)] |= bit;
  }
  void clear(int r, int c) {
    const unsigned bit = 1u << (board_.at(r, c) - 1);
    board_.at(r, c) = 0;
    rows_[r] &= ~bit;
    cols_[c] &= ~bit;
    boxes_[box_index(r, c)] &= ~bit;
  }

  // Empty cell with the fewest candidates; false when the board is full.
  bool most_constrained(int& row, int& col) const {
    int best = B_ + 1;
    for (int r = 0; r < B_; ++r)
      for (int c = 0; c < B_; ++c) {
        if (board_.at(r, c) != 0) continue;
        const int n = std::popcount(candidates(r, c));
        if (n < best) {
          best = n;
          row = r;
          col = c;
        }
      }
    return best <= B_;
  }

 private:
  int box_index(int r, int c) const { return (r / box_) * box_ + c / box_; }

  SudokuBoard board_;
  int B_;
  int box_;
  std::vector<unsigned> rows_, cols_, boxes_;
  bool consistent_ = true;
};

void count_rec(Grid& g, int limit, int& count) {
  int r = 0, c = 0;
  if (!g.most_constrained(r, c)) {
    ++count;
    return;
  }
  unsigned cand = g.candidates(r, c);
  while (cand && count < limit) {
    const int d = std::countr_zero(cand) + 1;
    cand &= cand - 1;
    g.place(r, c, d);
    count_rec(g, limit, count);
    g.clear(r, c);
  }
}

bool fill_rec(Grid& g, std::mt19937_64& rng) {
  int r = 0, c = 0;
  if (!g.most_constrained(r, c)) return true;
  std::vector<int> digits;
  for (unsigned cand = g.candidates(r, c); cand; cand &= cand - 1)
    digits.push_back(std::countr_zero(cand) + 1);
  std::shuffle(digits.begin(), digits.end(), rng);
  for (int d : digits) {
    g.place(r, c, d);
    if (fill_rec(g, rng)) return true;
    g.clear(r, c);
  }
  return false;
}

}  // namespace

bool is_consistent(const SudokuBoard& board) {
  box_size(board.size);
  if (board.cells.size() != static_cast<std::size_t>(board.size) * board.size)
    return false;
  return Grid(board).consistent();
}

bool is_valid_solution(const SudokuBoard& board) {
  return is_consistent(board) && board.filled() == board.size * board.size;
}

int count_solutions(const SudokuBoard& board, int limit) {
  Grid g(board);
  if (!g.consistent()) return 0;
  int count = 0;
  count_rec(g, limit, count);
  return count;
}

SudokuBoard random_full_board(int B, std::mt19937_64& rng) {
  Grid g{SudokuBoard(B)};
  if (!fill_rec(g, rng)) throw std::logic_error("sudoku fill failed");
  return g.board();
}

Bits encode_board(const SudokuBoard& board) {
  const int B = board.size;
  Bits bits(static_cast<std::size_t>(B) * B * B, 0);
  for (int r = 0; r < B; ++r)
    for (int c = 0; c < B; ++c)
      if (const int d = board.at(r, c); d != 0)
        bits[static_cast<std::size_t>((r * B + c) * B + (d - 1))] = 1;
  return bits;
}

namespace {

int size_from_bits(std::size_t n) {
  if (n == 64) return 4;
  if (n == 729) return 9;
  throw std::invalid_argument("bit vector length " + std::to_string(n) +
                              " is not a 4x4 or 9x9 board");
}

template <typename T>
SudokuBoard decode_impl(std::span<const T> bits) {
  const int B = size_from_bits(bits.size());
  SudokuBoard board(B);
  for (int cell = 0; cell < B * B; ++cell) {
    int best = -1;
    double best_value = 0.0;
    for (int d = 0; d < B; ++d) {
      const double v = static_cast<double>(bits[static_cast<std::size_t>(cell * B + d)]);
      if (v > best_value) {
        best_value = v;
        best = d;
      }
    }
    board.cells[cell] = best + 1;
  }
  return board;
}

}  // namespace

SudokuBoard decode_bits(std::span<const double> bits) { return decode_impl(bits); }
SudokuBoard decode_bits(std::span<const uint8_t> bits) { return decode_impl(bits); }

SudokuSample make_sudoku_sample(const SudokuBoard& puzzle, const SudokuBoard& solution) {
  if (puzzle.size != solution.size) throw std::invalid_argument("board size mismatch");
  const int B = puzzle.size;
  SudokuSample s;
  s.size = B;
  s.puzzle = encode_board(puzzle);
  s.solution = encode_board(solution);
  s.mask.assign(s.puzzle.size(), 0);
  for (int cell = 0; cell < B * B; ++cell)
    if (puzzle.cells[cell] != 0)
      for (int d = 0; d < B; ++d) s.mask[static_cast<std::size_t>(cell * B + d)] = 1;
  return s;
}

GivensRange default_givens(int B) {
  return box_size(B) == 2 ? GivensRange{6, 10} : GivensRange{30, 42};
}

std::vector<SudokuSample> gen_sudoku(int B, int count, uint64_t seed) {
  const GivensRange givens = default_givens(B);
  if (count < 0) throw std::invalid_argument("negative sample count");
  std::vector<SudokuSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    auto rng = sample_rng(seed, static_cast<uint64_t>(s));
    const SudokuBoard solution = random_full_board(B, rng);
    const int target =
        std::uniform_int_distribution<int>(givens.lo, givens.hi)(rng);
    std::vector<int> order(static_cast<std::size_t>(B) * B);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    SudokuBoard puzzle = solution;
    int filled = B * B;
    for (int cell : order) {
      if (filled <= target) break;
      const int digit = puzzle.cells[cell];
      puzzle.cells[cell] = 0;
      if (count_solutions(puzzle, 2) == 1)
        --filled;
      else
        puzzle.cells[cell] = digit;
    }
    out.push_back(make_sudoku_sample(puzzle, solution));
  }
  return out;
}

// Permutations -----------------------------------------------------------

void Permutation::validate() const {
  std::vector<char> seen(map.size(), 0);
  for (int v : map) {
    if (v < 0 || static_cast<std::size_t>(v) >= map.size() || seen[v])
      throw std::invalid_argument("permutation is not a bijection");
    seen[v] = 1;
  }
}

Permutation Permutation::inverse() const {
  validate();
  Permutation inv;
  inv.map.resize(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) inv.map[map[i]] = static_cast<int>(i);
  return inv;
}

Permutation Permutation::identity(int size) {
  Permutation p;
  p.map.resize(static_cast<std::size_t>(size));
  std::iota(p.map.begin(), p.map.end(), 0);
  return p;
}

Permutation Permutation::random(int size, uint64_t seed) {
  Permutation p = identity(size);
  std::mt19937_64 rng(seed);
  std::shuffle(p.map.begin(), p.map.end(), rng);
  return p;
}

Bits permute_bits(std::span<const uint8_t> bits, const Permutation& perm) {
  if (bits.size() != perm.map.size())
    throw std::invalid_argument("permutation size does not match bit vector");
  Bits out(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) out[perm.map[i]] = bits[i];
  return out;
}

std::vector<SudokuSample> permute_dataset(const std::vector<SudokuSample>& data,
                                          const Permutation& perm) {
  perm.validate();
  std::vector<SudokuSample> out;
  out.reserve(data.size());
  for (const auto& s : data)
    out.push_back({s.size, permute_bits(s.puzzle, perm), permute_bits(s.mask, perm),
                   permute_bits(s.solution, perm)});
  return out;
}

// Files ----------------------------------------------------------------

std::string bits_to_string(std::span<const uint8_t> bits) {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) s[i] = '1';
  return s;
}

Bits bits_from_string(const std::string& text) {
  Bits bits(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '0' && text[i] != '1')
      throw std::invalid_argument("bit string holds '" + std::string(1, text[i]) + "'");
    bits[i] = text[i] == '1';
  }
  return bits;
}

namespace {

constexpr const char* kHeaderTag = "#satnet-dataset";

struct Visitor {
  std::ostream& out;

  void operator()(const ParityDataset& d) const {
    out << kHeaderTag << " v1 task=parity L=" << d.length << " seed=" << d.seed
        << " count=" << d.samples.size() << '\n';
    for (const auto& s : d.samples)
      out << bits_to_string(s.bits) << ' ' << int{s.parity} << '\n';
  }
  void operator()(const SudokuDataset& d) const {
    out << kHeaderTag << " v1 task=sudoku B=" << d.size << " seed=" << d.seed
        << " count=" << d.samples.size();
    if (d.perm_seed) out << " perm_seed=" << *d.perm_seed;
    out << '\n';
    for (const auto& s : d.samples)
      out << bits_to_string(s.puzzle) << ' ' << bits_to_string(s.mask) << ' '
          << bits_to_string(s.solution) << '\n';
  }
};

[[noreturn]] void bad_line(int line, const std::string& what) {
  throw std::runtime_error("dataset line " + std::to_string(line) + ": " + what);
}

uint64_t parse_u64(const std::map<std::string, std::string>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) bad_line(1, "header missing " + key);
  try {
    std::size_t used = 0;
    const uint64_t v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    bad_line(1, "header field " + key + " is not an integer");
  }
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
  std::visit(Visitor{out}, data);
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset: empty file");
  std::istringstream header(line);
  std::string tag, version;
  header >> tag >> version;
  if (tag != kHeaderTag) bad_line(1, "missing dataset header");
  if (version != "v1") bad_line(1, "unsupported dataset version " + version);
  std::map<std::string, std::string> kv;
  for (std::string field; header >> field;) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) bad_line(1, "bad header field " + field);
    kv[field.substr(0, eq)] = field.substr(eq + 1);
  }
  const std::string task = kv.count("task") ? kv["task"] : "";
  const uint64_t count = parse_u64(kv, "count");
  int line_no = 1;

  if (task == "parity") {
    ParityDataset d;
    d.length = static_cast<int>(parse_u64(kv, "L"));
    d.seed = parse_u64(kv, "seed");
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream rec(line);
      std::string bits, label, extra;
      if (!(rec >> bits >> label) || (rec >> extra)) bad_line(line_no, "expected <bits> <parity>");
      ParitySample s;
      try {
        s.bits = bits_from_string(bits);
      } catch (const std::invalid_argument& e) {
        bad_line(line_no, e.what());
      }
      if (static_cast<int>(s.bits.size()) != d.length) bad_line(line_no, "wrong length");
      if (label != "0" && label != "1") bad_line(line_no, "parity must be 0 or 1");
      s.parity = label == "1";
      if (s.parity != xor_fold(s.bits)) bad_line(line_no, "parity label does not match bits");
      d.samples.push_back(std::move(s));
    }
    if (d.samples.size() != count) bad_line(line_no, "record count differs from header");
    return d;
  }
  if (task == "sudoku") {
    SudokuDataset d;
    d.size = static_cast<int>(parse_u64(kv, "B"));
    box_size(d.size);
    d.seed = parse_u64(kv, "seed");
    if (kv.count("perm_seed")) d.perm_seed = parse_u64(kv, "perm_seed");
    const std::size_t bits_len = static_cast<std::size_t>(d.size) * d.size * d.size;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream rec(line);
      std::string puzzle, mask, solution, extra;
      if (!(rec >> puzzle >> mask >> solution) || (rec >> extra))
        bad_line(line_no, "expected <puzzle> <mask> <solution>");
      SudokuSample s;
      s.size = d.size;
      try {
        s.puzzle = bits_from_string(puzzle);
        s.mask = bits_from_string(mask);
        s.solution = bits_from_string(solution);
      } catch (const std::invalid_argument& e) {
        bad_line(line_no, e.what());
      }
      if (s.puzzle.size() != bits_len || s.mask.size() != bits_len ||
          s.solution.size() != bits_len)
        bad_line(line_no, "wrong bit length");
      d.samples.push_back(std::move(s));
    }
    if (d.samples.size() != count) bad_line(line_no, "record count differs from header");
    return d;
  }
  bad_line(1, "unknown task '" + task + "'");
}

Dataset read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_dataset(in);
}

void write_permutation(std::ostream& out, const Permutation& perm) {
  for (std::size_t i = 0; i < perm.map.size(); ++i) out << i << ' ' << perm.map[i] << '\n';
}

Permutation read_permutation(std::istream& in) {
  std::vector<std::pair<long, long>> pairs;
  long from = 0, to = 0;
  while (in >> from >> to) pairs.emplace_back(from, to);
  if (!in.eof()) throw std::runtime_error("permutation file: malformed entry");
  Permutation p;
  p.map.assign(pairs.size(), -1);
  for (const auto& [f, t] : pairs) {
    if (f < 0 || static_cast<std::size_t>(f) >= pairs.size() || p.map[f] != -1)
      throw std::runtime_error("permutation file: bad source index " + std::to_string(f));
    p.map[f] = static_cast<int>(t);
  }
  p.validate();
  return p;
}

}  // namespace satnet::tasks
