// SPDX-License-Identifier: Apache-2.0

#include "satnet/weights_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace satnet {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'T', 'N', 'E', 'T', 'W', 'F'};

class Writer {
 public:
  void bytes(const void* data, std::size_t size) {
    buffer_.append(static_cast<const char*>(data), size);
  }
  void u32(uint32_t v) {
    for (int b = 0; b < 4; ++b) buffer_.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
  }
  void u64(uint64_t v) {
    for (int b = 0; b < 8; ++b) buffer_.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
  const std::string& str() const { return buffer_; }

 private:
  std::string buffer_;
};

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  void bytes(void* out, std::size_t size) {
    need(size);
    std::memcpy(out, data_.data() + pos_, size);
    pos_ += size;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * b);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int b = 0; b < 8; ++b)
      v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_++])) << (8 * b);
    return v;
  }
  double f64() {
    const double v = std::bit_cast<double>(u64());
    if (!std::isfinite(v)) throw WeightFileError("weight file: non-finite value");
    return v;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  std::string_view prefix(std::size_t n) const { return {data_.data(), n}; }

 private:
  void need(std::size_t n) const {
    if (remaining() < n) throw WeightFileError("weight file: truncated");
  }
  std::string data_;
  std::size_t pos_ = 0;
};

}  // namespace

uint64_t fnv1a64(std::string_view bytes, uint64_t hash) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

void save_state(const LayerState& state, const LayerConfig& cfg, std::ostream& out) {
  cfg.validate();
  const Matrix& S = state.weights.S;
  if (S.rows() != cfg.m || S.cols() != cfg.n() + 1 || state.v_top.size() != cfg.k ||
      state.v_rand.rows() != cfg.k || state.v_rand.cols() != cfg.n())
    throw std::invalid_argument("layer state does not match its config");

  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kWeightFormatVersion);
  w.u64(static_cast<uint64_t>(cfg.n_real));
  w.u64(static_cast<uint64_t>(cfg.n_aux));
  w.u64(static_cast<uint64_t>(cfg.m));
  w.u64(static_cast<uint64_t>(cfg.k));
  w.f64(cfg.tol);
  w.u64(static_cast<uint64_t>(cfg.max_sweeps));
  w.f64(cfg.delta);
  w.u64(cfg.seed);
  for (Eigen::Index r = 0; r < S.rows(); ++r)
    for (Eigen::Index c = 0; c < S.cols(); ++c) w.f64(S(r, c));
  for (Eigen::Index d = 0; d < state.v_top.size(); ++d) w.f64(state.v_top(d));
  for (Eigen::Index i = 0; i < state.v_rand.cols(); ++i)
    for (Eigen::Index d = 0; d < state.v_rand.rows(); ++d) w.f64(state.v_rand(d, i));
  const uint64_t checksum = fnv1a64(w.str());
  w.u64(checksum);
  out.write(w.str().data(), static_cast<std::streamsize>(w.str().size()));
  if (!out) throw WeightFileError("weight file: write failed");
}

void save_state(const LayerState& state, const LayerConfig& cfg,
                const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WeightFileError("cannot open " + path + " for writing");
  save_state(state, cfg, out);
}

std::pair<LayerState, LayerConfig> load_state(std::istream& in) {
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}));
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw WeightFileError("weight file: bad magic");
  const uint32_t version = r.u32();
  if (version != kWeightFormatVersion)
    throw WeightFileError("weight file: unsupported version " + std::to_string(version));

  constexpr uint64_t kMaxDim = 1u << 24;
  auto dim = [&](const char* name) {
    const uint64_t v = r.u64();
    if (v > kMaxDim) throw WeightFileError(std::string("weight file: absurd ") + name);
    return static_cast<int>(v);
  };
  LayerConfig cfg;
  cfg.n_real = dim("n_real");
  cfg.n_aux = dim("n_aux");
  cfg.m = dim("m");
  cfg.k = dim("k");
  cfg.tol = r.f64();
  cfg.max_sweeps = dim("max_sweeps");
  cfg.delta = r.f64();
  cfg.seed = r.u64();
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw WeightFileError(std::string("weight file: ") + e.what());
  }

  const uint64_t payload = (static_cast<uint64_t>(cfg.m) * (cfg.n() + 1) +
                            cfg.k + static_cast<uint64_t>(cfg.n()) * cfg.k + 1) * 8;
  if (r.remaining() != payload)
    throw WeightFileError("weight file: size does not match header dimensions");

  LayerState state;
  state.weights.S.resize(cfg.m, cfg.n() + 1);
  for (Eigen::Index row = 0; row < cfg.m; ++row)
    for (Eigen::Index c = 0; c <= cfg.n(); ++c) state.weights.S(row, c) = r.f64();
  state.v_top.resize(cfg.k);
  for (Eigen::Index d = 0; d < cfg.k; ++d) state.v_top(d) = r.f64();
  state.v_rand.resize(cfg.k, cfg.n());
  for (Eigen::Index i = 0; i < cfg.n(); ++i)
    for (Eigen::Index d = 0; d < cfg.k; ++d) state.v_rand(d, i) = r.f64();
  const std::size_t body = r.pos();
  const uint64_t stored = r.u64();
  if (stored != fnv1a64(r.prefix(body)))
    throw WeightFileError("weight file: checksum mismatch");
  return {std::move(state), cfg};
}

std::pair<LayerState, LayerConfig> load_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFileError("cannot open " + path);
  return load_state(in);
}

}  // namespace satnet
