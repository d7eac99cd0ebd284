// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#include "anif/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace anif {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'A', 'N', 'I', 'F', 'C', 'K', 'P', 'T'};

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("checkpoint: truncated file");
  return v;
}
}  // namespace

void Checkpoint::add(const std::string& name, const Mat& value) {
  if (blocks_.count(name)) throw InvalidArgumentError("checkpoint: duplicate block " + name);
  order_.push_back(name);
  blocks_[name] = Block{2, value};
}

void Checkpoint::add_scalar(const std::string& name, double value) {
  if (blocks_.count(name)) throw InvalidArgumentError("checkpoint: duplicate block " + name);
  order_.push_back(name);
  Mat m(1, 1);
  m(0, 0) = value;
  blocks_[name] = Block{0, std::move(m)};
}

bool Checkpoint::has(const std::string& name) const { return blocks_.count(name) != 0; }

const Mat& Checkpoint::tensor(const std::string& name) const {
  auto it = blocks_.find(name);
  if (it == blocks_.end()) throw InvalidArgumentError("checkpoint: missing block " + name);
  return it->second.value;
}

double Checkpoint::scalar(const std::string& name) const { return tensor(name)(0, 0); }

void Checkpoint::write(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod<uint32_t>(out, kVersion);
  write_pod<uint32_t>(out, static_cast<uint32_t>(order_.size()));
  for (const std::string& name : order_) {
    const Block& b = blocks_.at(name);
    write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint32_t>(out, b.rank);
    if (b.rank >= 1) write_pod<uint64_t>(out, static_cast<uint64_t>(b.value.rows()));
    if (b.rank >= 2) write_pod<uint64_t>(out, static_cast<uint64_t>(b.value.cols()));
    // row-major stream so the file layout is independent of Eigen's storage
    for (Eigen::Index i = 0; i < b.value.rows(); ++i)
      for (Eigen::Index j = 0; j < b.value.cols(); ++j) write_pod<double>(out, b.value(i, j));
  }
  if (!out) throw IoError("failed while writing " + path);
}

Checkpoint Checkpoint::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a checkpoint file: " + path);
  const auto version = read_pod<uint32_t>(in);
  if (version != kVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto count = read_pod<uint32_t>(in);
  Checkpoint ckpt;
  for (uint32_t b = 0; b < count; ++b) {
    const auto name_len = read_pod<uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw IoError("checkpoint: truncated file");
    const auto rank = read_pod<uint32_t>(in);
    if (rank > 2) throw IoError("checkpoint: unsupported rank in " + name);
    uint64_t rows = 1, cols = 1;
    if (rank >= 1) rows = read_pod<uint64_t>(in);
    if (rank >= 2) cols = read_pod<uint64_t>(in);
    Mat value(rows, cols);
    for (uint64_t i = 0; i < rows; ++i)
      for (uint64_t j = 0; j < cols; ++j) value(i, j) = read_pod<double>(in);
    ckpt.order_.push_back(name);
    ckpt.blocks_[name] = Block{rank, std::move(value)};
  }
  return ckpt;
}

}  // namespace anif
