// anif: animatable neural implicit fields
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "anif/graph.hpp"

namespace anif {

// Single-file binary checkpoint: magic, version, then named blocks of
// little-endian f64 data. Block order is preserved, reads are bit-exact.
//
//   "ANIFCKPT" | u32 version | u32 block count
//   per block: u32 name length | name | u32 rank | u64 dims[rank] | f64 data
class Checkpoint {
 public:
  void add(const std::string& name, const Mat& value);
  void add_scalar(const std::string& name, double value);

  bool has(const std::string& name) const;
  const Mat& tensor(const std::string& name) const;
  double scalar(const std::string& name) const;
  const std::vector<std::string>& names() const { return order_; }

  void write(const std::string& path) const;
  static Checkpoint read(const std::string& path);

  static constexpr uint32_t kVersion = 1;

 private:
  struct Block {
    uint32_t rank = 2;
    Mat value;
  };
  std::vector<std::string> order_;
  std::map<std::string, Block> blocks_;
};

}  // namespace anif
