#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tatc/mlp.hpp"
#include "tatc/optimizer.hpp"

namespace tatc::nn {

/// Versioned binary container of named tensors plus string metadata.
///
/// Layout (little-endian):
///   "TATCCKPT"            8-byte magic
///   u32 version           currently 1
///   u32 n_meta, then n_meta x (u32 len, key bytes, u32 len, value bytes)
///   u32 n_tensors, then n_tensors x
///       (u32 len, name bytes, i64 rows, i64 cols, rows*cols f64 column-major)
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  struct Entry {
    std::string name;
    Eigen::MatrixXd value;
  };

  std::map<std::string, std::string> meta;
  std::vector<Entry> tensors;

  void add(std::string name, Eigen::MatrixXd value);
  const Eigen::MatrixXd& get(std::string_view name) const;
  bool has(std::string_view name) const;
  const std::string& meta_value(const std::string& key) const;

  void add_mlp(const std::string& prefix, const Mlp& net);
  Mlp get_mlp(const std::string& prefix) const;
  void add_optimizer(const std::string& prefix, const Optimizer& opt);
  void restore_optimizer(const std::string& prefix, Optimizer& opt) const;
};

std::string serialize(const Checkpoint& ckpt);
Checkpoint deserialize(std::string_view bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_architecture(const Architecture& arch);
Architecture decode_architecture(std::string_view text);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace tatc::nn
