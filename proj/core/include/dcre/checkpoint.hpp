#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dcre/model.hpp"

namespace dcre {

struct NamedTensor {
  std::string name;
  Matrix value;
};

/// Versioned binary container:
///   "DCRECKPT" | u32 version | u32 count |
///   count × ( u32 name_len | name | u64 rows | u64 cols | rows·cols f64 )
/// All integers and doubles little-endian. Identical tensors give identical bytes.
std::string serialize_tensors(const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> deserialize_tensors(const std::string& bytes, const std::string& source);

void save_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_tensors(const std::filesystem::path& path);

std::vector<NamedTensor> model_tensors(const ModelParams& params);
ModelParams model_from_tensors(const std::vector<NamedTensor>& tensors);

void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace dcre
