#pragma once

#include <filesystem>
#include <string>

#include "gnnx/tensor/params.hpp"

namespace gnnx {

// Tensor container: one text header line "gnnx-tensors 1", then a
// little-endian binary body
//   u64 count, then per entry: u64 name_len, name bytes, u64 rank,
//   u64 extents[rank], f64 values[numel].
// Round-trips bit-exactly.
inline constexpr const char* kCheckpointHeader = "gnnx-tensors 1";

std::string encode_parameters(const ParameterSet& params);
ParameterSet decode_parameters(const std::string& bytes);

void save_parameters(const ParameterSet& params, const std::filesystem::path& path);
ParameterSet load_parameters(const std::filesystem::path& path);

// Writes via a sibling temporary file and rename, so readers never observe a
// partially written file.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace gnnx
