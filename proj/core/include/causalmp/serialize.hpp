#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "causalmp/matrix.hpp"

namespace causalmp {

// Flat binary parameter file:
//   "CMP1" | u32 count | count x (u32 rows, u32 cols) | f64 values, tensor by tensor
// All integers and doubles little-endian.
void save_tensors(const std::filesystem::path& path, std::span<const DenseMatrix* const> tensors);
std::vector<DenseMatrix> load_tensors(const std::filesystem::path& path);

}  // namespace causalmp
