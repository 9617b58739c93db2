#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "panoweave/tensor.hpp"

// NTF: a minimal exact tensor file. Layout, all little-endian:
//   "NTF1" | u32 rank | rank x u32 dims | row-major f32 payload
// A bundle concatenates named tensors behind a manifest:
//   "NTB1" | u32 count | count x { u32 name_len | name bytes | NTF record }

namespace panoweave {

/// Rank-general f32 tensor as stored on disk.
struct NtfTensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;

  static NtfTensor from_tensor(const Tensor& t);   // rank 3
  static NtfTensor from_doubles(const double* p, std::size_t n);  // rank 1
  Tensor to_tensor() const;  // rank 3 required
};

NtfTensor ntf_read(const std::string& path);
void ntf_write(const NtfTensor& t, const std::string& path);

/// Ordered name -> tensor bundle (checkpoints, mask dumps).
struct NtfBundle {
  std::vector<std::pair<std::string, NtfTensor>> items;

  const NtfTensor* find(const std::string& name) const;
};

NtfBundle ntf_bundle_read(const std::string& path);
void ntf_bundle_write(const NtfBundle& b, const std::string& path);

/// Writes bytes to a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
void atomic_write_file(const std::string& path, const std::string& bytes);

}  // namespace panoweave
