#pragma once

#include <string>

#include "panoweave/tensor.hpp"

namespace panoweave {

/// 8-bit RGB. Values are taken in [0, 1], scaled by 255, rounded, clamped.
/// Requires a 3-channel tensor.
void png_write_rgb(const Tensor& t, const std::string& path);
Tensor png_read_rgb(const std::string& path);  // returns values in [0, 1]

/// 16-bit grayscale in millimeters. Values are taken in meters, scaled by
/// 1000, rounded, and saturated to [0, 65535]. Requires a 1-channel tensor.
void png_write_gray16_mm(const Tensor& t, const std::string& path);
Tensor png_read_gray16_mm(const std::string& path);  // returns meters

}  // namespace panoweave
