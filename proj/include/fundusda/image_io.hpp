#pragma once

#include <string>

#include "fundusda/image.hpp"

namespace fundusda {

// 8-bit PNG I/O. Images are read as RGB (gray expanded, alpha dropped) and
// scaled to [0, 1]. Masks are single-channel 0/255 files.
ImageGrid read_png(const std::string& path);
void write_png(const std::string& path, const ImageGrid& img);

BinaryMask read_mask_png(const std::string& path);
void write_mask_png(const std::string& path, const BinaryMask& mask);

// Single-channel real grid in [0,1] written as 8-bit gray (heatmaps).
void write_gray_png(const std::string& path, const ImageGrid& gray);

}  // namespace fundusda
