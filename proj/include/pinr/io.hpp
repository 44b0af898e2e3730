#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pinr/image.hpp"
#include "pinr/partition.hpp"

namespace pinr {

/// Reads an 8-bit grayscale or RGB PNG (palettes expanded, alpha composited)
/// into [0,1] values (v / 255). `gray` averages RGB channels.
/// Throws IoError for other bit depths or unreadable files.
ImageField load_png(const std::string& path, bool gray = false);

/// Writes values rounded to 8 bits (gray or RGB, matching the image).
void save_png(const std::string& path, const ImageField& image);

/// Mask as PNG: labels in the red channel (k <= 256) plus `<path>.txt` sidecar.
void save_mask_png(const std::string& path, const PartitionMask& mask);
PartitionMask load_mask_png(const std::string& path);

/// All *.png files in `dir`, sorted by name.
std::vector<std::string> list_pngs(const std::string& dir);

/// RFC-4180 field quoting for CSV output.
std::string csv_field(const std::string& s);

}  // namespace pinr
