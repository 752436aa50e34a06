#pragma once

#include <string>
#include <vector>

#include "gsmpc/splat/types.hpp"

namespace gsmpc::io {

/// 8-bit RGB PNG; values clamped to [0,1] and quantized by round(v * 255).
void save_png(const splat::Image& image, const std::string& path);

/// Loads an 8-bit RGB PNG (palette/gray/alpha inputs are expanded); pixel
/// values are linearized to [0,1] by /255. Depth is left unset.
splat::Image load_png(const std::string& path);

/// Raw little-endian f32, row-major, meters. Shape is not stored; the reader
/// takes the expected dimensions.
void save_depth(const std::vector<double>& depth, int width, int height,
                const std::string& path);
std::vector<double> load_depth(const std::string& path, int width, int height);

} // namespace gsmpc::io
