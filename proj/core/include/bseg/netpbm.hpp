#pragma once

#include <filesystem>
#include <utility>

#include "bseg/tensor.hpp"

namespace bseg {

// Binary netpbm I/O restricted to maxval 255. Images are P6 (RGB), masks and
// grayscale rasters are P5.

// image: [3,H,W] with values in [0,1]; quantized as round(v*255).
void write_ppm(const std::filesystem::path& path, const Tensor& image);

// gray: [H,W] with byte values in [0,255] (callers pre-scale).
void write_pgm(const std::filesystem::path& path, const Tensor& gray_bytes);

// Returns [3,H,W] scaled to [0,1].
Tensor read_ppm(const std::filesystem::path& path);

// Returns [H,W] raw byte values 0..255.
Tensor read_pgm(const std::filesystem::path& path);

// Image scaled to [0,1]; mask binarized at threshold 128 (>=128 -> 1).
// Dims of the pair must agree.
std::pair<Tensor, Tensor> load_pair(const std::filesystem::path& image_path,
                                    const std::filesystem::path& mask_path);

}  // namespace bseg
