#pragma once

#include <cstddef>
#include <span>

#include "wkm/image.hpp"
#include "wkm/orientation.hpp"
#include "wkm/phantom.hpp"

namespace wkm {

/// Line integral of the rotated density along z, sampled on the volume's own
/// grid with trilinear interpolation, then box-resampled to out_size x out_size.
Image project(const Volume& volume, const Orientation& orientation, std::size_t out_size);

/// Area-averaging resample over [-1, 1]^2. Preserves sum(pixel) * pixel_area.
Image resample_area(const Image& image, std::size_t out_size);

/// Noise level giving the requested stack-global SNR, computed from the clean stack.
double compute_sigma(std::span<const Image> clean_stack, double target_snr);

}  // namespace wkm
