#pragma once

#include <vector>

#include "printmatch/image.hpp"

namespace printmatch {

/// Normalized 1-D Gaussian taps, radius ceil(4 sigma).
std::vector<float> gaussian_kernel(double sigma);

/// Separable Gaussian blur with edge clamping. sigma <= 0 returns a copy.
FloatImage gaussian_blur(const FloatImage& img, double sigma);

/// Every second pixel in both directions.
FloatImage downsample2(const FloatImage& img);

/// Central-difference gradients, one-sided at the borders.
void gradients(const FloatImage& img, FloatImage& dx, FloatImage& dy);

}  // namespace printmatch
