#pragma once

#include <array>

#include "fgml/rng.hpp"
#include "fgml/tensor.hpp"

namespace fgml {

// Images are 3 x H x W tensors with values in [0, 1] before normalization.

// Training-time augmentation settings. Defaults: flip 0.5, rotation +-15 deg,
// jitter factor 0.1, translation up to 10% of the image size, 299 x 299
// output, ImageNet channel statistics.
struct AugmentConfig {
    double flip_prob = 0.5;
    double rotation_degrees = 15.0;
    double jitter_factor = 0.1;
    double translate_fraction = 0.1;
    size_t target_size = 299;
    std::array<double, 3> mean = {0.485, 0.456, 0.406};
    std::array<double, 3> std_dev = {0.229, 0.224, 0.225};

    void validate() const;
};

// Separable bilinear resize, half-pixel centers, edge clamped. Constant
// images are preserved exactly and outputs stay inside the input range.
Tensor resize_bilinear(const Tensor& img, size_t out_h, size_t out_w);

Tensor hflip(const Tensor& img);

// Rotation about the image center, bilinear sampling, out-of-bounds filled
// with zero. Zero degrees is an exact identity.
Tensor rotate_bilinear(const Tensor& img, double degrees);

// Translation by (dx, dy) pixels, bilinear, zero fill. (0, 0) is exact.
Tensor translate_bilinear(const Tensor& img, double dx, double dy);

// Multiplicative jitter; each clamps to [0, 1] and a factor of 1.0 is an
// exact identity. Contrast blends toward the image mean luma, saturation
// toward per-pixel luma (0.299 R + 0.587 G + 0.114 B).
Tensor adjust_brightness(const Tensor& img, double factor);
Tensor adjust_contrast(const Tensor& img, double factor);
Tensor adjust_saturation(const Tensor& img, double factor);

Tensor normalize_channels(const Tensor& img, const std::array<double, 3>& mean,
                          const std::array<double, 3>& std_dev);
Tensor denormalize_channels(const Tensor& img, const std::array<double, 3>& mean,
                            const std::array<double, 3>& std_dev);

// Full stochastic pipeline, applied in a fixed order: resize, flip, rotate,
// color jitter (brightness, contrast, saturation), translate, normalize.
// Each call consumes a fixed number of draws from `stream`, so per-sample
// substreams give results independent of batch composition or worker count.
Tensor augment(const Tensor& img, const AugmentConfig& config, RngStream stream);

// Deterministic evaluation pipeline: resize + normalize only.
Tensor eval_transform(const Tensor& img, const AugmentConfig& config);

}  // namespace fgml
