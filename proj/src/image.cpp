#include "fgml/image.hpp"

#include <cmath>

#include "fgml/error.hpp"
#include "fgml/pmath.hpp"

namespace fgml {

namespace {

constexpr double kDegToRad = 0.017453292519943295;

void check_image(const Tensor& img, const char* what) {
    if (img.rank() != 3 || img.extent(0) != 3)
        raise(ErrorKind::Dimension,
              std::string(what) + " expects a 3 x H x W image, got " + img.shape_str());
}

double lerp(double a, double b, double t) { return a + t * (b - a); }

// Bilinear sample with zero fill outside the image.
double sample_zero_fill(const double* plane, size_t h, size_t w, double sy, double sx) {
    const double fy = std::floor(sy);
    const double fx = std::floor(sx);
    const long y0 = static_cast<long>(fy);
    const long x0 = static_cast<long>(fx);
    const double ty = sy - fy;
    const double tx = sx - fx;
    auto pixel = [&](long y, long x) -> double {
        if (y < 0 || y >= static_cast<long>(h) || x < 0 || x >= static_cast<long>(w))
            return 0.0;
        return plane[y * w + x];
    };
    const double top = lerp(pixel(y0, x0), pixel(y0, x0 + 1), tx);
    const double bottom = lerp(pixel(y0 + 1, x0), pixel(y0 + 1, x0 + 1), tx);
    return lerp(top, bottom, ty);
}

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace

void AugmentConfig::validate() const {
    if (!(flip_prob >= 0.0 && flip_prob <= 1.0))
        raise(ErrorKind::Parameter, "flip probability must lie in [0, 1]");
    if (rotation_degrees < 0.0)
        raise(ErrorKind::Parameter, "rotation range must be non-negative");
    if (!(jitter_factor >= 0.0 && jitter_factor < 1.0))
        raise(ErrorKind::Parameter, "jitter factor must lie in [0, 1)");
    if (!(translate_fraction >= 0.0 && translate_fraction < 1.0))
        raise(ErrorKind::Parameter, "translate fraction must lie in [0, 1)");
    if (target_size == 0) raise(ErrorKind::Parameter, "target size must be positive");
    for (double s : std_dev)
        if (!(s > 0.0)) raise(ErrorKind::Parameter, "channel std must be positive");
}

Tensor resize_bilinear(const Tensor& img, size_t out_h, size_t out_w) {
    check_image(img, "resize_bilinear");
    if (out_h == 0 || out_w == 0)
        raise(ErrorKind::Parameter, "resize target must be positive");
    const size_t h = img.extent(1), w = img.extent(2);
    if (h == out_h && w == out_w) return img;

    const double scale_y = static_cast<double>(h) / static_cast<double>(out_h);
    const double scale_x = static_cast<double>(w) / static_cast<double>(out_w);
    Tensor out({3, out_h, out_w});
    for (size_t c = 0; c < 3; ++c) {
        const double* src = img.data() + c * h * w;
        double* dst = out.data() + c * out_h * out_w;
        for (size_t y = 0; y < out_h; ++y) {
            double sy = (static_cast<double>(y) + 0.5) * scale_y - 0.5;
            if (sy < 0.0) sy = 0.0;
            size_t y0 = static_cast<size_t>(sy);
            if (y0 > h - 1) y0 = h - 1;
            const size_t y1 = y0 + 1 < h ? y0 + 1 : h - 1;
            const double ty = sy - static_cast<double>(y0);
            for (size_t x = 0; x < out_w; ++x) {
                double sx = (static_cast<double>(x) + 0.5) * scale_x - 0.5;
                if (sx < 0.0) sx = 0.0;
                size_t x0 = static_cast<size_t>(sx);
                if (x0 > w - 1) x0 = w - 1;
                const size_t x1 = x0 + 1 < w ? x0 + 1 : w - 1;
                const double tx = sx - static_cast<double>(x0);
                const double top = lerp(src[y0 * w + x0], src[y0 * w + x1], tx);
                const double bottom = lerp(src[y1 * w + x0], src[y1 * w + x1], tx);
                dst[y * out_w + x] = lerp(top, bottom, ty);
            }
        }
    }
    return out;
}

Tensor hflip(const Tensor& img) {
    check_image(img, "hflip");
    const size_t h = img.extent(1), w = img.extent(2);
    Tensor out(img.shape());
    for (size_t c = 0; c < 3; ++c) {
        const double* src = img.data() + c * h * w;
        double* dst = out.data() + c * h * w;
        for (size_t y = 0; y < h; ++y)
            for (size_t x = 0; x < w; ++x) dst[y * w + x] = src[y * w + (w - 1 - x)];
    }
    return out;
}

Tensor rotate_bilinear(const Tensor& img, double degrees) {
    check_image(img, "rotate_bilinear");
    const size_t h = img.extent(1), w = img.extent(2);
    const double angle = degrees * kDegToRad;
    const double cos_a = pmath::cos(angle);
    const double sin_a = pmath::sin(angle);
    const double cy = (static_cast<double>(h) - 1.0) / 2.0;
    const double cx = (static_cast<double>(w) - 1.0) / 2.0;
    Tensor out(img.shape());
    for (size_t c = 0; c < 3; ++c) {
        const double* src = img.data() + c * h * w;
        double* dst = out.data() + c * h * w;
        for (size_t y = 0; y < h; ++y) {
            const double ry = static_cast<double>(y) - cy;
            for (size_t x = 0; x < w; ++x) {
                const double rx = static_cast<double>(x) - cx;
                const double sx = cos_a * rx + sin_a * ry + cx;
                const double sy = -sin_a * rx + cos_a * ry + cy;
                dst[y * w + x] = sample_zero_fill(src, h, w, sy, sx);
            }
        }
    }
    return out;
}

Tensor translate_bilinear(const Tensor& img, double dx, double dy) {
    check_image(img, "translate_bilinear");
    const size_t h = img.extent(1), w = img.extent(2);
    Tensor out(img.shape());
    for (size_t c = 0; c < 3; ++c) {
        const double* src = img.data() + c * h * w;
        double* dst = out.data() + c * h * w;
        for (size_t y = 0; y < h; ++y)
            for (size_t x = 0; x < w; ++x)
                dst[y * w + x] = sample_zero_fill(src, h, w,
                                                  static_cast<double>(y) - dy,
                                                  static_cast<double>(x) - dx);
    }
    return out;
}

Tensor adjust_brightness(const Tensor& img, double factor) {
    check_image(img, "adjust_brightness");
    if (factor < 0.0) raise(ErrorKind::Parameter, "brightness factor must be >= 0");
    Tensor out(img.shape());
    for (size_t i = 0; i < img.size(); ++i) out[i] = clamp01(factor * img[i]);
    return out;
}

Tensor adjust_contrast(const Tensor& img, double factor) {
    check_image(img, "adjust_contrast");
    if (factor < 0.0) raise(ErrorKind::Parameter, "contrast factor must be >= 0");
    const size_t plane = img.extent(1) * img.extent(2);
    double mean_luma = 0.0;
    for (size_t i = 0; i < plane; ++i)
        mean_luma += luma(img[i], img[plane + i], img[2 * plane + i]);
    mean_luma /= static_cast<double>(plane);
    Tensor out(img.shape());
    const double blend = 1.0 - factor;
    for (size_t i = 0; i < img.size(); ++i)
        out[i] = clamp01(factor * img[i] + blend * mean_luma);
    return out;
}

Tensor adjust_saturation(const Tensor& img, double factor) {
    check_image(img, "adjust_saturation");
    if (factor < 0.0) raise(ErrorKind::Parameter, "saturation factor must be >= 0");
    const size_t plane = img.extent(1) * img.extent(2);
    Tensor out(img.shape());
    const double blend = 1.0 - factor;
    for (size_t i = 0; i < plane; ++i) {
        const double l = luma(img[i], img[plane + i], img[2 * plane + i]);
        out[i] = clamp01(factor * img[i] + blend * l);
        out[plane + i] = clamp01(factor * img[plane + i] + blend * l);
        out[2 * plane + i] = clamp01(factor * img[2 * plane + i] + blend * l);
    }
    return out;
}

Tensor normalize_channels(const Tensor& img, const std::array<double, 3>& mean,
                          const std::array<double, 3>& std_dev) {
    check_image(img, "normalize_channels");
    const size_t plane = img.extent(1) * img.extent(2);
    Tensor out(img.shape());
    for (size_t c = 0; c < 3; ++c)
        for (size_t i = 0; i < plane; ++i)
            out[c * plane + i] = (img[c * plane + i] - mean[c]) / std_dev[c];
    return out;
}

Tensor denormalize_channels(const Tensor& img, const std::array<double, 3>& mean,
                            const std::array<double, 3>& std_dev) {
    check_image(img, "denormalize_channels");
    const size_t plane = img.extent(1) * img.extent(2);
    Tensor out(img.shape());
    for (size_t c = 0; c < 3; ++c)
        for (size_t i = 0; i < plane; ++i)
            out[c * plane + i] = img[c * plane + i] * std_dev[c] + mean[c];
    return out;
}

Tensor augment(const Tensor& img, const AugmentConfig& config, RngStream stream) {
    config.validate();
    check_image(img, "augment");

    Tensor out = resize_bilinear(img, config.target_size, config.target_size);

    // Fixed draw order: flip, angle, brightness, contrast, saturation, tx, ty.
    // Ranges are mapped by hand so zero-width settings stay exact identities.
    auto draw = [&stream](double lo, double hi) {
        return lo + stream.uniform01() * (hi - lo);
    };
    const bool flip = stream.uniform01() < config.flip_prob;
    const double angle = draw(-config.rotation_degrees, config.rotation_degrees);
    const double fb = draw(1.0 - config.jitter_factor, 1.0 + config.jitter_factor);
    const double fc = draw(1.0 - config.jitter_factor, 1.0 + config.jitter_factor);
    const double fs = draw(1.0 - config.jitter_factor, 1.0 + config.jitter_factor);
    const double max_shift =
        config.translate_fraction * static_cast<double>(config.target_size);
    const double tx = draw(-max_shift, max_shift);
    const double ty = draw(-max_shift, max_shift);

    if (flip) out = hflip(out);
    out = rotate_bilinear(out, angle);
    out = adjust_brightness(out, fb);
    out = adjust_contrast(out, fc);
    out = adjust_saturation(out, fs);
    out = translate_bilinear(out, tx, ty);
    return normalize_channels(out, config.mean, config.std_dev);
}

Tensor eval_transform(const Tensor& img, const AugmentConfig& config) {
    config.validate();
    check_image(img, "eval_transform");
    Tensor out = resize_bilinear(img, config.target_size, config.target_size);
    return normalize_channels(out, config.mean, config.std_dev);
}

}  // namespace fgml
