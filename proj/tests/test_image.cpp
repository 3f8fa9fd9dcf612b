#include <doctest.h>

#include <cmath>

#include "fgml/image.hpp"
#include "fgml/rng.hpp"

using namespace fgml;

namespace {

Tensor random_image(size_t h, size_t w, RngStream& rng) {
    Tensor img({3, h, w});
    for (size_t i = 0; i < img.size(); ++i) img[i] = rng.uniform01();
    return img;
}

}  // namespace

TEST_CASE("bilinear resize preserves constant images exactly") {
    Tensor img({3, 7, 9});
    img.fill(0.37);
    const Tensor up = resize_bilinear(img, 299, 299);
    for (double v : up.values()) CHECK(v == 0.37);
    const Tensor down = resize_bilinear(img, 3, 4);
    for (double v : down.values()) CHECK(v == 0.37);
}

TEST_CASE("bilinear resize stays inside the input range") {
    RngStream rng(1, 1);
    const Tensor img = random_image(13, 17, rng);
    double lo = 1.0, hi = 0.0;
    for (double v : img.values()) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (const Tensor& out : {resize_bilinear(img, 64, 64), resize_bilinear(img, 5, 7)}) {
        for (double v : out.values()) {
            CHECK(v >= lo);
            CHECK(v <= hi);
        }
    }
}

TEST_CASE("double horizontal flip is the identity") {
    RngStream rng(2, 2);
    const Tensor img = random_image(8, 11, rng);
    const Tensor twice = hflip(hflip(img));
    for (size_t i = 0; i < img.size(); ++i) CHECK(twice[i] == img[i]);
}

TEST_CASE("zero rotation and zero translation are exact identities") {
    RngStream rng(3, 3);
    for (size_t h : {8, 9}) {
        const Tensor img = random_image(h, h + 1, rng);
        const Tensor rot = rotate_bilinear(img, 0.0);
        const Tensor tra = translate_bilinear(img, 0.0, 0.0);
        for (size_t i = 0; i < img.size(); ++i) {
            CHECK(rot[i] == img[i]);
            CHECK(tra[i] == img[i]);
        }
    }
}

TEST_CASE("rotation fills out-of-bounds with zero and keeps range") {
    RngStream rng(4, 4);
    const Tensor img = random_image(16, 16, rng);
    const Tensor rot = rotate_bilinear(img, 15.0);
    for (double v : rot.values()) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    // A 45-degree rotation of an all-ones image must expose zero fill corners.
    Tensor ones({3, 16, 16});
    ones.fill(1.0);
    const Tensor corners = rotate_bilinear(ones, 45.0);
    CHECK(corners[0] < 1.0);
}

TEST_CASE("unit jitter factors are exact identities") {
    RngStream rng(5, 5);
    const Tensor img = random_image(9, 9, rng);
    const Tensor b = adjust_brightness(img, 1.0);
    const Tensor c = adjust_contrast(img, 1.0);
    const Tensor s = adjust_saturation(img, 1.0);
    for (size_t i = 0; i < img.size(); ++i) {
        CHECK(b[i] == img[i]);
        CHECK(c[i] == img[i]);
        CHECK(s[i] == img[i]);
    }
}

TEST_CASE("jitter clamps to the unit interval") {
    Tensor img({3, 2, 2});
    img.fill(0.9);
    const Tensor bright = adjust_brightness(img, 1.5);
    for (double v : bright.values()) CHECK(v == 1.0);
    const Tensor dark = adjust_brightness(img, 0.0);
    for (double v : dark.values()) CHECK(v == 0.0);
}

TEST_CASE("saturation with factor zero yields grayscale") {
    RngStream rng(6, 6);
    const Tensor img = random_image(4, 4, rng);
    const Tensor gray = adjust_saturation(img, 0.0);
    const size_t plane = 16;
    for (size_t i = 0; i < plane; ++i) {
        CHECK(gray[i] == doctest::Approx(gray[plane + i]).epsilon(1e-12));
        CHECK(gray[i] == doctest::Approx(gray[2 * plane + i]).epsilon(1e-12));
    }
}

TEST_CASE("normalization round-trips within 1e-12") {
    RngStream rng(7, 7);
    const Tensor img = random_image(12, 12, rng);
    const AugmentConfig cfg;
    const Tensor norm = normalize_channels(img, cfg.mean, cfg.std_dev);
    const Tensor back = denormalize_channels(norm, cfg.mean, cfg.std_dev);
    for (size_t i = 0; i < img.size(); ++i) CHECK(std::fabs(back[i] - img[i]) < 1e-12);
}

TEST_CASE("eval_transform is deterministic with fixed output shape") {
    RngStream rng(8, 8);
    const Tensor img = random_image(40, 30, rng);
    const AugmentConfig cfg;
    const Tensor a = eval_transform(img, cfg);
    const Tensor b = eval_transform(img, cfg);
    CHECK(a.extent(0) == 3);
    CHECK(a.extent(1) == 299);
    CHECK(a.extent(2) == 299);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    // Denormalizing recovers the resized image.
    const Tensor resized = resize_bilinear(img, 299, 299);
    const Tensor back = denormalize_channels(a, cfg.mean, cfg.std_dev);
    for (size_t i = 0; i < back.size(); ++i) CHECK(std::fabs(back[i] - resized[i]) < 1e-12);
}

TEST_CASE("eval_transform maps the channel-mean image to zero") {
    const AugmentConfig cfg;
    Tensor img({3, 10, 10});
    for (size_t c = 0; c < 3; ++c)
        for (size_t i = 0; i < 100; ++i) img[c * 100 + i] = cfg.mean[c];
    const Tensor out = eval_transform(img, cfg);
    for (double v : out.values()) CHECK(std::fabs(v) < 1e-12);
}

TEST_CASE("augment output is deterministic per stream and correctly shaped") {
    RngStream rng(9, 9);
    const Tensor img = random_image(64, 48, rng);
    const AugmentConfig cfg;
    RngStream s1 = RngStream(42, 4).substream(3, 17);
    RngStream s2 = RngStream(42, 4).substream(3, 17);
    const Tensor a = augment(img, cfg, s1);
    const Tensor b = augment(img, cfg, s2);
    CHECK(a.extent(1) == 299);
    CHECK(a.extent(2) == 299);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    RngStream s3 = RngStream(42, 4).substream(3, 18);
    const Tensor c = augment(img, cfg, s3);
    bool any_diff = false;
    for (size_t i = 0; i < a.size() && !any_diff; ++i) any_diff = a[i] != c[i];
    CHECK(any_diff);
}

TEST_CASE("augment with all ranges zeroed equals eval_transform") {
    RngStream rng(10, 10);
    const Tensor img = random_image(32, 32, rng);
    AugmentConfig cfg;
    cfg.flip_prob = 0.0;
    cfg.rotation_degrees = 0.0;
    cfg.jitter_factor = 0.0;
    cfg.translate_fraction = 0.0;
    RngStream stream(1, 2);
    const Tensor a = augment(img, cfg, stream);
    const Tensor b = eval_transform(img, cfg);
    for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("augment config validation") {
    AugmentConfig cfg;
    cfg.flip_prob = 1.5;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = AugmentConfig{};
    cfg.jitter_factor = 1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = AugmentConfig{};
    cfg.std_dev[1] = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}
