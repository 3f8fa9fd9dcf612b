#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fgml/data.hpp"
#include "fgml/rng.hpp"

using namespace fgml;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("fgml_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<uint8_t> ppm_bytes(size_t w, size_t h, const std::vector<uint8_t>& rgb) {
    std::string header = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    std::vector<uint8_t> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), rgb.begin(), rgb.end());
    return bytes;
}

void write_file(const fs::path& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("decode_ppm single red pixel") {
    const Tensor img = decode_ppm(ppm_bytes(1, 1, {255, 0, 0}));
    CHECK(img.shape() == std::vector<size_t>{3, 1, 1});
    CHECK(img[0] == 1.0);
    CHECK(img[1] == 0.0);
    CHECK(img[2] == 0.0);
}

TEST_CASE("decode_ppm black/white positions") {
    const Tensor img = decode_ppm(ppm_bytes(2, 1, {0, 0, 0, 255, 255, 255}));
    for (size_t c = 0; c < 3; ++c) {
        CHECK(img[(c * 1 + 0) * 2 + 0] == 0.0);
        CHECK(img[(c * 1 + 0) * 2 + 1] == 1.0);
    }
}

TEST_CASE("decode_ppm handles comments and rejects bad input") {
    std::string header = "P6\n# a comment\n 2 1\n255\n";
    std::vector<uint8_t> bytes(header.begin(), header.end());
    bytes.insert(bytes.end(), {1, 2, 3, 4, 5, 6});
    CHECK(decode_ppm(bytes).extent(2) == 2);

    CHECK_THROWS_AS(decode_ppm(ppm_bytes(2, 2, {0, 0, 0})), Error);  // truncated
    std::vector<uint8_t> bad = ppm_bytes(1, 1, {0, 0, 0});
    bad[1] = '5';
    CHECK_THROWS_AS(decode_ppm(bad), Error);  // bad magic
}

TEST_CASE("ppm encode/decode round-trips exactly") {
    RngStream rng(1, 1);
    Tensor img({3, 6, 5});
    for (size_t i = 0; i < img.size(); ++i)
        img[i] = static_cast<double>(rng.below(256)) / 255.0;
    const Tensor back = decode_ppm(encode_ppm(img));
    for (size_t i = 0; i < img.size(); ++i) CHECK(back[i] == img[i]);
}

TEST_CASE("load_image_folder layout, ordering, and errors") {
    TempDir tmp;
    const fs::path train = tmp.path / "train";
    // Intentionally created in non-lexicographic order.
    fs::create_directories(train / "zebra_spot");
    fs::create_directories(train / "alpha_blight");
    write_file(train / "alpha_blight" / "b.ppm", ppm_bytes(1, 1, {10, 20, 30}));
    write_file(train / "alpha_blight" / "a.ppm", ppm_bytes(1, 1, {40, 50, 60}));
    write_file(train / "zebra_spot" / "x.ppm", ppm_bytes(1, 1, {70, 80, 90}));
    write_file(train / "zebra_spot" / "w.ppm", ppm_bytes(1, 1, {1, 2, 3}));

    const DatasetSplit split = load_image_folder(tmp.path.string(), SplitTag::Train);
    REQUIRE(split.samples.size() == 4);
    CHECK(split.class_names == std::vector<std::string>{"alpha_blight", "zebra_spot"});
    CHECK(split.samples[0].label == 0);
    CHECK(split.samples[1].label == 0);
    CHECK(split.samples[2].label == 1);
    CHECK(split.samples[3].label == 1);
    // Files sorted within each class.
    CHECK(split.samples[0].source_id.ends_with("a.ppm"));
    CHECK(split.samples[2].source_id.ends_with("w.ppm"));

    CHECK_THROWS_AS(load_image_folder(tmp.path.string(), SplitTag::Test), Error);

    fs::create_directories(train / "empty_class");
    CHECK_THROWS_AS(load_image_folder(tmp.path.string(), SplitTag::Train), Error);
}

TEST_CASE("undecodable files: fatal by default, skippable by flag") {
    TempDir tmp;
    fs::create_directories(tmp.path / "train" / "only");
    write_file(tmp.path / "train" / "only" / "good.ppm", ppm_bytes(1, 1, {9, 9, 9}));
    write_file(tmp.path / "train" / "only" / "bad.ppm", {'P', '5', '\n'});

    CHECK_THROWS_AS(load_image_folder(tmp.path.string(), SplitTag::Train), Error);
    const DatasetSplit split = load_image_folder(tmp.path.string(), SplitTag::Train, true);
    CHECK(split.samples.size() == 1);
}

TEST_CASE("feature file round-trip at 32-bit precision") {
    TempDir tmp;
    const std::string path = (tmp.path / "t.mfv").string();
    RngStream rng(2, 2);
    DatasetSplit split;
    split.class_names = {"a", "b", "c"};
    for (int i = 0; i < 7; ++i) {
        Tensor f({5});
        for (size_t j = 0; j < 5; ++j) f[j] = rng.normal(0.0, 3.0);
        split.samples.push_back({std::move(f), static_cast<uint32_t>(i % 3), "s"});
    }
    write_features(path, split);

    const DatasetSplit back = read_features(path, SplitTag::Train);
    REQUIRE(back.samples.size() == 7);
    CHECK(back.class_names.size() == 3);
    for (size_t i = 0; i < 7; ++i) {
        CHECK(back.samples[i].label == split.samples[i].label);
        for (size_t j = 0; j < 5; ++j) {
            const double stored = static_cast<double>(
                static_cast<float>(split.samples[i].input[j]));
            CHECK(back.samples[i].input[j] == stored);
        }
    }

    const FeatureFileHeader h = inspect_features(path);
    CHECK(h.sample_count == 7);
    CHECK(h.feature_dim == 5);
    CHECK(h.class_count == 3);
}

TEST_CASE("empty feature file is valid with N=0") {
    TempDir tmp;
    const std::string path = (tmp.path / "empty.mfv").string();
    DatasetSplit split;
    split.class_names = {"a", "b"};
    write_features(path, split);
    const DatasetSplit back = read_features(path, SplitTag::Test);
    CHECK(back.samples.empty());
    CHECK(back.class_names.size() == 2);
}

TEST_CASE("feature file error contracts") {
    TempDir tmp;
    const std::string path = (tmp.path / "bad.mfv").string();
    write_file(path, {'M', 'F', 'V', '2', 0, 0, 0, 0});
    CHECK_THROWS_AS(read_features(path, SplitTag::Train), Error);

    // Truncated payload.
    const std::string trunc = (tmp.path / "trunc.mfv").string();
    std::vector<uint8_t> bytes = {'M', 'F', 'V', '1',
                                  2, 0, 0, 0,   // N = 2
                                  3, 0, 0, 0,   // F = 3
                                  2, 0, 0, 0};  // C = 2
    bytes.push_back(0);  // one stray payload byte
    write_file(trunc, bytes);
    CHECK_THROWS_AS(read_features(trunc, SplitTag::Train), Error);

    // Label out of range.
    DatasetSplit split;
    split.class_names = {"a", "b"};
    split.samples.push_back({Tensor({2}, {1.0, 2.0}), 1, "s"});
    const std::string lab = (tmp.path / "lab.mfv").string();
    write_features(lab, split);
    std::fstream fix(lab, std::ios::in | std::ios::out | std::ios::binary);
    fix.seekp(-4, std::ios::end);
    const uint32_t big = 9;
    fix.write(reinterpret_cast<const char*>(&big), 4);
    fix.close();
    CHECK_THROWS_AS(read_features(lab, SplitTag::Train), Error);
}

TEST_CASE("synth dataset: zero spread makes class samples collinear") {
    SynthConfig cfg;
    cfg.classes = 3;
    cfg.per_class = 10;
    cfg.feature_dim = 8;
    cfg.sigma_intra = 0.0;
    cfg.delta_inter = 0.3;
    cfg.seed = 7;
    const DatasetSplits splits = synth_dataset(cfg);
    for (const Sample& s : splits.train.samples) {
        // Compare direction with the first sample of the same class.
        for (const Sample& t : splits.train.samples) {
            if (t.label != s.label) continue;
            const double cos_st = dot(s.input.values(), t.input.values()) /
                                  (l2_norm(s.input.values()) * l2_norm(t.input.values()));
            CHECK(cos_st == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("synth dataset: exact stratified counts and balanced labels") {
    SynthConfig cfg;
    cfg.classes = 4;
    cfg.per_class = 20;
    cfg.feature_dim = 6;
    cfg.sigma_intra = 0.2;
    cfg.delta_inter = 0.3;
    cfg.seed = 9;
    const DatasetSplits splits = synth_dataset(cfg);
    CHECK(splits.train.samples.size() == 4 * 14);
    CHECK(splits.validation.samples.size() == 4 * 3);
    CHECK(splits.test.samples.size() == 4 * 3);

    std::vector<int> counts(4, 0);
    for (const Sample& s : splits.train.samples) counts[s.label] += 1;
    for (int c : counts) CHECK(c == 14);
}

TEST_CASE("synth dataset: pairwise class angles respect the floor") {
    SynthConfig cfg;
    cfg.classes = 6;
    cfg.per_class = 5;
    cfg.feature_dim = 32;
    cfg.sigma_intra = 0.0;
    cfg.delta_inter = 0.35;
    cfg.seed = 42;
    const DatasetSplits splits = synth_dataset(cfg);

    // With zero spread every sample lies on its class direction; recover the
    // directions and recheck all pairwise angles.
    std::vector<Tensor> dirs(6, Tensor({32}));
    std::vector<bool> seen(6, false);
    for (const Sample& s : splits.train.samples) {
        if (seen[s.label]) continue;
        const double norm = l2_norm(s.input.values());
        for (size_t j = 0; j < 32; ++j) dirs[s.label][j] = s.input[j] / norm;
        seen[s.label] = true;
    }
    for (size_t a = 0; a < 6; ++a)
        for (size_t b = a + 1; b < 6; ++b) {
            const double angle = std::acos(
                std::min(1.0, std::max(-1.0, dot(dirs[a].values(), dirs[b].values()))));
            CHECK(angle >= cfg.delta_inter - 1e-9);
        }
}

TEST_CASE("synth dataset: radial factors keep features unnormalized") {
    SynthConfig cfg;
    cfg.classes = 2;
    cfg.per_class = 40;
    cfg.feature_dim = 8;
    cfg.sigma_intra = 0.1;
    cfg.delta_inter = 0.5;
    cfg.seed = 3;
    const DatasetSplits splits = synth_dataset(cfg);
    double lo = 1e9, hi = 0.0;
    for (const Sample& s : splits.train.samples) {
        const double n = l2_norm(s.input.values());
        lo = std::min(lo, n);
        hi = std::max(hi, n);
        CHECK(n >= 0.5 - 1e-9);
        CHECK(n < 2.0 + 1e-9);
    }
    CHECK(hi - lo > 0.3);  // genuinely spread radii
}

TEST_CASE("synth dataset: infeasible separation fails with a clear error") {
    SynthConfig cfg;
    cfg.classes = 40;
    cfg.per_class = 2;
    cfg.feature_dim = 2;  // 40 directions >= 1.5 rad apart cannot fit in 2-D
    cfg.sigma_intra = 0.1;
    cfg.delta_inter = 1.5;
    cfg.seed = 1;
    CHECK_THROWS_AS(synth_dataset(cfg), Error);
}

TEST_CASE("synth dataset is reproducible for a fixed seed") {
    SynthConfig cfg;
    cfg.classes = 3;
    cfg.per_class = 12;
    cfg.feature_dim = 10;
    cfg.sigma_intra = 0.25;
    cfg.delta_inter = 0.35;
    cfg.seed = 11;
    const DatasetSplits a = synth_dataset(cfg);
    const DatasetSplits b = synth_dataset(cfg);
    REQUIRE(a.train.samples.size() == b.train.samples.size());
    for (size_t i = 0; i < a.train.samples.size(); ++i)
        for (size_t j = 0; j < a.train.samples[i].input.size(); ++j)
            CHECK(a.train.samples[i].input[j] == b.train.samples[i].input[j]);
}
