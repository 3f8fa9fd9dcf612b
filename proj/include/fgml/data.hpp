#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fgml/rng.hpp"
#include "fgml/tensor.hpp"

namespace fgml {

// One training example: either an image (3 x H x W in [0,1]) or a feature
// vector (rank 1), with a class index and a stable origin identifier.
struct Sample {
    Tensor input;
    uint32_t label = 0;
    std::string source_id;
};

enum class SplitTag { Train, Validation, Test };

const char* split_name(SplitTag tag);

struct DatasetSplit {
    std::vector<Sample> samples;
    std::vector<std::string> class_names;
    SplitTag tag = SplitTag::Train;

    size_t class_count() const { return class_names.size(); }
    bool feature_based() const {
        return !samples.empty() && samples.front().input.rank() == 1;
    }
};

struct DatasetSplits {
    DatasetSplit train, validation, test;
};

// Binary PPM (P6, maxval 255) codec; values scale to [0, 1], CHW layout.
Tensor decode_ppm(std::span<const uint8_t> bytes);
std::vector<uint8_t> encode_ppm(const Tensor& img);
Tensor load_ppm(const std::string& path);
void save_ppm(const std::string& path, const Tensor& img);

// Loads <root>/<split>/<class-name>/*.ppm. Class names are sorted
// lexicographically and samples by (class, filename), so label indices are
// stable across directory listing order. With skip_undecodable, bad files are
// reported to stderr and skipped instead of raising.
DatasetSplit load_image_folder(const std::string& root, SplitTag tag,
                               bool skip_undecodable = false);

// Feature-vector file, little-endian, bit-exact:
//   magic "MFV1" | u32 N | u32 F | u32 C | N*F float32 row-major | N u32 labels
void write_features(const std::string& path, const DatasetSplit& split);
DatasetSplit read_features(const std::string& path, SplitTag tag);

struct FeatureFileHeader {
    uint32_t sample_count = 0;
    uint32_t feature_dim = 0;
    uint32_t class_count = 0;
};

FeatureFileHeader inspect_features(const std::string& path);

// Synthetic feature generator: C unit class directions with pairwise angle at
// least delta_inter (rejection sampled), per-sample tangent-space Gaussian
// perturbation of per-coordinate scale sigma_intra, renormalized, then scaled
// by a radial factor in [0.5, 2.0) so raw features are not pre-normalized.
struct SynthConfig {
    size_t classes = 6;
    size_t per_class = 300;
    size_t feature_dim = 32;
    double sigma_intra = 0.25;
    double delta_inter = 0.35;
    uint64_t seed = 42;

    void validate() const;
};

// Stratified 70/15/15 split of the generated samples.
DatasetSplits synth_dataset(const SynthConfig& config);

}  // namespace fgml
