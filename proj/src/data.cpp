#include "fgml/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fgml/error.hpp"

namespace fs = std::filesystem;

namespace fgml {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

void write_u32_le(std::ostream& os, uint32_t v) {
    const uint8_t bytes[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                              static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    os.write(reinterpret_cast<const char*>(bytes), 4);
}

uint32_t read_u32_le(std::istream& is, const char* what) {
    uint8_t bytes[4];
    if (!is.read(reinterpret_cast<char*>(bytes), 4))
        raise(ErrorKind::Format, std::string("truncated file while reading ") + what);
    return static_cast<uint32_t>(bytes[0]) | (static_cast<uint32_t>(bytes[1]) << 8) |
           (static_cast<uint32_t>(bytes[2]) << 16) | (static_cast<uint32_t>(bytes[3]) << 24);
}

void write_f32_le(std::ostream& os, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32_le(os, bits);
}

float read_f32_le(std::istream& is, const char* what) {
    const uint32_t bits = read_u32_le(is, what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

// PPM header token reader: skips whitespace and '#' comments.
std::string next_ppm_token(std::span<const uint8_t> bytes, size_t& pos) {
    while (pos < bytes.size()) {
        const char c = static_cast<char>(bytes[pos]);
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++pos;
        } else {
            break;
        }
    }
    std::string token;
    while (pos < bytes.size()) {
        const char c = static_cast<char>(bytes[pos]);
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '#') break;
        token.push_back(c);
        ++pos;
    }
    if (token.empty()) raise(ErrorKind::Format, "ppm: truncated header");
    return token;
}

size_t parse_ppm_int(const std::string& token) {
    size_t value = 0;
    for (char c : token) {
        if (c < '0' || c > '9') raise(ErrorKind::Format, "ppm: bad integer '" + token + "'");
        value = value * 10 + static_cast<size_t>(c - '0');
    }
    return value;
}

}  // namespace

const char* split_name(SplitTag tag) {
    switch (tag) {
        case SplitTag::Train: return "train";
        case SplitTag::Validation: return "validation";
        case SplitTag::Test: return "test";
    }
    return "?";
}

Tensor decode_ppm(std::span<const uint8_t> bytes) {
    size_t pos = 0;
    if (next_ppm_token(bytes, pos) != "P6")
        raise(ErrorKind::Format, "ppm: bad magic, expected P6");
    const size_t w = parse_ppm_int(next_ppm_token(bytes, pos));
    const size_t h = parse_ppm_int(next_ppm_token(bytes, pos));
    const size_t maxval = parse_ppm_int(next_ppm_token(bytes, pos));
    if (w == 0 || h == 0) raise(ErrorKind::Format, "ppm: zero dimension");
    if (maxval != 255) raise(ErrorKind::Format, "ppm: only maxval 255 supported");
    pos += 1;  // single whitespace byte after maxval
    if (pos + 3 * w * h > bytes.size())
        raise(ErrorKind::Format, "ppm: truncated payload (" +
                                     std::to_string(bytes.size() - pos) + " of " +
                                     std::to_string(3 * w * h) + " bytes)");
    Tensor img({3, h, w});
    for (size_t y = 0; y < h; ++y) {
        for (size_t x = 0; x < w; ++x) {
            for (size_t c = 0; c < 3; ++c) {
                const uint8_t v = bytes[pos + (y * w + x) * 3 + c];
                img[(c * h + y) * w + x] = static_cast<double>(v) / 255.0;
            }
        }
    }
    return img;
}

std::vector<uint8_t> encode_ppm(const Tensor& img) {
    if (img.rank() != 3 || img.extent(0) != 3)
        raise(ErrorKind::Dimension, "encode_ppm expects 3 x H x W, got " + img.shape_str());
    const size_t h = img.extent(1), w = img.extent(2);
    const std::string header =
        "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + 3 * h * w);
    for (size_t y = 0; y < h; ++y) {
        for (size_t x = 0; x < w; ++x) {
            for (size_t c = 0; c < 3; ++c) {
                double v = img[(c * h + y) * w + x];
                v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
                out.push_back(static_cast<uint8_t>(std::lround(v * 255.0)));
            }
        }
    }
    return out;
}

Tensor load_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return decode_ppm(bytes);
}

void save_ppm(const std::string& path, const Tensor& img) {
    const std::vector<uint8_t> bytes = encode_ppm(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

DatasetSplit load_image_folder(const std::string& root, SplitTag tag,
                               bool skip_undecodable) {
    const fs::path split_dir = fs::path(root) / split_name(tag);
    if (!fs::is_directory(split_dir))
        raise(ErrorKind::Data, "missing split directory " + split_dir.string());

    std::vector<std::string> class_names;
    for (const auto& entry : fs::directory_iterator(split_dir))
        if (entry.is_directory()) class_names.push_back(entry.path().filename().string());
    std::sort(class_names.begin(), class_names.end());
    if (class_names.empty())
        raise(ErrorKind::Data, "no class directories under " + split_dir.string());

    DatasetSplit split;
    split.tag = tag;
    split.class_names = class_names;
    for (uint32_t label = 0; label < class_names.size(); ++label) {
        const fs::path class_dir = split_dir / class_names[label];
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(class_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".ppm")
                files.push_back(entry.path().filename().string());
        }
        std::sort(files.begin(), files.end());
        if (files.empty())
            raise(ErrorKind::Data, "class directory has no .ppm files: " + class_dir.string());
        for (const std::string& file : files) {
            const std::string path = (class_dir / file).string();
            try {
                split.samples.push_back({load_ppm(path), label, path});
            } catch (const Error& e) {
                if (!skip_undecodable)
                    raise(ErrorKind::Data, "undecodable file " + path + ": " + e.what());
                std::cerr << "warning: skipping " << path << ": " << e.what() << "\n";
            }
        }
    }
    return split;
}

void write_features(const std::string& path, const DatasetSplit& split) {
    size_t dim = 0;
    for (const Sample& s : split.samples) {
        if (s.input.rank() != 1)
            raise(ErrorKind::Data, "write_features requires feature samples, got " +
                                       s.input.shape_str());
        if (dim == 0) dim = s.input.size();
        if (s.input.size() != dim)
            raise(ErrorKind::Data, "write_features: inconsistent feature dims");
        if (s.label >= split.class_count())
            raise(ErrorKind::Label, "write_features: label out of range");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::Io, "cannot write " + path);
    out.write("MFV1", 4);
    write_u32_le(out, static_cast<uint32_t>(split.samples.size()));
    write_u32_le(out, static_cast<uint32_t>(dim));
    write_u32_le(out, static_cast<uint32_t>(split.class_count()));
    for (const Sample& s : split.samples)
        for (size_t i = 0; i < dim; ++i)
            write_f32_le(out, static_cast<float>(s.input[i]));
    for (const Sample& s : split.samples) write_u32_le(out, s.label);
    if (!out) raise(ErrorKind::Io, "write failed for " + path);
}

namespace {

FeatureFileHeader read_feature_header(std::istream& in, const std::string& path) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "MFV1", 4) != 0)
        raise(ErrorKind::Format, "bad magic in " + path + ", expected MFV1");
    FeatureFileHeader header;
    header.sample_count = read_u32_le(in, "sample count");
    header.feature_dim = read_u32_le(in, "feature dim");
    header.class_count = read_u32_le(in, "class count");
    return header;
}

}  // namespace

FeatureFileHeader inspect_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open " + path);
    return read_feature_header(in, path);
}

DatasetSplit read_features(const std::string& path, SplitTag tag) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::Io, "cannot open " + path);
    const FeatureFileHeader header = read_feature_header(in, path);
    if (header.class_count == 0) raise(ErrorKind::Format, "feature file with zero classes");

    DatasetSplit split;
    split.tag = tag;
    const size_t width = std::to_string(header.class_count - 1).size();
    for (uint32_t c = 0; c < header.class_count; ++c) {
        std::string num = std::to_string(c);
        split.class_names.push_back("class_" + std::string(width - num.size(), '0') + num);
    }
    split.samples.reserve(header.sample_count);
    std::vector<std::vector<double>> rows(header.sample_count);
    for (uint32_t i = 0; i < header.sample_count; ++i) {
        rows[i].resize(header.feature_dim);
        for (uint32_t j = 0; j < header.feature_dim; ++j)
            rows[i][j] = static_cast<double>(read_f32_le(in, "feature payload"));
    }
    for (uint32_t i = 0; i < header.sample_count; ++i) {
        const uint32_t label = read_u32_le(in, "labels");
        if (label >= header.class_count)
            raise(ErrorKind::Format, "label " + std::to_string(label) +
                                         " >= class count " +
                                         std::to_string(header.class_count));
        split.samples.push_back({Tensor({header.feature_dim}, std::move(rows[i])), label,
                                 path + "#" + std::to_string(i)});
    }
    return split;
}

void SynthConfig::validate() const {
    if (classes < 2) raise(ErrorKind::Parameter, "synth: need at least 2 classes");
    if (per_class == 0) raise(ErrorKind::Parameter, "synth: per_class must be positive");
    if (feature_dim < 2) raise(ErrorKind::Parameter, "synth: feature_dim must be >= 2");
    if (sigma_intra < 0.0) raise(ErrorKind::Parameter, "synth: sigma_intra must be >= 0");
    if (!(delta_inter > 0.0 && delta_inter < kPi))
        raise(ErrorKind::Parameter, "synth: delta_inter must lie in (0, pi)");
}

DatasetSplits synth_dataset(const SynthConfig& config) {
    config.validate();
    const size_t dim = config.feature_dim;

    // Class directions by rejection against the minimum pairwise angle.
    RngStream dir_rng = RngStream(config.seed, 0xD1).substream(1);
    std::vector<std::vector<double>> directions;
    const double cos_limit = std::cos(config.delta_inter);
    size_t attempts = 0;
    const size_t max_attempts = 20000;
    while (directions.size() < config.classes) {
        if (++attempts > max_attempts)
            raise(ErrorKind::Data,
                  "synth: could not place " + std::to_string(config.classes) +
                      " directions with pairwise angle >= " +
                      std::to_string(config.delta_inter) + " after " +
                      std::to_string(max_attempts) + " attempts");
        std::vector<double> d(dim);
        for (double& x : d) x = dir_rng.normal(0.0, 1.0);
        const double norm = l2_norm(d);
        if (norm < eps_norm()) continue;
        for (double& x : d) x /= norm;
        bool ok = true;
        for (const auto& prev : directions) {
            if (dot(prev, d) > cos_limit) {
                ok = false;
                break;
            }
        }
        if (ok) directions.push_back(std::move(d));
    }

    const size_t width = std::to_string(config.classes - 1).size();
    std::vector<std::string> class_names;
    for (size_t c = 0; c < config.classes; ++c) {
        std::string num = std::to_string(c);
        class_names.push_back("class_" + std::string(width - num.size(), '0') + num);
    }

    DatasetSplits out;
    out.train.tag = SplitTag::Train;
    out.validation.tag = SplitTag::Validation;
    out.test.tag = SplitTag::Test;
    out.train.class_names = class_names;
    out.validation.class_names = class_names;
    out.test.class_names = class_names;

    const size_t n_train = config.per_class * 70 / 100;
    const size_t n_val = config.per_class * 15 / 100;

    for (size_t k = 0; k < config.classes; ++k) {
        const std::vector<double>& d = directions[k];
        for (size_t i = 0; i < config.per_class; ++i) {
            RngStream rng = RngStream(config.seed, 0x5A).substream(k, i);
            // Gaussian angular deviation along a random tangent direction, so
            // the realized spread is sigma_intra radians regardless of F.
            std::vector<double> u(dim);
            for (double& x : u) x = rng.normal(0.0, 1.0);
            const double along = dot(u, d);
            for (size_t j = 0; j < dim; ++j) u[j] -= along * d[j];
            const double un = l2_norm(u);
            const double angle = rng.normal(0.0, config.sigma_intra);
            std::vector<double> v(dim);
            for (size_t j = 0; j < dim; ++j)
                v[j] = d[j] + (un < eps_norm() ? 0.0 : angle * u[j] / un);
            const double norm = l2_norm(v);
            const double radial = rng.uniform(0.5, 2.0);
            for (double& x : v) x = x / norm * radial;

            Sample sample{Tensor({dim}, std::move(v)), static_cast<uint32_t>(k),
                          "synth/" + class_names[k] + "/" + std::to_string(i)};
            if (i < n_train)
                out.train.samples.push_back(std::move(sample));
            else if (i < n_train + n_val)
                out.validation.samples.push_back(std::move(sample));
            else
                out.test.samples.push_back(std::move(sample));
        }
    }
    return out;
}

}  // namespace fgml
