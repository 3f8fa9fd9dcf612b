#include "fgml/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fgml/error.hpp"

namespace fgml {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        raise(ErrorKind::Config, "bad numeric value for " + key + ": '" + value + "'");
    return v;
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        raise(ErrorKind::Config, "bad integer value for " + key + ": '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "yes") return true;
    if (value == "0" || value == "false" || value == "no") return false;
    raise(ErrorKind::Config, "bad boolean value for " + key + ": '" + value + "'");
}

}  // namespace

void apply_config_key(EngineConfig& config, const std::string& key,
                      const std::string& value) {
    TrainConfig& t = config.train;
    AugmentConfig& a = config.train.augment;
    SynthConfig& s = config.synth;

    if (key == "data.kind") {
        if (value == "folder") config.data_kind = EngineConfig::DataKind::Folder;
        else if (value == "features") config.data_kind = EngineConfig::DataKind::Features;
        else if (value == "synth") config.data_kind = EngineConfig::DataKind::Synth;
        else raise(ErrorKind::Config, "data.kind must be folder, features or synth");
    }
    else if (key == "data.root") config.data_root = value;
    else if (key == "data.train") config.features_train = value;
    else if (key == "data.validation") config.features_validation = value;
    else if (key == "data.test") config.features_test = value;

    else if (key == "train.loss_mode") t.loss_mode = parse_loss_mode(value);
    else if (key == "train.epochs") t.epochs = parse_u64(key, value);
    else if (key == "train.batch_size") t.batch_size = parse_u64(key, value);
    else if (key == "train.learning_rate") t.learning_rate = parse_double(key, value);
    else if (key == "train.weight_decay") t.weight_decay = parse_double(key, value);
    else if (key == "train.dropout") t.dropout = parse_double(key, value);
    else if (key == "train.scale") t.scale = parse_double(key, value);
    else if (key == "train.margin") t.margin = parse_double(key, value);
    else if (key == "train.alpha") t.alpha = parse_double(key, value);
    else if (key == "train.center_beta") t.center_beta = parse_double(key, value);
    else if (key == "train.seed") t.seed = parse_u64(key, value);
    else if (key == "train.extractor") t.extractor = parse_extractor_kind(value);
    else if (key == "train.embedding_dim") t.embedding_dim = parse_u64(key, value);
    else if (key == "train.hidden_dim") t.hidden_dim = parse_u64(key, value);
    else if (key == "train.eval_every") t.eval_every = parse_u64(key, value);
    else if (key == "train.final_relu") t.final_relu = parse_bool(key, value);
    else if (key == "train.adam_beta1") t.adam_beta1 = parse_double(key, value);
    else if (key == "train.adam_beta2") t.adam_beta2 = parse_double(key, value);
    else if (key == "train.adam_eps") t.adam_eps = parse_double(key, value);
    else if (key == "train.decay_biases") t.decay_biases = parse_bool(key, value);
    else if (key == "train.cnn_input_size") t.cnn_input_size = parse_u64(key, value);

    else if (key == "augment.flip_prob") a.flip_prob = parse_double(key, value);
    else if (key == "augment.rotation_degrees") a.rotation_degrees = parse_double(key, value);
    else if (key == "augment.jitter_factor") a.jitter_factor = parse_double(key, value);
    else if (key == "augment.translate_fraction") a.translate_fraction = parse_double(key, value);
    else if (key == "augment.target_size") a.target_size = parse_u64(key, value);
    else if (key == "augment.mean_r") a.mean[0] = parse_double(key, value);
    else if (key == "augment.mean_g") a.mean[1] = parse_double(key, value);
    else if (key == "augment.mean_b") a.mean[2] = parse_double(key, value);
    else if (key == "augment.std_r") a.std_dev[0] = parse_double(key, value);
    else if (key == "augment.std_g") a.std_dev[1] = parse_double(key, value);
    else if (key == "augment.std_b") a.std_dev[2] = parse_double(key, value);

    else if (key == "synth.classes") s.classes = parse_u64(key, value);
    else if (key == "synth.per_class") s.per_class = parse_u64(key, value);
    else if (key == "synth.feature_dim") s.feature_dim = parse_u64(key, value);
    else if (key == "synth.sigma_intra") s.sigma_intra = parse_double(key, value);
    else if (key == "synth.delta_inter") s.delta_inter = parse_double(key, value);
    else if (key == "synth.seed") s.seed = parse_u64(key, value);

    else raise(ErrorKind::Config, "unknown configuration key '" + key + "'");
}

EngineConfig parse_config_text(const std::string& text, const std::string& origin) {
    EngineConfig config;
    std::istringstream is(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            raise(ErrorKind::Config, origin + ":" + std::to_string(line_no) +
                                         ": expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            apply_config_key(config, key, value);
        } catch (const Error& e) {
            raise(e.kind(), origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return config;
}

EngineConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::Config, "cannot open config file " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

DatasetSplits load_dataset(const EngineConfig& config) {
    switch (config.data_kind) {
        case EngineConfig::DataKind::Folder: {
            if (config.data_root.empty())
                raise(ErrorKind::Config, "data.kind=folder requires data.root");
            DatasetSplits splits;
            splits.train = load_image_folder(config.data_root, SplitTag::Train);
            splits.validation = load_image_folder(config.data_root, SplitTag::Validation);
            splits.test = load_image_folder(config.data_root, SplitTag::Test);
            if (splits.validation.class_names != splits.train.class_names ||
                splits.test.class_names != splits.train.class_names)
                raise(ErrorKind::Data, "splits disagree on class names under " +
                                           config.data_root);
            return splits;
        }
        case EngineConfig::DataKind::Features: {
            if (config.features_train.empty())
                raise(ErrorKind::Config, "data.kind=features requires data.train");
            DatasetSplits splits;
            splits.train = read_features(config.features_train, SplitTag::Train);
            if (!config.features_validation.empty())
                splits.validation =
                    read_features(config.features_validation, SplitTag::Validation);
            if (!config.features_test.empty())
                splits.test = read_features(config.features_test, SplitTag::Test);
            if (splits.validation.class_names.empty())
                splits.validation.class_names = splits.train.class_names;
            if (splits.test.class_names.empty())
                splits.test.class_names = splits.train.class_names;
            if (splits.validation.class_names != splits.train.class_names ||
                splits.test.class_names != splits.train.class_names)
                raise(ErrorKind::Data, "feature files disagree on class count");
            return splits;
        }
        case EngineConfig::DataKind::Synth:
            return synth_dataset(config.synth);
        case EngineConfig::DataKind::None:
            raise(ErrorKind::Config,
                  "no dataset configured: set data.kind to folder, features or synth");
    }
    raise(ErrorKind::Config, "unreachable data kind");
}

}  // namespace fgml
