#pragma once

#include <string>

#include "fgml/data.hpp"
#include "fgml/train.hpp"

namespace fgml {

// Flat key=value configuration ('#' comments). Keys mirror the engine structs
// under dotted namespaces (train.*, augment.*, synth.*, data.*). Unknown keys
// are hard errors; command-line --set overrides win over file values.
struct EngineConfig {
    enum class DataKind { None, Folder, Features, Synth };

    DataKind data_kind = DataKind::None;
    std::string data_root;                // data.kind = folder
    std::string features_train;           // data.kind = features
    std::string features_validation;
    std::string features_test;

    TrainConfig train;
    SynthConfig synth;
};

EngineConfig parse_config_file(const std::string& path);
EngineConfig parse_config_text(const std::string& text, const std::string& origin);

// Applies one key=value pair; raises a Config error on unknown keys.
void apply_config_key(EngineConfig& config, const std::string& key,
                      const std::string& value);

// Materializes the configured dataset (folder, feature files, or synthetic).
DatasetSplits load_dataset(const EngineConfig& config);

}  // namespace fgml
