#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fgml/data.hpp"
#include "fgml/image.hpp"
#include "fgml/losses.hpp"
#include "fgml/metrics.hpp"
#include "fgml/model.hpp"
#include "fgml/optim.hpp"

namespace fgml {

enum class LossMode { CrossEntropy, Center, Arc, ArcCenter };

const char* loss_mode_name(LossMode mode);
LossMode parse_loss_mode(const std::string& name);
const char* extractor_kind_name(ExtractorKind kind);
ExtractorKind parse_extractor_kind(const std::string& name);

// Full training configuration. Shipped defaults: AdamW at 1e-4 with decoupled
// decay 1e-4, batch 32, 30 epochs, dropout 0.5, ArcFace s=30 / m=0.5, center
// weight 0.5; embedding head 512 -> 256.
struct TrainConfig {
    LossMode loss_mode = LossMode::ArcCenter;
    size_t epochs = 30;
    size_t batch_size = 32;
    double learning_rate = 1e-4;
    double weight_decay = 1e-4;
    double dropout = 0.5;
    double scale = 30.0;       // ArcFace s
    double margin = 0.5;       // ArcFace m, radians
    double alpha = 0.5;        // center-loss weight in arc+center mode
    double center_beta = 0.5;  // center update rate
    uint64_t seed = 42;
    ExtractorKind extractor = ExtractorKind::Precomputed;
    size_t embedding_dim = 256;
    size_t hidden_dim = 512;
    size_t eval_every = 1;
    bool final_relu = true;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    bool decay_biases = false;
    size_t cnn_input_size = 32;  // augmented images are downscaled to this
    AugmentConfig augment;

    void validate() const;
};

struct EpochRecord {
    size_t epoch = 0;           // 1-based, completed
    double loss_total = 0.0;
    double loss_arc = 0.0;
    double loss_center = 0.0;
    double loss_ce = 0.0;
    double val_accuracy = -1.0;  // -1 when validation was skipped
    double wall_seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> records;
};

// One key=value line per epoch; wall_s is always the last field so consumers
// comparing runs can strip it.
std::string train_log_lines(const TrainLog& log);

// Complete resumable training state.
struct Checkpoint {
    uint32_t version = 1;
    TrainConfig config;
    std::vector<std::string> class_names;
    Model model;
    ClassCenters centers;
    AdamWState opt;
    size_t epoch = 0;               // completed epochs
    double best_val_accuracy = -1.0;
    size_t best_epoch = 0;
};

struct TrainResult {
    Checkpoint best;         // highest validation accuracy, earliest epoch on ties
    Checkpoint final_state;  // state after the last epoch; input for resuming
    TrainLog log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch loop: per epoch a seeded shuffle, then per batch feature
// extraction, MLP embedding, the configured loss, backprop, one AdamW step,
// and a center update when the center loss is active. Validation runs in eval
// mode per `eval_every`. Passing `resume` continues a run; every setting
// except `epochs` must match the checkpoint.
TrainResult train(const TrainConfig& config, const DatasetSplits& data,
                  const Checkpoint* resume = nullptr,
                  const EpochCallback& on_epoch = {});

// Eval-mode predictions into a confusion matrix. ArcFace modes classify by
// cosine logits (margin 0); ties go to the lowest class index.
std::pair<ConfusionMatrix, MetricsReport> evaluate(const Checkpoint& ckpt,
                                                   const DatasetSplit& split);

// Eval-mode embeddings for every sample of a split, one row per sample.
Tensor compute_embeddings(const Checkpoint& ckpt, const DatasetSplit& split);

struct EmbeddingStats {
    std::vector<Tensor> class_means;        // mean of L2-normalized embeddings
    std::vector<double> class_variance;     // mean squared distance to the mean
    std::vector<uint64_t> class_counts;
    double pooled_variance = 0.0;
    double min_inter_class_angle = 0.0;     // radians, over class mean directions
    std::vector<std::string> notes;
};

EmbeddingStats embedding_stats(const Checkpoint& ckpt, const DatasetSplit& split);

// Four-way ablation: cross-entropy, center only, arcface only, arc+center,
// trained from identical seeds and initialization, evaluated on the test
// split of `data` via the best-validation checkpoint.
struct AblationRow {
    LossMode mode;
    MetricsReport metrics;
};

std::vector<AblationRow> run_ablation(const TrainConfig& base, const DatasetSplits& data);

// CSV with columns mode,precision,recall,f1,accuracy (percent, 2 decimals).
std::string ablation_csv(const std::vector<AblationRow>& rows);

// Versioned binary checkpoint:
//   magic "MCK1" | u32 version | length-prefixed config blob | class names |
//   named tensor sections (name, rank, extents, payload).
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);
std::vector<uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::span<const uint8_t> bytes);

// Parameters the optimizer owns under a loss mode. Center-only mode excludes
// both classifier heads, so no gradient path can ever touch them.
std::vector<ParamRef> active_parameters(Model& model, LossMode mode, bool decay_biases);

}  // namespace fgml
