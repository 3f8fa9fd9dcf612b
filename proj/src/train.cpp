#include "fgml/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "fgml/error.hpp"

namespace fgml {

namespace {

// Stream ids for the seed-derived RNG families.
constexpr uint64_t kStreamInit = 1;
constexpr uint64_t kStreamShuffle = 2;
constexpr uint64_t kStreamDropout = 3;
constexpr uint64_t kStreamAugment = 4;

bool center_active(LossMode mode) {
    return mode == LossMode::Center || mode == LossMode::ArcCenter;
}

bool arc_active(LossMode mode) {
    return mode == LossMode::Arc || mode == LossMode::ArcCenter;
}

// Eval-path feature vector for one sample.
Tensor eval_features(const Sample& sample, const Model& model, const TrainConfig& cfg) {
    if (sample.input.rank() == 3) {
        if (model.extractor.kind != ExtractorKind::SmallCnn)
            raise(ErrorKind::Data,
                  "image sample " + sample.source_id + " needs the small-cnn extractor");
        Tensor img = eval_transform(sample.input, cfg.augment);
        img = resize_bilinear(img, cfg.cnn_input_size, cfg.cnn_input_size);
        return cnn_forward(img, model.extractor.cnn);
    }
    return extract_features(sample.input, model.extractor, Mode::Eval);
}

// Cosine logits at margin 0 for the ArcFace prediction path. Rows that cannot
// be normalized (collapsed embeddings) contribute all-zero logits so argmax
// stays defined and deterministic.
Tensor cosine_logits(const Tensor& embeddings, const Tensor& weights, double scale) {
    const size_t n = embeddings.extent(0), c = weights.extent(0), d = weights.extent(1);
    Tensor logits({n, c});
    std::vector<double> w_unit(c * d);
    for (size_t k = 0; k < c; ++k) {
        const double norm = l2_norm(weights.row(k));
        if (norm < eps_norm())
            raise(ErrorKind::Degenerate, "cosine_logits: degenerate weight row");
        for (size_t j = 0; j < d; ++j) w_unit[k * d + j] = weights.at(k, j) / norm;
    }
    for (size_t i = 0; i < n; ++i) {
        const double norm = l2_norm(embeddings.row(i));
        if (norm < eps_norm()) continue;
        for (size_t k = 0; k < c; ++k) {
            double acc = 0.0;
            for (size_t j = 0; j < d; ++j) acc += embeddings.at(i, j) / norm * w_unit[k * d + j];
            logits.at(i, k) = scale * acc;
        }
    }
    return logits;
}

size_t argmax_lowest(std::span<const double> row) {
    size_t best = 0;
    for (size_t k = 1; k < row.size(); ++k)
        if (row[k] > row[best]) best = k;
    return best;
}

void append_grad_rows(Tensor& acc, const Tensor& add, double weight) {
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += weight * add[i];
}

std::string config_mismatch(const char* field) {
    return std::string("resume config differs from checkpoint in ") + field;
}

void check_resume_config(const TrainConfig& cfg, const TrainConfig& saved) {
    if (cfg.loss_mode != saved.loss_mode) raise(ErrorKind::Parameter, config_mismatch("loss_mode"));
    if (cfg.batch_size != saved.batch_size) raise(ErrorKind::Parameter, config_mismatch("batch_size"));
    if (cfg.learning_rate != saved.learning_rate) raise(ErrorKind::Parameter, config_mismatch("learning_rate"));
    if (cfg.weight_decay != saved.weight_decay) raise(ErrorKind::Parameter, config_mismatch("weight_decay"));
    if (cfg.dropout != saved.dropout) raise(ErrorKind::Parameter, config_mismatch("dropout"));
    if (cfg.scale != saved.scale) raise(ErrorKind::Parameter, config_mismatch("scale"));
    if (cfg.margin != saved.margin) raise(ErrorKind::Parameter, config_mismatch("margin"));
    if (cfg.alpha != saved.alpha) raise(ErrorKind::Parameter, config_mismatch("alpha"));
    if (cfg.center_beta != saved.center_beta) raise(ErrorKind::Parameter, config_mismatch("center_beta"));
    if (cfg.seed != saved.seed) raise(ErrorKind::Parameter, config_mismatch("seed"));
    if (cfg.extractor != saved.extractor) raise(ErrorKind::Parameter, config_mismatch("extractor"));
    if (cfg.embedding_dim != saved.embedding_dim) raise(ErrorKind::Parameter, config_mismatch("embedding_dim"));
    if (cfg.hidden_dim != saved.hidden_dim) raise(ErrorKind::Parameter, config_mismatch("hidden_dim"));
    if (cfg.eval_every != saved.eval_every) raise(ErrorKind::Parameter, config_mismatch("eval_every"));
    if (cfg.final_relu != saved.final_relu) raise(ErrorKind::Parameter, config_mismatch("final_relu"));
    if (cfg.adam_beta1 != saved.adam_beta1 || cfg.adam_beta2 != saved.adam_beta2 ||
        cfg.adam_eps != saved.adam_eps)
        raise(ErrorKind::Parameter, config_mismatch("adam parameters"));
    if (cfg.decay_biases != saved.decay_biases) raise(ErrorKind::Parameter, config_mismatch("decay_biases"));
    if (cfg.cnn_input_size != saved.cnn_input_size) raise(ErrorKind::Parameter, config_mismatch("cnn_input_size"));
    if (cfg.augment.flip_prob != saved.augment.flip_prob ||
        cfg.augment.rotation_degrees != saved.augment.rotation_degrees ||
        cfg.augment.jitter_factor != saved.augment.jitter_factor ||
        cfg.augment.translate_fraction != saved.augment.translate_fraction ||
        cfg.augment.target_size != saved.augment.target_size ||
        cfg.augment.mean != saved.augment.mean ||
        cfg.augment.std_dev != saved.augment.std_dev)
        raise(ErrorKind::Parameter, config_mismatch("augmentation settings"));
}

}  // namespace

const char* loss_mode_name(LossMode mode) {
    switch (mode) {
        case LossMode::CrossEntropy: return "ce";
        case LossMode::Center: return "center";
        case LossMode::Arc: return "arc";
        case LossMode::ArcCenter: return "arc+center";
    }
    return "?";
}

LossMode parse_loss_mode(const std::string& name) {
    if (name == "ce") return LossMode::CrossEntropy;
    if (name == "center") return LossMode::Center;
    if (name == "arc") return LossMode::Arc;
    if (name == "arc+center") return LossMode::ArcCenter;
    raise(ErrorKind::Config, "unknown loss mode '" + name + "'");
}

const char* extractor_kind_name(ExtractorKind kind) {
    switch (kind) {
        case ExtractorKind::SmallCnn: return "small-cnn";
        case ExtractorKind::Precomputed: return "precomputed";
        case ExtractorKind::Identity: return "identity";
    }
    return "?";
}

ExtractorKind parse_extractor_kind(const std::string& name) {
    if (name == "small-cnn") return ExtractorKind::SmallCnn;
    if (name == "precomputed") return ExtractorKind::Precomputed;
    if (name == "identity") return ExtractorKind::Identity;
    raise(ErrorKind::Config, "unknown extractor kind '" + name + "'");
}

void TrainConfig::validate() const {
    if (batch_size == 0) raise(ErrorKind::Parameter, "batch_size must be positive");
    if (!(learning_rate > 0.0)) raise(ErrorKind::Parameter, "learning_rate must be positive");
    if (weight_decay < 0.0) raise(ErrorKind::Parameter, "weight_decay must be >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0))
        raise(ErrorKind::Parameter, "dropout must lie in [0, 1)");
    ArcFaceParams{scale, margin}.validate();
    DualLossConfig{alpha}.validate();
    if (!(center_beta > 0.0 && center_beta <= 1.0))
        raise(ErrorKind::Parameter, "center_beta must lie in (0, 1]");
    if (embedding_dim == 0 || hidden_dim == 0)
        raise(ErrorKind::Parameter, "model dimensions must be positive");
    if (eval_every == 0) raise(ErrorKind::Parameter, "eval_every must be positive");
    if (cnn_input_size < 8) raise(ErrorKind::Parameter, "cnn_input_size must be >= 8");
    augment.validate();
}

std::vector<ParamRef> active_parameters(Model& model, LossMode mode, bool decay_biases) {
    std::vector<ParamRef> all = model_parameters(model);
    std::vector<ParamRef> active;
    for (ParamRef& p : all) {
        const bool classifier = p.name.rfind("classifier.", 0) == 0;
        const bool arc = p.name == "arc.weights";
        if (classifier && mode != LossMode::CrossEntropy) continue;
        if (arc && !arc_active(mode)) continue;
        if (decay_biases) p.decay = true;
        active.push_back(p);
    }
    return active;
}

TrainResult train(const TrainConfig& config, const DatasetSplits& data,
                  const Checkpoint* resume, const EpochCallback& on_epoch) {
    config.validate();
    if (data.train.samples.empty()) raise(ErrorKind::Data, "training split is empty");
    const size_t classes = data.train.class_count();
    if (classes < 2) raise(ErrorKind::Data, "need at least two classes");

    const bool image_data = data.train.samples.front().input.rank() == 3;
    if (image_data && config.extractor != ExtractorKind::SmallCnn)
        raise(ErrorKind::Data, "image dataset requires extractor=small-cnn");
    if (!image_data && config.extractor == ExtractorKind::SmallCnn)
        raise(ErrorKind::Data, "small-cnn extractor requires image samples");
    const size_t feature_dim = image_data ? SmallCnn::kFeatureDim
                                          : data.train.samples.front().input.size();

    Checkpoint state;
    if (resume) {
        check_resume_config(config, resume->config);
        state = *resume;
        state.config.epochs = config.epochs;
    } else {
        state.version = 1;
        state.config = config;
        state.class_names = data.train.class_names;
        RngStream init_rng(config.seed, kStreamInit);
        state.model.extractor.kind = config.extractor;
        state.model.extractor.feature_dim = feature_dim;
        if (config.extractor == ExtractorKind::SmallCnn)
            state.model.extractor.cnn = init_small_cnn(init_rng.substream(1));
        state.model.mlp = init_mlp(feature_dim, config.hidden_dim, config.embedding_dim,
                                   config.dropout, config.final_relu, init_rng.substream(2));
        state.model.classifier =
            init_classifier(classes, config.embedding_dim, init_rng.substream(3));
        state.model.arc_weights =
            init_arc_weights(classes, config.embedding_dim, init_rng.substream(4));
        state.centers = ClassCenters(classes, config.embedding_dim, config.center_beta);
        state.opt.config = {config.learning_rate, config.adam_beta1, config.adam_beta2,
                            config.adam_eps, config.weight_decay};
        std::vector<ParamRef> params =
            active_parameters(state.model, config.loss_mode, config.decay_biases);
        state.opt.init(params);
        state.epoch = 0;
        state.best_val_accuracy = -1.0;
        state.best_epoch = 0;
    }

    const ArcFaceParams arc_params{config.scale, config.margin};
    const DualLossConfig dual_cfg{config.alpha};
    const size_t n_train = data.train.samples.size();

    TrainResult result;
    bool have_best = false;

    std::vector<ParamRef> params =
        active_parameters(state.model, config.loss_mode, config.decay_biases);

    for (size_t epoch = state.epoch; epoch < config.epochs; ++epoch) {
        const auto epoch_start = std::chrono::steady_clock::now();

        std::vector<size_t> order(n_train);
        std::iota(order.begin(), order.end(), 0);
        RngStream shuffle_rng = RngStream(config.seed, kStreamShuffle).substream(epoch);
        shuffle_indices(order, shuffle_rng);

        double arc_sum = 0.0, center_sum = 0.0, ce_sum = 0.0;

        for (size_t batch_start = 0, batch_index = 0; batch_start < n_train;
             batch_start += config.batch_size, ++batch_index) {
            const size_t batch_n = std::min(config.batch_size, n_train - batch_start);

            // Assemble the batch: features + labels (+ CNN caches for images).
            // The whole step runs under one handler so a non-finite value in
            // the forward, the loss, the backward, or the optimizer's
            // gradient check aborts with the epoch/batch diagnostic.
            Tensor features({batch_n, feature_dim});
            LabelBatch labels(batch_n);
            std::vector<CnnCache> cnn_caches(image_data ? batch_n : 0);
            double batch_arc = 0.0, batch_center = 0.0, batch_ce = 0.0;
            try {
                for (size_t b = 0; b < batch_n; ++b) {
                    const size_t idx = order[batch_start + b];
                    const Sample& sample = data.train.samples[idx];
                    labels[b] = sample.label;
                    Tensor feat;
                    if (image_data) {
                        RngStream aug_stream =
                            RngStream(config.seed, kStreamAugment).substream(epoch, idx);
                        Tensor img = augment(sample.input, config.augment, aug_stream);
                        img = resize_bilinear(img, config.cnn_input_size, config.cnn_input_size);
                        feat = cnn_forward(img, state.model.extractor.cnn, &cnn_caches[b]);
                    } else {
                        feat = extract_features(sample.input, state.model.extractor, Mode::Train);
                    }
                    for (size_t j = 0; j < feature_dim; ++j) features.at(b, j) = feat[j];
                }

                RngStream dropout_rng =
                    RngStream(config.seed, kStreamDropout).substream(epoch, batch_index);
                MlpCache mlp_cache;
                Tensor embeddings =
                    mlp_forward(features, state.model.mlp, Mode::Train, dropout_rng, &mlp_cache);

                Tensor grad_embeddings;
                Tensor grad_wc, grad_bc, grad_arc_w;
                switch (config.loss_mode) {
                    case LossMode::CrossEntropy: {
                        Tensor logits = classify(embeddings, state.model.classifier);
                        LossOutput ce = cross_entropy(logits, labels);
                        batch_ce = ce.loss;
                        ClassifierGrads cg = classify_backward(ce.grad_logits,
                                                               state.model.classifier,
                                                               embeddings);
                        grad_embeddings = std::move(cg.input);
                        grad_wc = std::move(cg.wc);
                        grad_bc = std::move(cg.bc);
                        break;
                    }
                    case LossMode::Center: {
                        LossOutput c = center_loss(embeddings, state.centers, labels);
                        batch_center = c.loss;
                        grad_embeddings = std::move(c.grad_embeddings);
                        break;
                    }
                    case LossMode::Arc: {
                        LossOutput arc = arcface_loss(embeddings, state.model.arc_weights,
                                                      labels, arc_params);
                        batch_arc = arc.loss;
                        grad_embeddings = std::move(arc.grad_embeddings);
                        grad_arc_w = std::move(arc.grad_weights);
                        break;
                    }
                    case LossMode::ArcCenter: {
                        LossOutput arc = arcface_loss(embeddings, state.model.arc_weights,
                                                      labels, arc_params);
                        LossOutput c = center_loss(embeddings, state.centers, labels);
                        batch_arc = arc.loss;
                        batch_center = c.loss;
                        grad_embeddings = std::move(arc.grad_embeddings);
                        append_grad_rows(grad_embeddings, c.grad_embeddings, dual_cfg.alpha);
                        grad_arc_w = std::move(arc.grad_weights);
                        break;
                    }
                }

                MlpGrads mlp_grads = mlp_backward(grad_embeddings, state.model.mlp, mlp_cache);

                std::vector<Tensor> grads;
                if (image_data) {
                    ConvLayer g1{Tensor::zeros(state.model.extractor.cnn.conv1.weight.shape()),
                                 Tensor::zeros(state.model.extractor.cnn.conv1.bias.shape())};
                    ConvLayer g2{Tensor::zeros(state.model.extractor.cnn.conv2.weight.shape()),
                                 Tensor::zeros(state.model.extractor.cnn.conv2.bias.shape())};
                    ConvLayer g3{Tensor::zeros(state.model.extractor.cnn.conv3.weight.shape()),
                                 Tensor::zeros(state.model.extractor.cnn.conv3.bias.shape())};
                    for (size_t b = 0; b < batch_n; ++b) {
                        Tensor row({feature_dim});
                        for (size_t j = 0; j < feature_dim; ++j) row[j] = mlp_grads.input.at(b, j);
                        CnnGrads cg = cnn_backward(row, state.model.extractor.cnn, cnn_caches[b]);
                        append_grad_rows(g1.weight, cg.conv1.weight, 1.0);
                        append_grad_rows(g1.bias, cg.conv1.bias, 1.0);
                        append_grad_rows(g2.weight, cg.conv2.weight, 1.0);
                        append_grad_rows(g2.bias, cg.conv2.bias, 1.0);
                        append_grad_rows(g3.weight, cg.conv3.weight, 1.0);
                        append_grad_rows(g3.bias, cg.conv3.bias, 1.0);
                    }
                    grads.push_back(std::move(g1.weight));
                    grads.push_back(std::move(g1.bias));
                    grads.push_back(std::move(g2.weight));
                    grads.push_back(std::move(g2.bias));
                    grads.push_back(std::move(g3.weight));
                    grads.push_back(std::move(g3.bias));
                }
                grads.push_back(std::move(mlp_grads.w1));
                grads.push_back(std::move(mlp_grads.b1));
                grads.push_back(std::move(mlp_grads.w2));
                grads.push_back(std::move(mlp_grads.b2));
                if (config.loss_mode == LossMode::CrossEntropy) {
                    grads.push_back(std::move(grad_wc));
                    grads.push_back(std::move(grad_bc));
                } else if (arc_active(config.loss_mode)) {
                    grads.push_back(std::move(grad_arc_w));
                }

                adamw_step(params, grads, state.opt);

                if (center_active(config.loss_mode))
                    update_centers(state.centers, embeddings, labels);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::Numeric) throw;
                char msg[256];
                std::snprintf(msg, sizeof(msg),
                              "non-finite value at epoch %zu batch %zu "
                              "(arc=%g center=%g ce=%g): %s",
                              epoch + 1, batch_index, batch_arc, batch_center, batch_ce,
                              e.what());
                raise(ErrorKind::Numeric, msg);
            }

            const double w = static_cast<double>(batch_n);
            arc_sum += w * batch_arc;
            center_sum += w * batch_center;
            ce_sum += w * batch_ce;
        }

        state.epoch = epoch + 1;

        EpochRecord record;
        record.epoch = epoch + 1;
        const double n = static_cast<double>(n_train);
        record.loss_arc = arc_sum / n;
        record.loss_center = center_sum / n;
        record.loss_ce = ce_sum / n;
        switch (config.loss_mode) {
            case LossMode::CrossEntropy: record.loss_total = record.loss_ce; break;
            case LossMode::Center: record.loss_total = record.loss_center; break;
            case LossMode::Arc: record.loss_total = record.loss_arc; break;
            case LossMode::ArcCenter:
                record.loss_total = record.loss_arc + config.alpha * record.loss_center;
                break;
        }

        const bool eval_now = !data.validation.samples.empty() &&
                              ((epoch + 1) % config.eval_every == 0 ||
                               epoch + 1 == config.epochs);
        if (eval_now) {
            record.val_accuracy = evaluate(state, data.validation).second.accuracy;
            if (record.val_accuracy > state.best_val_accuracy) {
                state.best_val_accuracy = record.val_accuracy;
                state.best_epoch = epoch + 1;
                result.best = state;
                have_best = true;
            }
        }

        record.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_start)
                .count();
        result.log.records.push_back(record);
        if (on_epoch) on_epoch(record);
    }

    result.final_state = state;
    if (!have_best) result.best = state;
    return result;
}

Tensor compute_embeddings(const Checkpoint& ckpt, const DatasetSplit& split) {
    if (split.samples.empty()) raise(ErrorKind::Data, "empty split");
    const size_t n = split.samples.size();
    const size_t feature_dim = ckpt.model.extractor.kind == ExtractorKind::SmallCnn
                                   ? SmallCnn::kFeatureDim
                                   : ckpt.model.extractor.feature_dim;
    Tensor features({n, feature_dim});
    for (size_t i = 0; i < n; ++i) {
        Tensor f = eval_features(split.samples[i], ckpt.model, ckpt.config);
        if (f.size() != feature_dim)
            raise(ErrorKind::Dimension, "feature dim mismatch for " + split.samples[i].source_id);
        for (size_t j = 0; j < feature_dim; ++j) features.at(i, j) = f[j];
    }
    RngStream unused(0, 0);
    return mlp_forward(features, ckpt.model.mlp, Mode::Eval, unused);
}

std::pair<ConfusionMatrix, MetricsReport> evaluate(const Checkpoint& ckpt,
                                                   const DatasetSplit& split) {
    if (split.class_count() != ckpt.class_names.size())
        raise(ErrorKind::Data, "class count mismatch: checkpoint has " +
                                   std::to_string(ckpt.class_names.size()) + ", split has " +
                                   std::to_string(split.class_count()));
    Tensor embeddings = compute_embeddings(ckpt, split);
    Tensor logits = arc_active(ckpt.config.loss_mode)
                        ? cosine_logits(embeddings, ckpt.model.arc_weights, ckpt.config.scale)
                        : classify(embeddings, ckpt.model.classifier);

    ConfusionMatrix cm(ckpt.class_names.size());
    for (size_t i = 0; i < split.samples.size(); ++i) {
        const uint32_t label = split.samples[i].label;
        if (label >= cm.classes)
            raise(ErrorKind::Label, "label out of range in " + split.samples[i].source_id);
        cm.at(label, argmax_lowest(logits.row(i))) += 1;
    }
    return {cm, metrics_from_confusion(cm)};
}

EmbeddingStats embedding_stats(const Checkpoint& ckpt, const DatasetSplit& split) {
    Tensor embeddings = compute_embeddings(ckpt, split);
    const size_t n = embeddings.extent(0), d = embeddings.extent(1);
    const size_t classes = ckpt.class_names.size();

    EmbeddingStats stats;
    stats.class_means.assign(classes, Tensor({d}));
    stats.class_variance.assign(classes, 0.0);
    stats.class_counts.assign(classes, 0);

    // Normalize rows; collapsed embeddings are skipped with a note.
    std::vector<bool> usable(n, true);
    Tensor unit({n, d});
    size_t skipped = 0;
    for (size_t i = 0; i < n; ++i) {
        const double norm = l2_norm(embeddings.row(i));
        if (norm < eps_norm()) {
            usable[i] = false;
            ++skipped;
            continue;
        }
        for (size_t j = 0; j < d; ++j) unit.at(i, j) = embeddings.at(i, j) / norm;
    }
    if (skipped > 0)
        stats.notes.push_back(std::to_string(skipped) +
                              " samples with degenerate embeddings skipped");

    for (size_t i = 0; i < n; ++i) {
        if (!usable[i]) continue;
        const uint32_t label = split.samples[i].label;
        stats.class_counts[label] += 1;
        for (size_t j = 0; j < d; ++j) stats.class_means[label][j] += unit.at(i, j);
    }
    for (size_t k = 0; k < classes; ++k) {
        if (stats.class_counts[k] == 0) {
            stats.notes.push_back("class " + ckpt.class_names[k] + " has no samples");
            continue;
        }
        for (size_t j = 0; j < d; ++j)
            stats.class_means[k][j] /= static_cast<double>(stats.class_counts[k]);
    }

    double pooled = 0.0;
    size_t pooled_n = 0;
    for (size_t i = 0; i < n; ++i) {
        if (!usable[i]) continue;
        const uint32_t label = split.samples[i].label;
        double dist2 = 0.0;
        for (size_t j = 0; j < d; ++j) {
            const double diff = unit.at(i, j) - stats.class_means[label][j];
            dist2 += diff * diff;
        }
        stats.class_variance[label] += dist2;
        pooled += dist2;
        pooled_n += 1;
    }
    for (size_t k = 0; k < classes; ++k)
        if (stats.class_counts[k] > 0)
            stats.class_variance[k] /= static_cast<double>(stats.class_counts[k]);
    stats.pooled_variance = pooled_n > 0 ? pooled / static_cast<double>(pooled_n) : 0.0;

    // Minimum pairwise angle between class mean directions.
    double min_angle = 3.141592653589793238462643383279;
    bool any_pair = false;
    for (size_t a = 0; a < classes; ++a) {
        if (stats.class_counts[a] == 0) continue;
        const double na = l2_norm(stats.class_means[a].values());
        if (na < eps_norm()) continue;
        for (size_t b = a + 1; b < classes; ++b) {
            if (stats.class_counts[b] == 0) continue;
            const double nb = l2_norm(stats.class_means[b].values());
            if (nb < eps_norm()) continue;
            double cos_ab = dot(stats.class_means[a].values(), stats.class_means[b].values()) /
                            (na * nb);
            cos_ab = cos_ab > 1.0 ? 1.0 : (cos_ab < -1.0 ? -1.0 : cos_ab);
            min_angle = std::min(min_angle, std::acos(cos_ab));
            any_pair = true;
        }
    }
    stats.min_inter_class_angle = any_pair ? min_angle : 0.0;
    return stats;
}

std::vector<AblationRow> run_ablation(const TrainConfig& base, const DatasetSplits& data) {
    const LossMode modes[4] = {LossMode::CrossEntropy, LossMode::Center, LossMode::Arc,
                               LossMode::ArcCenter};
    std::vector<AblationRow> rows;
    for (LossMode mode : modes) {
        TrainConfig cfg = base;
        cfg.loss_mode = mode;
        TrainResult result = train(cfg, data);
        rows.push_back({mode, evaluate(result.best, data.test).second});
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "mode,precision,recall,f1,accuracy\n";
    char line[160];
    for (const AblationRow& row : rows) {
        std::snprintf(line, sizeof(line), "%s,%.2f,%.2f,%.2f,%.2f\n",
                      loss_mode_name(row.mode), 100.0 * row.metrics.macro_precision,
                      100.0 * row.metrics.macro_recall, 100.0 * row.metrics.macro_f1,
                      100.0 * row.metrics.accuracy);
        os << line;
    }
    return os.str();
}

std::string train_log_lines(const TrainLog& log) {
    std::ostringstream os;
    char line[512];
    for (const EpochRecord& r : log.records) {
        std::snprintf(line, sizeof(line),
                      "epoch=%zu loss_total=%.17g loss_arc=%.17g loss_center=%.17g "
                      "loss_ce=%.17g val_acc=%.17g wall_s=%.3f\n",
                      r.epoch, r.loss_total, r.loss_arc, r.loss_center, r.loss_ce,
                      r.val_accuracy, r.wall_seconds);
        os << line;
    }
    return os.str();
}

}  // namespace fgml
