#pragma once

#include <utility>
#include <vector>

#include "fgml/optim.hpp"
#include "fgml/rng.hpp"
#include "fgml/tensor.hpp"

namespace fgml {

enum class Mode { Train, Eval };

// Two-layer embedding head: h1 = ReLU(W1 x + b1), inverted dropout, then
// e = ReLU(W2 h~ + b2). The final ReLU can be disabled for experiments.
struct MlpHead {
    Tensor w1;  // hidden x F
    Tensor b1;  // hidden
    Tensor w2;  // D x hidden
    Tensor b2;  // D
    double dropout = 0.5;
    bool final_relu = true;

    size_t feature_dim() const { return w1.extent(1); }
    size_t hidden_dim() const { return w1.extent(0); }
    size_t embedding_dim() const { return w2.extent(0); }
};

struct MlpCache {
    Tensor input;       // N x F
    Tensor h1_pre;      // N x hidden
    Tensor h1_dropped;  // N x hidden, after ReLU and mask
    Tensor mask;        // N x hidden scaled keep mask; empty in eval mode
    Tensor e_pre;       // N x D
};

// Batch forward; meaningful per-sample use is a 1 x F input. Train mode draws
// the dropout mask row-major from `rng` and scales kept units by 1/(1-p);
// eval mode is deterministic and ignores the stream.
Tensor mlp_forward(const Tensor& x, const MlpHead& head, Mode mode, RngStream& rng,
                   MlpCache* cache = nullptr);

struct MlpGrads {
    Tensor w1, b1, w2, b2;
    Tensor input;  // N x F
};

MlpGrads mlp_backward(const Tensor& grad_embeddings, const MlpHead& head,
                      const MlpCache& cache);

// 3x3 convolution, stride 1, zero padding 1.
struct ConvLayer {
    Tensor weight;  // out x in x 3 x 3
    Tensor bias;    // out
};

// Substitute backbone: three conv/ReLU/2x2-maxpool blocks with channels
// 3 -> 8 -> 16 -> 32, then a global average pool to a 32-vector.
struct SmallCnn {
    static constexpr size_t kFeatureDim = 32;
    ConvLayer conv1;  // 8 x 3
    ConvLayer conv2;  // 16 x 8
    ConvLayer conv3;  // 32 x 16
};

struct CnnCache {
    Tensor block_input[3];    // input of each conv
    Tensor conv_pre[3];       // pre-ReLU conv output
    std::vector<size_t> pool_argmax[3];  // winner flat index per pooled cell
    std::vector<size_t> pool_shape[3];   // pooled C,H,W
    Tensor pooled_out;        // output of block 3 (input of the GAP)
};

Tensor cnn_forward(const Tensor& image, const SmallCnn& cnn, CnnCache* cache = nullptr);

struct CnnGrads {
    ConvLayer conv1, conv2, conv3;  // same shapes, gradient values
    Tensor input;                   // 3 x H x W
};

CnnGrads cnn_backward(const Tensor& grad_features, const SmallCnn& cnn,
                      const CnnCache& cache);

// Channel-wise mean over all spatial positions of a C x H x W map.
Tensor global_avg_pool(const Tensor& x);

enum class ExtractorKind { SmallCnn, Precomputed, Identity };

struct FeatureExtractor {
    ExtractorKind kind = ExtractorKind::Precomputed;
    SmallCnn cnn;            // populated when kind == SmallCnn
    size_t feature_dim = SmallCnn::kFeatureDim;
};

// Image inputs (3 x H x W) run through the CNN; feature inputs (rank 1) pass
// through after a dimension check.
Tensor extract_features(const Tensor& x, const FeatureExtractor& extractor, Mode mode,
                        CnnCache* cache = nullptr);

// Affine logits head z = Wc e + bc, used on the plain cross-entropy path.
struct ClassifierHead {
    Tensor wc;  // C x D
    Tensor bc;  // C
};

Tensor classify(const Tensor& embeddings, const ClassifierHead& head);

struct ClassifierGrads {
    Tensor wc, bc;
    Tensor input;  // N x D
};

ClassifierGrads classify_backward(const Tensor& grad_logits, const ClassifierHead& head,
                                  const Tensor& embeddings);

// He-style initialization: weights ~ Normal(0, sqrt(2/fan_in)), biases zero.
Tensor he_normal(std::vector<size_t> shape, size_t fan_in, RngStream& rng);
MlpHead init_mlp(size_t feature_dim, size_t hidden_dim, size_t embedding_dim,
                 double dropout, bool final_relu, RngStream rng);
SmallCnn init_small_cnn(RngStream rng);
ClassifierHead init_classifier(size_t classes, size_t embedding_dim, RngStream rng);
Tensor init_arc_weights(size_t classes, size_t embedding_dim, RngStream rng);

// Full parameter set of the embedding pipeline.
struct Model {
    FeatureExtractor extractor;
    MlpHead mlp;
    ClassifierHead classifier;
    Tensor arc_weights;  // C x D, no bias by construction
};

// Named references to every parameter tensor; biases are flagged no-decay.
std::vector<ParamRef> model_parameters(Model& model);

// Read-only view of the same tensors, in the same order (serialization).
std::vector<std::pair<std::string, const Tensor*>> named_model_tensors(const Model& model);

}  // namespace fgml
