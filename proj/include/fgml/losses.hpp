#pragma once

#include <cstdint>
#include <vector>

#include "fgml/tensor.hpp"

namespace fgml {

using LabelBatch = std::vector<uint32_t>;

// Additive-angular-margin parameters: logits are s * cos(theta + m) on the
// target class and s * cos(theta) elsewhere.
struct ArcFaceParams {
    double scale = 30.0;   // s
    double margin = 0.5;   // m, radians in [0, pi)

    void validate() const;
};

// Per-class centroids for the center loss. Centers are running state owned by
// the training loop (single writer), never optimizer parameters. Zero-init.
struct ClassCenters {
    Tensor centers;            // C x D
    double update_rate = 0.5;  // beta in (0, 1]

    ClassCenters() = default;
    ClassCenters(size_t classes, size_t dim, double beta);

    size_t class_count() const { return centers.extent(0); }
    size_t dim() const { return centers.extent(1); }
};

// Scalar loss plus gradients with respect to every differentiable input the
// operation touches; unused gradients stay empty.
struct LossOutput {
    double loss = 0.0;
    Tensor grad_embeddings;  // N x D
    Tensor grad_weights;     // C x D
    Tensor grad_logits;      // N x C
};

struct DualLossConfig {
    double alpha = 0.5;  // center-loss weight, >= 0

    void validate() const;
};

// Mean negative log-likelihood over rows; grad_logits = (softmax - onehot)/N.
LossOutput cross_entropy(const Tensor& logits, const LabelBatch& labels);

// Margin-modified cosine logits. Embedding rows and weight rows are
// L2-normalized internally; cosines are clamped to [-1+1e-7, 1-1e-7]; the
// target entry becomes cos(theta+m), falling back to cos(theta) - m*sin(m)
// once theta + m would pass pi; everything is scaled by s.
Tensor arcface_logits(const Tensor& embeddings, const Tensor& weights,
                      const LabelBatch& labels, const ArcFaceParams& params);

// Cross-entropy over arcface_logits with analytic gradients through the
// normalization and both margin branches.
LossOutput arcface_loss(const Tensor& embeddings, const Tensor& weights,
                        const LabelBatch& labels, const ArcFaceParams& params);

// Mean squared distance to class centers; centers are constants here.
LossOutput center_loss(const Tensor& embeddings, const ClassCenters& centers,
                       const LabelBatch& labels);

// Damped-mean center update: delta_k = sum_{y_i=k}(c_k - e_i) / (1 + n_k),
// c_k -= beta * delta_k. Classes absent from the batch are untouched.
void update_centers(ClassCenters& centers, const Tensor& embeddings,
                    const LabelBatch& labels);

// L_total = L_arc + alpha * L_center, gradients summed accordingly.
LossOutput dual_loss(const Tensor& embeddings, const Tensor& weights,
                     const LabelBatch& labels, const ArcFaceParams& params,
                     const ClassCenters& centers, const DualLossConfig& config);

// Cosine threshold below which the margin fallback branch engages.
double arcface_fallback_threshold(double margin);

}  // namespace fgml
