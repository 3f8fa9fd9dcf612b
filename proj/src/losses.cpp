#include "fgml/losses.hpp"

#include <cmath>

#include "fgml/error.hpp"

namespace fgml {

namespace {

constexpr double kCosClamp = 1e-7;
constexpr double kPi = 3.141592653589793238462643383279;

void check_labels(const LabelBatch& labels, size_t batch, size_t classes) {
    if (labels.size() != batch)
        raise(ErrorKind::Dimension, "label count does not match batch size");
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes)
            raise(ErrorKind::Label, "label " + std::to_string(labels[i]) + " at row " +
                                        std::to_string(i) + " out of range [0, " +
                                        std::to_string(classes) + ")");
    }
}

// Normalized rows plus their original norms; rejects degenerate rows.
struct NormalizedRows {
    Tensor unit;               // same shape as input
    std::vector<double> norm;  // per row
};

NormalizedRows normalize_rows(const Tensor& x, const char* what) {
    const size_t rows = x.extent(0), cols = x.extent(1);
    NormalizedRows out{Tensor({rows, cols}), std::vector<double>(rows)};
    for (size_t r = 0; r < rows; ++r) {
        const double n = l2_norm(x.row(r));
        if (n < eps_norm())
            raise(ErrorKind::Degenerate, std::string(what) + " row " + std::to_string(r) +
                                             " has near-zero norm");
        out.norm[r] = n;
        for (size_t c = 0; c < cols; ++c) out.unit.at(r, c) = x.at(r, c) / n;
    }
    return out;
}

double clamp_cos(double c) {
    if (c > 1.0 - kCosClamp) return 1.0 - kCosClamp;
    if (c < -1.0 + kCosClamp) return -1.0 + kCosClamp;
    return c;
}

// Shared forward state for arcface_logits / arcface_loss.
struct ArcForward {
    NormalizedRows emb;
    NormalizedRows wgt;
    Tensor cosines;   // N x C, clamped
    Tensor logits;    // N x C, margin applied and scaled
};

ArcForward arc_forward(const Tensor& embeddings, const Tensor& weights,
                       const LabelBatch& labels, const ArcFaceParams& params) {
    if (embeddings.rank() != 2 || weights.rank() != 2)
        raise(ErrorKind::Dimension, "arcface expects rank-2 embeddings and weights");
    if (embeddings.extent(1) != weights.extent(1))
        raise(ErrorKind::Dimension, "arcface embedding dim " + embeddings.shape_str() +
                                        " does not match weights " + weights.shape_str());
    params.validate();
    const size_t n = embeddings.extent(0), c = weights.extent(0);
    check_labels(labels, n, c);

    ArcForward fwd{normalize_rows(embeddings, "embedding"),
                   normalize_rows(weights, "weight"), Tensor({n, c}), Tensor({n, c})};

    const double cos_m = std::cos(params.margin);
    const double sin_m = std::sin(params.margin);
    const double fallback_bias = params.margin * sin_m;
    const double threshold = arcface_fallback_threshold(params.margin);

    for (size_t i = 0; i < n; ++i) {
        for (size_t k = 0; k < c; ++k) {
            const double cos_t = clamp_cos(dot(fwd.emb.unit.row(i), fwd.wgt.unit.row(k)));
            fwd.cosines.at(i, k) = cos_t;
            double z = cos_t;
            if (k == labels[i]) {
                if (cos_t > threshold) {
                    z = cos_t * cos_m - std::sqrt(1.0 - cos_t * cos_t) * sin_m;
                } else {
                    z = cos_t - fallback_bias;
                }
            }
            fwd.logits.at(i, k) = params.scale * z;
        }
    }
    check_finite(fwd.logits, "arcface_logits");
    return fwd;
}

}  // namespace

void ArcFaceParams::validate() const {
    if (!(scale > 0.0)) raise(ErrorKind::Parameter, "arcface scale must be positive");
    if (!(margin >= 0.0 && margin < kPi))
        raise(ErrorKind::Parameter, "arcface margin must lie in [0, pi)");
}

void DualLossConfig::validate() const {
    if (!(alpha >= 0.0)) raise(ErrorKind::Parameter, "dual-loss alpha must be >= 0");
}

ClassCenters::ClassCenters(size_t classes, size_t dim, double beta)
    : centers({classes, dim}), update_rate(beta) {
    if (!(beta > 0.0 && beta <= 1.0))
        raise(ErrorKind::Parameter, "center update rate must lie in (0, 1]");
}

double arcface_fallback_threshold(double margin) { return std::cos(kPi - margin); }

LossOutput cross_entropy(const Tensor& logits, const LabelBatch& labels) {
    if (logits.rank() != 2) raise(ErrorKind::Dimension, "cross_entropy expects N x C logits");
    const size_t n = logits.extent(0), c = logits.extent(1);
    check_labels(labels, n, c);
    check_finite(logits, "cross_entropy input");

    LossOutput out;
    out.grad_logits = Tensor({n, c});
    double total = 0.0;
    std::vector<double> scratch(c);
    for (size_t i = 0; i < n; ++i) {
        auto row = logits.row(i);
        for (size_t k = 0; k < c; ++k) scratch[k] = row[k];
        log_softmax_row(scratch);
        total += -scratch[labels[i]];
        for (size_t k = 0; k < c; ++k) {
            const double softmax = std::exp(scratch[k]);
            out.grad_logits.at(i, k) =
                (softmax - (k == labels[i] ? 1.0 : 0.0)) / static_cast<double>(n);
        }
    }
    out.loss = total / static_cast<double>(n);
    check_finite(out.grad_logits, "cross_entropy grad");
    return out;
}

Tensor arcface_logits(const Tensor& embeddings, const Tensor& weights,
                      const LabelBatch& labels, const ArcFaceParams& params) {
    return arc_forward(embeddings, weights, labels, params).logits;
}

LossOutput arcface_loss(const Tensor& embeddings, const Tensor& weights,
                        const LabelBatch& labels, const ArcFaceParams& params) {
    const ArcForward fwd = arc_forward(embeddings, weights, labels, params);
    const size_t n = embeddings.extent(0), c = weights.extent(0), d = embeddings.extent(1);

    LossOutput ce = cross_entropy(fwd.logits, labels);

    const double cos_m = std::cos(params.margin);
    const double sin_m = std::sin(params.margin);
    const double threshold = arcface_fallback_threshold(params.margin);

    LossOutput out;
    out.loss = ce.loss;
    out.grad_embeddings = Tensor({n, d});
    out.grad_weights = Tensor({c, d});

    // Chain rule: dL/dcos = dL/dlogit * s * dz'/dcos, then through the row
    // normalizations  dcos/de = (w_hat - cos * e_hat) / |e|  and symmetrically
    // for the weight rows.
    for (size_t i = 0; i < n; ++i) {
        auto e_hat = fwd.emb.unit.row(i);
        const double e_norm = fwd.emb.norm[i];
        for (size_t k = 0; k < c; ++k) {
            const double cos_t = fwd.cosines.at(i, k);
            double dz_dcos = 1.0;
            if (k == labels[i] && cos_t > threshold) {
                const double sin_t = std::sqrt(1.0 - cos_t * cos_t);
                dz_dcos = cos_m + cos_t * sin_m / sin_t;
            }
            const double g_cos = ce.grad_logits.at(i, k) * params.scale * dz_dcos;
            if (g_cos == 0.0) continue;
            auto w_hat = fwd.wgt.unit.row(k);
            const double w_norm = fwd.wgt.norm[k];
            for (size_t j = 0; j < d; ++j) {
                out.grad_embeddings.at(i, j) +=
                    g_cos * (w_hat[j] - cos_t * e_hat[j]) / e_norm;
                out.grad_weights.at(k, j) +=
                    g_cos * (e_hat[j] - cos_t * w_hat[j]) / w_norm;
            }
        }
    }
    check_finite(out.grad_embeddings, "arcface grad_embeddings");
    check_finite(out.grad_weights, "arcface grad_weights");
    return out;
}

LossOutput center_loss(const Tensor& embeddings, const ClassCenters& centers,
                       const LabelBatch& labels) {
    if (embeddings.rank() != 2)
        raise(ErrorKind::Dimension, "center_loss expects N x D embeddings");
    if (embeddings.extent(1) != centers.dim())
        raise(ErrorKind::Dimension, "center_loss embedding dim does not match centers");
    const size_t n = embeddings.extent(0), d = embeddings.extent(1);
    check_labels(labels, n, centers.class_count());
    check_finite(embeddings, "center_loss input");

    LossOutput out;
    out.grad_embeddings = Tensor({n, d});
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        auto e = embeddings.row(i);
        auto c = centers.centers.row(labels[i]);
        for (size_t j = 0; j < d; ++j) {
            const double diff = e[j] - c[j];
            total += diff * diff;
            out.grad_embeddings.at(i, j) = 2.0 * diff / static_cast<double>(n);
        }
    }
    out.loss = total / static_cast<double>(n);
    return out;
}

void update_centers(ClassCenters& centers, const Tensor& embeddings,
                    const LabelBatch& labels) {
    const size_t n = embeddings.extent(0), d = embeddings.extent(1);
    if (d != centers.dim())
        raise(ErrorKind::Dimension, "update_centers embedding dim does not match centers");
    check_labels(labels, n, centers.class_count());
    check_finite(embeddings, "update_centers input");

    const size_t c = centers.class_count();
    Tensor delta({c, d});
    std::vector<size_t> counts(c, 0);
    for (size_t i = 0; i < n; ++i) {
        counts[labels[i]] += 1;
        auto e = embeddings.row(i);
        auto ctr = centers.centers.row(labels[i]);
        for (size_t j = 0; j < d; ++j) delta.at(labels[i], j) += ctr[j] - e[j];
    }
    for (size_t k = 0; k < c; ++k) {
        if (counts[k] == 0) continue;
        const double damping = 1.0 + static_cast<double>(counts[k]);
        for (size_t j = 0; j < d; ++j)
            centers.centers.at(k, j) -= centers.update_rate * delta.at(k, j) / damping;
    }
    check_finite(centers.centers, "update_centers");
}

LossOutput dual_loss(const Tensor& embeddings, const Tensor& weights,
                     const LabelBatch& labels, const ArcFaceParams& params,
                     const ClassCenters& centers, const DualLossConfig& config) {
    config.validate();
    LossOutput arc = arcface_loss(embeddings, weights, labels, params);
    LossOutput center = center_loss(embeddings, centers, labels);

    LossOutput out;
    out.loss = arc.loss + config.alpha * center.loss;
    out.grad_embeddings = std::move(arc.grad_embeddings);
    for (size_t i = 0; i < out.grad_embeddings.size(); ++i)
        out.grad_embeddings[i] += config.alpha * center.grad_embeddings[i];
    out.grad_weights = std::move(arc.grad_weights);
    return out;
}

}  // namespace fgml
