#include "fgml/gradcheck_suite.hpp"

#include <cmath>

#include "fgml/error.hpp"
#include "fgml/losses.hpp"
#include "fgml/model.hpp"
#include "fgml/optim.hpp"
#include "fgml/rng.hpp"

namespace fgml {

namespace {

constexpr double kKinkGuard = 1e-3;   // min |pre-activation| for fd-safe ReLU
constexpr double kSwitchGuard = 1e-3; // exclusion band around the margin fallback
constexpr size_t kMaxResamples = 200;

Tensor random_tensor(std::vector<size_t> shape, RngStream& rng, double std_dev = 1.0) {
    Tensor t(std::move(shape));
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, std_dev);
    return t;
}

LabelBatch random_labels(size_t n, size_t classes, RngStream& rng) {
    LabelBatch labels(n);
    for (size_t i = 0; i < n; ++i) labels[i] = static_cast<uint32_t>(rng.below(classes));
    return labels;
}

std::vector<double> concat(std::initializer_list<const Tensor*> tensors) {
    std::vector<double> out;
    for (const Tensor* t : tensors)
        out.insert(out.end(), t->values().begin(), t->values().end());
    return out;
}

void split_into(std::span<const double> flat, std::initializer_list<Tensor*> tensors) {
    size_t pos = 0;
    for (Tensor* t : tensors) {
        for (size_t i = 0; i < t->size(); ++i) (*t)[i] = flat[pos + i];
        pos += t->size();
    }
}

// True when any target cosine sits inside the exclusion band around the
// margin-branch switch, or too close to +-1 for a stable sin(theta).
bool near_margin_switch(const Tensor& embeddings, const Tensor& weights,
                        const LabelBatch& labels, double margin) {
    const double threshold = arcface_fallback_threshold(margin);
    for (size_t i = 0; i < embeddings.extent(0); ++i) {
        const double en = l2_norm(embeddings.row(i));
        const double wn = l2_norm(weights.row(labels[i]));
        if (en < 1e-3 || wn < 1e-3) return true;
        const double cos_t = dot(embeddings.row(i), weights.row(labels[i])) / (en * wn);
        if (std::fabs(cos_t - threshold) < kSwitchGuard) return true;
        if (std::fabs(cos_t) > 0.999) return true;
    }
    return false;
}

bool inside_kink_band(const Tensor& pre) {
    for (double v : pre.values())
        if (std::fabs(v) < kKinkGuard) return true;
    return false;
}

// A 2x2 max-pool window whose top two post-ReLU values nearly tie would flip
// its argmax under the fd perturbation; require a clear winner (or an
// all-dead window, which stays dead inside the kink guard band).
bool pool_ties_too_close(const Tensor& conv_pre) {
    const size_t c = conv_pre.extent(0), h = conv_pre.extent(1), w = conv_pre.extent(2);
    for (size_t ch = 0; ch < c; ++ch) {
        const double* plane = conv_pre.data() + ch * h * w;
        for (size_t y = 0; y + 1 < h; y += 2) {
            for (size_t x = 0; x + 1 < w; x += 2) {
                double top = 0.0, second = 0.0;
                const size_t idx[4] = {y * w + x, y * w + x + 1, (y + 1) * w + x,
                                       (y + 1) * w + x + 1};
                for (size_t i : idx) {
                    const double v = plane[i] > 0.0 ? plane[i] : 0.0;
                    if (v > top) {
                        second = top;
                        top = v;
                    } else if (v > second) {
                        second = v;
                    }
                }
                if (top > 0.0 && top - second < kKinkGuard) return true;
            }
        }
    }
    return false;
}

struct Acc {
    ComponentCheck check;

    void fold(const GradCheckReport& report, size_t coords) {
        check.instances += 1;
        check.coords_checked += coords;
        if (report.max_rel_error > check.max_rel_error)
            check.max_rel_error = report.max_rel_error;
    }
};

ComponentCheck check_cross_entropy(uint64_t seed, size_t trials, double h, double perturb) {
    Acc acc;
    acc.check.component = "ce";
    for (size_t t = 0; t < trials; ++t) {
        RngStream rng = RngStream(seed, 0xCE).substream(t);
        const size_t n = 1 + rng.below(8), c = 2 + rng.below(5);
        Tensor logits = random_tensor({n, c}, rng, 2.0);
        LabelBatch labels = random_labels(n, c, rng);

        LossOutput out = cross_entropy(logits, labels);
        std::vector<double> analytic(out.grad_logits.values().begin(),
                                     out.grad_logits.values().end());
        if (perturb != 0.0) analytic[0] += perturb;
        auto f = [&](std::span<const double> x) {
            Tensor l({n, c}, std::vector<double>(x.begin(), x.end()));
            return cross_entropy(l, labels).loss;
        };
        acc.fold(grad_check(f, logits.values(), analytic, h), logits.size());
    }
    return acc.check;
}

ComponentCheck check_arcface(uint64_t seed, size_t trials, double h, double perturb,
                             bool with_center) {
    Acc acc;
    acc.check.component = with_center ? "dual" : "arc";
    // Moderate scale: s = 30 saturates the softmax on random toy instances,
    // pushing gradient components below what central differences can resolve.
    const ArcFaceParams params{6.0, 0.5};
    const DualLossConfig dual_cfg{0.5};
    for (size_t t = 0; t < trials; ++t) {
        RngStream rng = RngStream(seed, with_center ? 0xD0A1 : 0xA21C).substream(t);
        const size_t n = 2 + rng.below(7), c = 2 + rng.below(5), d = 4 + rng.below(13);
        Tensor embeddings, weights;
        LabelBatch labels;
        size_t tries = 0;
        do {
            if (++tries > kMaxResamples)
                raise(ErrorKind::Numeric, "gradcheck: could not sample an arc instance");
            embeddings = random_tensor({n, d}, rng);
            weights = random_tensor({c, d}, rng);
            labels = random_labels(n, c, rng);
        } while (near_margin_switch(embeddings, weights, labels, params.margin));

        ClassCenters centers(c, d, 0.5);
        if (with_center) {
            for (size_t i = 0; i < centers.centers.size(); ++i)
                centers.centers[i] = rng.normal(0.0, 1.0);
        }

        LossOutput out = with_center
                             ? dual_loss(embeddings, weights, labels, params, centers, dual_cfg)
                             : arcface_loss(embeddings, weights, labels, params);
        std::vector<double> point = concat({&embeddings, &weights});
        std::vector<double> analytic = concat({&out.grad_embeddings, &out.grad_weights});
        if (perturb != 0.0) analytic[0] += perturb;

        auto f = [&](std::span<const double> x) {
            Tensor e({n, d}), w({c, d});
            split_into(x, {&e, &w});
            return with_center
                       ? dual_loss(e, w, labels, params, centers, dual_cfg).loss
                       : arcface_loss(e, w, labels, params).loss;
        };
        acc.fold(grad_check(f, point, analytic, h), point.size());
    }
    return acc.check;
}

ComponentCheck check_center(uint64_t seed, size_t trials, double h, double perturb) {
    Acc acc;
    acc.check.component = "center";
    for (size_t t = 0; t < trials; ++t) {
        RngStream rng = RngStream(seed, 0xCE27).substream(t);
        const size_t n = 1 + rng.below(8), c = 2 + rng.below(5), d = 4 + rng.below(13);
        Tensor embeddings = random_tensor({n, d}, rng);
        ClassCenters centers(c, d, 0.5);
        for (size_t i = 0; i < centers.centers.size(); ++i)
            centers.centers[i] = rng.normal(0.0, 1.0);
        LabelBatch labels = random_labels(n, c, rng);

        LossOutput out = center_loss(embeddings, centers, labels);
        std::vector<double> analytic(out.grad_embeddings.values().begin(),
                                     out.grad_embeddings.values().end());
        if (perturb != 0.0) analytic[0] += perturb;
        auto f = [&](std::span<const double> x) {
            Tensor e({n, d}, std::vector<double>(x.begin(), x.end()));
            return center_loss(e, centers, labels).loss;
        };
        acc.fold(grad_check(f, embeddings.values(), analytic, h), embeddings.size());
    }
    return acc.check;
}

ComponentCheck check_mlp(uint64_t seed, size_t trials, double h, double perturb) {
    Acc acc;
    acc.check.component = "mlp";
    const size_t feat = 8, hidden = 16, dim = 8;
    for (size_t t = 0; t < trials; ++t) {
        RngStream rng = RngStream(seed, 0x313C).substream(t);
        const size_t n = 1 + rng.below(4), c = 2 + rng.below(5);

        MlpHead head;
        Tensor input;
        LabelBatch labels;
        ClassifierHead cls;
        MlpCache cache;
        size_t tries = 0;
        for (;;) {
            if (++tries > kMaxResamples)
                raise(ErrorKind::Numeric, "gradcheck: could not sample an mlp instance");
            RngStream init = rng.substream(0xF0, tries);
            head = init_mlp(feat, hidden, dim, 0.0, true, init.substream(1));
            cls = init_classifier(c, dim, init.substream(2));
            input = random_tensor({n, feat}, init);
            labels = random_labels(n, c, init);
            RngStream unused(0, 0);
            mlp_forward(input, head, Mode::Eval, unused, &cache);
            if (!inside_kink_band(cache.h1_pre) && !inside_kink_band(cache.e_pre)) break;
        }

        RngStream unused(0, 0);
        Tensor embeddings = mlp_forward(input, head, Mode::Eval, unused, &cache);
        Tensor logits = classify(embeddings, cls);
        LossOutput ce = cross_entropy(logits, labels);
        ClassifierGrads cg = classify_backward(ce.grad_logits, cls, embeddings);
        MlpGrads grads = mlp_backward(cg.input, head, cache);

        std::vector<double> point = concat({&head.w1, &head.b1, &head.w2, &head.b2});
        std::vector<double> analytic = concat({&grads.w1, &grads.b1, &grads.w2, &grads.b2});
        if (perturb != 0.0) analytic[0] += perturb;

        auto f = [&](std::span<const double> x) {
            MlpHead trial = head;
            split_into(x, {&trial.w1, &trial.b1, &trial.w2, &trial.b2});
            RngStream r(0, 0);
            Tensor e = mlp_forward(input, trial, Mode::Eval, r);
            return cross_entropy(classify(e, cls), labels).loss;
        };
        acc.fold(grad_check(f, point, analytic, h), point.size());
    }
    return acc.check;
}

ComponentCheck check_cnn(uint64_t seed, size_t trials, double h, double perturb) {
    Acc acc;
    acc.check.component = "cnn";
    const size_t img_hw = 8, n = 2, hidden = 16, dim = 8;
    const ArcFaceParams params{6.0, 0.5};
    const DualLossConfig dual_cfg{0.5};
    for (size_t t = 0; t < trials; ++t) {
        RngStream rng = RngStream(seed, 0xC22).substream(t);
        const size_t c = 2 + rng.below(5);

        SmallCnn cnn;
        MlpHead head;
        Tensor arc_w;
        ClassCenters centers(c, dim, 0.5);
        std::vector<Tensor> images;
        LabelBatch labels;
        std::vector<CnnCache> caches(n);
        Tensor features({n, SmallCnn::kFeatureDim});
        MlpCache mlp_cache;
        Tensor embeddings;

        size_t tries = 0;
        for (;;) {
            if (++tries > kMaxResamples)
                raise(ErrorKind::Numeric, "gradcheck: could not sample a cnn instance");
            RngStream init = rng.substream(0xF1, tries);
            cnn = init_small_cnn(init.substream(1));
            head = init_mlp(SmallCnn::kFeatureDim, hidden, dim, 0.0, true, init.substream(2));
            arc_w = init_arc_weights(c, dim, init.substream(3));
            for (size_t i = 0; i < centers.centers.size(); ++i)
                centers.centers[i] = init.normal(0.0, 0.5);
            images.clear();
            for (size_t i = 0; i < n; ++i)
                images.push_back(random_tensor({3, img_hw, img_hw}, init, 0.5));
            labels = random_labels(n, c, init);

            bool kink = false;
            for (size_t i = 0; i < n; ++i) {
                Tensor f = cnn_forward(images[i], cnn, &caches[i]);
                for (size_t j = 0; j < f.size(); ++j) features.at(i, j) = f[j];
                for (int b = 0; b < 3 && !kink; ++b)
                    kink = inside_kink_band(caches[i].conv_pre[b]) ||
                           pool_ties_too_close(caches[i].conv_pre[b]);
                if (kink) break;
            }
            if (kink) continue;
            RngStream unused(0, 0);
            embeddings = mlp_forward(features, head, Mode::Eval, unused, &mlp_cache);
            if (inside_kink_band(mlp_cache.h1_pre) || inside_kink_band(mlp_cache.e_pre))
                continue;
            if (near_margin_switch(embeddings, arc_w, labels, params.margin)) continue;
            break;
        }

        LossOutput out = dual_loss(embeddings, arc_w, labels, params, centers, dual_cfg);
        MlpGrads mlp_grads = mlp_backward(out.grad_embeddings, head, mlp_cache);
        ConvLayer g1{Tensor::zeros(cnn.conv1.weight.shape()), Tensor::zeros(cnn.conv1.bias.shape())};
        ConvLayer g2{Tensor::zeros(cnn.conv2.weight.shape()), Tensor::zeros(cnn.conv2.bias.shape())};
        ConvLayer g3{Tensor::zeros(cnn.conv3.weight.shape()), Tensor::zeros(cnn.conv3.bias.shape())};
        for (size_t i = 0; i < n; ++i) {
            Tensor row({SmallCnn::kFeatureDim});
            for (size_t j = 0; j < row.size(); ++j) row[j] = mlp_grads.input.at(i, j);
            CnnGrads cg = cnn_backward(row, cnn, caches[i]);
            for (size_t j = 0; j < g1.weight.size(); ++j) g1.weight[j] += cg.conv1.weight[j];
            for (size_t j = 0; j < g1.bias.size(); ++j) g1.bias[j] += cg.conv1.bias[j];
            for (size_t j = 0; j < g2.weight.size(); ++j) g2.weight[j] += cg.conv2.weight[j];
            for (size_t j = 0; j < g2.bias.size(); ++j) g2.bias[j] += cg.conv2.bias[j];
            for (size_t j = 0; j < g3.weight.size(); ++j) g3.weight[j] += cg.conv3.weight[j];
            for (size_t j = 0; j < g3.bias.size(); ++j) g3.bias[j] += cg.conv3.bias[j];
        }

        std::vector<double> point = concat({&cnn.conv1.weight, &cnn.conv1.bias,
                                            &cnn.conv2.weight, &cnn.conv2.bias,
                                            &cnn.conv3.weight, &cnn.conv3.bias});
        std::vector<double> analytic = concat({&g1.weight, &g1.bias, &g2.weight, &g2.bias,
                                               &g3.weight, &g3.bias});
        if (perturb != 0.0) analytic[0] += perturb;

        // Subsample coordinates: all biases plus a seeded draw of the weights.
        const size_t w1 = cnn.conv1.weight.size(), b1 = cnn.conv1.bias.size();
        const size_t w2 = cnn.conv2.weight.size(), b2 = cnn.conv2.bias.size();
        const size_t w3 = cnn.conv3.weight.size();
        std::vector<size_t> coords;
        coords.push_back(0);  // keep the perturb hook observable
        for (size_t i = 0; i < b1; ++i) coords.push_back(w1 + i);
        for (size_t i = 0; i < b2; ++i) coords.push_back(w1 + b1 + w2 + i);
        for (size_t i = 0; i < cnn.conv3.bias.size(); ++i)
            coords.push_back(w1 + b1 + w2 + b2 + w3 + i);
        RngStream pick = rng.substream(0xC0);
        for (size_t i = 0; i < 96; ++i)
            coords.push_back(static_cast<size_t>(pick.below(point.size())));

        auto f = [&](std::span<const double> x) {
            SmallCnn trial = cnn;
            split_into(x, {&trial.conv1.weight, &trial.conv1.bias, &trial.conv2.weight,
                           &trial.conv2.bias, &trial.conv3.weight, &trial.conv3.bias});
            Tensor feats({n, SmallCnn::kFeatureDim});
            for (size_t i = 0; i < n; ++i) {
                Tensor fv = cnn_forward(images[i], trial);
                for (size_t j = 0; j < fv.size(); ++j) feats.at(i, j) = fv[j];
            }
            RngStream r(0, 0);
            Tensor e = mlp_forward(feats, head, Mode::Eval, r);
            return dual_loss(e, arc_w, labels, params, centers, dual_cfg).loss;
        };
        acc.fold(grad_check(f, point, analytic, h, coords), coords.size());
    }
    return acc.check;
}

}  // namespace

std::vector<ComponentCheck> run_gradcheck_suite(uint64_t seed, size_t trials, double h,
                                                double perturb) {
    if (trials == 0) raise(ErrorKind::Parameter, "gradcheck needs at least one trial");
    std::vector<ComponentCheck> checks;
    checks.push_back(check_cross_entropy(seed, trials, h, perturb));
    checks.push_back(check_arcface(seed, trials, h, perturb, false));
    checks.push_back(check_center(seed, trials, h, perturb));
    checks.push_back(check_arcface(seed, trials, h, perturb, true));
    checks.push_back(check_mlp(seed, trials, h, perturb));
    checks.push_back(check_cnn(seed, trials, h, perturb));
    return checks;
}

}  // namespace fgml
