#include "fgml/model.hpp"

#include <cmath>

#include "fgml/error.hpp"

namespace fgml {

namespace {

Tensor relu(const Tensor& x) {
    Tensor out(x.shape());
    for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
    return out;
}

void add_row_bias(Tensor& x, const Tensor& bias) {
    const size_t rows = x.extent(0), cols = x.extent(1);
    if (bias.size() != cols) raise(ErrorKind::Dimension, "bias length does not match");
    for (size_t r = 0; r < rows; ++r) {
        double* row = x.data() + r * cols;
        for (size_t c = 0; c < cols; ++c) row[c] += bias[c];
    }
}

Tensor column_sums(const Tensor& x) {
    const size_t rows = x.extent(0), cols = x.extent(1);
    Tensor out({cols});
    for (size_t r = 0; r < rows; ++r) {
        const double* row = x.data() + r * cols;
        for (size_t c = 0; c < cols; ++c) out[c] += row[c];
    }
    return out;
}

void check_image(const Tensor& x, const char* what) {
    if (x.rank() != 3) raise(ErrorKind::Dimension, std::string(what) + " expects a C x H x W map");
}

Tensor conv3x3_forward(const Tensor& in, const ConvLayer& layer) {
    check_image(in, "conv3x3");
    const size_t ic = in.extent(0), h = in.extent(1), w = in.extent(2);
    const size_t oc = layer.weight.extent(0);
    if (layer.weight.extent(1) != ic)
        raise(ErrorKind::Dimension, "conv3x3 channel mismatch: input " + in.shape_str() +
                                        " vs weight " + layer.weight.shape_str());
    Tensor out({oc, h, w});
    const double* wp = layer.weight.data();
    const double* ip = in.data();
    for (size_t o = 0; o < oc; ++o) {
        const double b = layer.bias[o];
        for (size_t y = 0; y < h; ++y) {
            for (size_t x = 0; x < w; ++x) {
                double acc = b;
                for (size_t c = 0; c < ic; ++c) {
                    const double* wk = wp + ((o * ic + c) * 3) * 3;
                    const double* irow = ip + c * h * w;
                    for (size_t ky = 0; ky < 3; ++ky) {
                        const long iy = static_cast<long>(y + ky) - 1;
                        if (iy < 0 || iy >= static_cast<long>(h)) continue;
                        for (size_t kx = 0; kx < 3; ++kx) {
                            const long ix = static_cast<long>(x + kx) - 1;
                            if (ix < 0 || ix >= static_cast<long>(w)) continue;
                            acc += wk[ky * 3 + kx] * irow[iy * w + ix];
                        }
                    }
                }
                out[(o * h + y) * w + x] = acc;
            }
        }
    }
    return out;
}

void conv3x3_backward(const Tensor& grad_out, const Tensor& in, const ConvLayer& layer,
                      ConvLayer& grads, Tensor& grad_in) {
    const size_t ic = in.extent(0), h = in.extent(1), w = in.extent(2);
    const size_t oc = layer.weight.extent(0);
    grads.weight = Tensor::zeros(layer.weight.shape());
    grads.bias = Tensor::zeros(layer.bias.shape());
    grad_in = Tensor::zeros(in.shape());
    for (size_t o = 0; o < oc; ++o) {
        for (size_t y = 0; y < h; ++y) {
            for (size_t x = 0; x < w; ++x) {
                const double g = grad_out[(o * h + y) * w + x];
                if (g == 0.0) continue;
                grads.bias[o] += g;
                for (size_t c = 0; c < ic; ++c) {
                    double* wk = grads.weight.data() + ((o * ic + c) * 3) * 3;
                    const double* wsrc = layer.weight.data() + ((o * ic + c) * 3) * 3;
                    const double* irow = in.data() + c * h * w;
                    double* grow = grad_in.data() + c * h * w;
                    for (size_t ky = 0; ky < 3; ++ky) {
                        const long iy = static_cast<long>(y + ky) - 1;
                        if (iy < 0 || iy >= static_cast<long>(h)) continue;
                        for (size_t kx = 0; kx < 3; ++kx) {
                            const long ix = static_cast<long>(x + kx) - 1;
                            if (ix < 0 || ix >= static_cast<long>(w)) continue;
                            wk[ky * 3 + kx] += g * irow[iy * w + ix];
                            grow[iy * w + ix] += g * wsrc[ky * 3 + kx];
                        }
                    }
                }
            }
        }
    }
}

// 2x2 stride-2 max pool; the first maximum in row-major window order wins.
Tensor maxpool2x2(const Tensor& in, std::vector<size_t>& argmax,
                  std::vector<size_t>& pooled_shape) {
    const size_t c = in.extent(0), h = in.extent(1), w = in.extent(2);
    const size_t oh = h / 2, ow = w / 2;
    if (oh == 0 || ow == 0)
        raise(ErrorKind::Dimension, "maxpool2x2: spatial extent too small " + in.shape_str());
    Tensor out({c, oh, ow});
    argmax.assign(c * oh * ow, 0);
    pooled_shape = {c, oh, ow};
    for (size_t ch = 0; ch < c; ++ch) {
        const double* plane = in.data() + ch * h * w;
        for (size_t y = 0; y < oh; ++y) {
            for (size_t x = 0; x < ow; ++x) {
                size_t best = (2 * y) * w + 2 * x;
                double best_v = plane[best];
                const size_t cand[3] = {(2 * y) * w + 2 * x + 1, (2 * y + 1) * w + 2 * x,
                                        (2 * y + 1) * w + 2 * x + 1};
                for (size_t idx : cand) {
                    if (plane[idx] > best_v) {
                        best_v = plane[idx];
                        best = idx;
                    }
                }
                out[(ch * oh + y) * ow + x] = best_v;
                argmax[(ch * oh + y) * ow + x] = ch * h * w + best;
            }
        }
    }
    return out;
}

}  // namespace

Tensor mlp_forward(const Tensor& x, const MlpHead& head, Mode mode, RngStream& rng,
                   MlpCache* cache) {
    if (x.rank() != 2 || x.extent(1) != head.feature_dim())
        raise(ErrorKind::Dimension, "mlp_forward input " + x.shape_str() +
                                        " does not match feature dim " +
                                        std::to_string(head.feature_dim()));
    if (!(head.dropout >= 0.0 && head.dropout < 1.0))
        raise(ErrorKind::Parameter, "dropout rate must lie in [0, 1)");

    Tensor h1_pre = matmul_nt(x, head.w1);
    add_row_bias(h1_pre, head.b1);
    Tensor h1 = relu(h1_pre);

    Tensor mask;
    if (mode == Mode::Train && head.dropout > 0.0) {
        mask = Tensor(h1.shape());
        const double keep_scale = 1.0 / (1.0 - head.dropout);
        for (size_t i = 0; i < mask.size(); ++i)
            mask[i] = rng.uniform01() >= head.dropout ? keep_scale : 0.0;
        for (size_t i = 0; i < h1.size(); ++i) h1[i] *= mask[i];
    }

    Tensor e_pre = matmul_nt(h1, head.w2);
    add_row_bias(e_pre, head.b2);
    Tensor e = head.final_relu ? relu(e_pre) : e_pre;
    check_finite(e, "mlp_forward");

    if (cache) {
        cache->input = x;
        cache->h1_pre = std::move(h1_pre);
        cache->h1_dropped = std::move(h1);
        cache->mask = std::move(mask);
        cache->e_pre = std::move(e_pre);
    }
    return e;
}

MlpGrads mlp_backward(const Tensor& grad_embeddings, const MlpHead& head,
                      const MlpCache& cache) {
    Tensor de_pre = grad_embeddings;
    if (head.final_relu) {
        for (size_t i = 0; i < de_pre.size(); ++i)
            if (cache.e_pre[i] <= 0.0) de_pre[i] = 0.0;
    }

    MlpGrads grads;
    grads.w2 = matmul_tn(de_pre, cache.h1_dropped);
    grads.b2 = column_sums(de_pre);

    Tensor dh1 = matmul(de_pre, head.w2);
    if (!cache.mask.empty())
        for (size_t i = 0; i < dh1.size(); ++i) dh1[i] *= cache.mask[i];
    for (size_t i = 0; i < dh1.size(); ++i)
        if (cache.h1_pre[i] <= 0.0) dh1[i] = 0.0;

    grads.w1 = matmul_tn(dh1, cache.input);
    grads.b1 = column_sums(dh1);
    grads.input = matmul(dh1, head.w1);
    return grads;
}

Tensor global_avg_pool(const Tensor& x) {
    check_image(x, "global_avg_pool");
    const size_t c = x.extent(0), h = x.extent(1), w = x.extent(2);
    const double count = static_cast<double>(h * w);
    Tensor out({c});
    for (size_t ch = 0; ch < c; ++ch) {
        const double* plane = x.data() + ch * h * w;
        double acc = 0.0;
        for (size_t i = 0; i < h * w; ++i) acc += plane[i];
        out[ch] = acc / count;
    }
    return out;
}

Tensor cnn_forward(const Tensor& image, const SmallCnn& cnn, CnnCache* cache) {
    check_image(image, "cnn_forward");
    if (image.extent(0) != 3)
        raise(ErrorKind::Dimension, "cnn_forward expects 3 input channels, got " +
                                        image.shape_str());
    const ConvLayer* layers[3] = {&cnn.conv1, &cnn.conv2, &cnn.conv3};
    Tensor current = image;
    CnnCache local;
    CnnCache& c = cache ? *cache : local;
    for (int b = 0; b < 3; ++b) {
        c.block_input[b] = current;
        Tensor pre = conv3x3_forward(current, *layers[b]);
        c.conv_pre[b] = pre;
        Tensor activated = relu(pre);
        current = maxpool2x2(activated, c.pool_argmax[b], c.pool_shape[b]);
    }
    c.pooled_out = current;
    Tensor features = global_avg_pool(current);
    check_finite(features, "cnn_forward");
    return features;
}

CnnGrads cnn_backward(const Tensor& grad_features, const SmallCnn& cnn,
                      const CnnCache& cache) {
    if (grad_features.size() != SmallCnn::kFeatureDim)
        raise(ErrorKind::Dimension, "cnn_backward gradient size mismatch");

    // GAP backward: spread each channel gradient uniformly.
    const Tensor& last = cache.pooled_out;
    const size_t lc = last.extent(0), lh = last.extent(1), lw = last.extent(2);
    Tensor grad = Tensor({lc, lh, lw});
    for (size_t ch = 0; ch < lc; ++ch) {
        const double g = grad_features[ch] / static_cast<double>(lh * lw);
        double* plane = grad.data() + ch * lh * lw;
        for (size_t i = 0; i < lh * lw; ++i) plane[i] = g;
    }

    const ConvLayer* layers[3] = {&cnn.conv1, &cnn.conv2, &cnn.conv3};
    CnnGrads grads;
    ConvLayer* grad_layers[3] = {&grads.conv1, &grads.conv2, &grads.conv3};
    for (int b = 2; b >= 0; --b) {
        // Unpool: route each pooled gradient to its argmax position.
        const Tensor& pre = cache.conv_pre[b];
        Tensor grad_act = Tensor::zeros(pre.shape());
        for (size_t i = 0; i < cache.pool_argmax[b].size(); ++i)
            grad_act[cache.pool_argmax[b][i]] += grad[i];
        // ReLU backward.
        for (size_t i = 0; i < grad_act.size(); ++i)
            if (pre[i] <= 0.0) grad_act[i] = 0.0;
        Tensor grad_in;
        conv3x3_backward(grad_act, cache.block_input[b], *layers[b], *grad_layers[b],
                         grad_in);
        grad = std::move(grad_in);
    }
    grads.input = std::move(grad);
    return grads;
}

Tensor extract_features(const Tensor& x, const FeatureExtractor& extractor, Mode mode,
                        CnnCache* cache) {
    (void)mode;  // the substitute backbone has no mode-dependent layers
    switch (extractor.kind) {
        case ExtractorKind::SmallCnn:
            return cnn_forward(x, extractor.cnn, cache);
        case ExtractorKind::Precomputed:
        case ExtractorKind::Identity:
            if (x.rank() != 1 || x.size() != extractor.feature_dim)
                raise(ErrorKind::Dimension,
                      "feature input " + x.shape_str() + " does not match extractor dim " +
                          std::to_string(extractor.feature_dim));
            return x;
    }
    raise(ErrorKind::Parameter, "unknown extractor kind");
}

Tensor classify(const Tensor& embeddings, const ClassifierHead& head) {
    if (embeddings.rank() != 2 || embeddings.extent(1) != head.wc.extent(1))
        raise(ErrorKind::Dimension, "classify input " + embeddings.shape_str() +
                                        " does not match head " + head.wc.shape_str());
    Tensor logits = matmul_nt(embeddings, head.wc);
    add_row_bias(logits, head.bc);
    check_finite(logits, "classify");
    return logits;
}

ClassifierGrads classify_backward(const Tensor& grad_logits, const ClassifierHead& head,
                                  const Tensor& embeddings) {
    ClassifierGrads grads;
    grads.wc = matmul_tn(grad_logits, embeddings);
    grads.bc = column_sums(grad_logits);
    grads.input = matmul(grad_logits, head.wc);
    return grads;
}

Tensor he_normal(std::vector<size_t> shape, size_t fan_in, RngStream& rng) {
    if (fan_in == 0) raise(ErrorKind::Parameter, "he_normal requires fan_in > 0");
    Tensor t(std::move(shape));
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, std_dev);
    return t;
}

MlpHead init_mlp(size_t feature_dim, size_t hidden_dim, size_t embedding_dim,
                 double dropout, bool final_relu, RngStream rng) {
    MlpHead head;
    RngStream s1 = rng.substream(1);
    RngStream s2 = rng.substream(2);
    head.w1 = he_normal({hidden_dim, feature_dim}, feature_dim, s1);
    head.b1 = Tensor({hidden_dim});
    head.w2 = he_normal({embedding_dim, hidden_dim}, hidden_dim, s2);
    head.b2 = Tensor({embedding_dim});
    head.dropout = dropout;
    head.final_relu = final_relu;
    return head;
}

SmallCnn init_small_cnn(RngStream rng) {
    SmallCnn cnn;
    RngStream s1 = rng.substream(1);
    RngStream s2 = rng.substream(2);
    RngStream s3 = rng.substream(3);
    cnn.conv1 = {he_normal({8, 3, 3, 3}, 3 * 9, s1), Tensor({8})};
    cnn.conv2 = {he_normal({16, 8, 3, 3}, 8 * 9, s2), Tensor({16})};
    cnn.conv3 = {he_normal({32, 16, 3, 3}, 16 * 9, s3), Tensor({32})};
    return cnn;
}

ClassifierHead init_classifier(size_t classes, size_t embedding_dim, RngStream rng) {
    RngStream s = rng.substream(1);
    return {he_normal({classes, embedding_dim}, embedding_dim, s), Tensor({classes})};
}

Tensor init_arc_weights(size_t classes, size_t embedding_dim, RngStream rng) {
    RngStream s = rng.substream(1);
    return he_normal({classes, embedding_dim}, embedding_dim, s);
}

std::vector<std::pair<std::string, const Tensor*>> named_model_tensors(const Model& model) {
    std::vector<std::pair<std::string, const Tensor*>> tensors;
    if (model.extractor.kind == ExtractorKind::SmallCnn) {
        tensors.emplace_back("cnn.conv1.weight", &model.extractor.cnn.conv1.weight);
        tensors.emplace_back("cnn.conv1.bias", &model.extractor.cnn.conv1.bias);
        tensors.emplace_back("cnn.conv2.weight", &model.extractor.cnn.conv2.weight);
        tensors.emplace_back("cnn.conv2.bias", &model.extractor.cnn.conv2.bias);
        tensors.emplace_back("cnn.conv3.weight", &model.extractor.cnn.conv3.weight);
        tensors.emplace_back("cnn.conv3.bias", &model.extractor.cnn.conv3.bias);
    }
    tensors.emplace_back("mlp.w1", &model.mlp.w1);
    tensors.emplace_back("mlp.b1", &model.mlp.b1);
    tensors.emplace_back("mlp.w2", &model.mlp.w2);
    tensors.emplace_back("mlp.b2", &model.mlp.b2);
    tensors.emplace_back("classifier.wc", &model.classifier.wc);
    tensors.emplace_back("classifier.bc", &model.classifier.bc);
    tensors.emplace_back("arc.weights", &model.arc_weights);
    return tensors;
}

std::vector<ParamRef> model_parameters(Model& model) {
    std::vector<ParamRef> params;
    for (auto& [name, tensor] : named_model_tensors(model)) {
        const bool is_bias = name.ends_with(".bias") || name == "mlp.b1" ||
                             name == "mlp.b2" || name == "classifier.bc";
        params.push_back({name, const_cast<Tensor*>(tensor), !is_bias});
    }
    return params;
}

}  // namespace fgml
