#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fgml/tensor.hpp"

namespace fgml {

struct AdamWConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

// Mutable view of one optimized parameter. `decay` excludes biases and other
// non-weight state from decoupled weight decay.
struct ParamRef {
    std::string name;
    Tensor* value = nullptr;
    bool decay = true;
};

// Per-parameter first/second moments plus the shared step counter. Moment
// tensors mirror the parameter shapes in registration order.
struct AdamWState {
    AdamWConfig config;
    uint64_t step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    void init(const std::vector<ParamRef>& params);
    bool initialized() const { return !m.empty(); }
};

// One decoupled-decay Adam step over all parameters. Gradients are validated
// finite before any parameter is touched; a non-finite gradient aborts the
// step with a Numeric error. Decay is applied as param *= (1 - lr*wd), which
// keeps the zero-gradient trajectory an exact geometric sequence.
void adamw_step(std::vector<ParamRef>& params, const std::vector<Tensor>& grads,
                AdamWState& state);

// Convenience overload for a single tensor (tests, toy trajectories).
void adamw_step(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, uint64_t step,
                const AdamWConfig& config, bool decay);

struct GradCheckReport {
    double max_rel_error = 0.0;
    size_t worst_coordinate = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

// Central-difference check of an analytic gradient: perturbs each requested
// coordinate of `point` by +-h, compares (f+ - f-) / 2h against
// `analytic[i]`, and returns the worst relative error with denominators
// floored at 1e-6 (the resolution limit of f64 central differences at
// h = 1e-5 on O(1..10) objectives). Non-finite evaluations are reported with
// the offending coordinate. An empty `coords` checks every coordinate.
GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> point,
                           std::span<const double> analytic,
                           double h = 1e-5,
                           std::span<const size_t> coords = {});

}  // namespace fgml
