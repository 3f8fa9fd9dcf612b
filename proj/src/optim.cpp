#include "fgml/optim.hpp"

#include <cmath>

#include "fgml/error.hpp"

namespace fgml {

void AdamWState::init(const std::vector<ParamRef>& params) {
    step = 0;
    m.clear();
    v.clear();
    m.reserve(params.size());
    v.reserve(params.size());
    for (const ParamRef& p : params) {
        m.push_back(Tensor::zeros(p.value->shape()));
        v.push_back(Tensor::zeros(p.value->shape()));
    }
}

void adamw_step(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, uint64_t step,
                const AdamWConfig& config, bool decay) {
    if (param.shape() != grad.shape() || param.shape() != m.shape() ||
        param.shape() != v.shape())
        raise(ErrorKind::Dimension, "adamw_step: parameter/gradient/state shapes disagree");

    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
    const double decay_factor = 1.0 - config.learning_rate * config.weight_decay;

    for (size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
        v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        double theta = param[i];
        if (decay) theta *= decay_factor;
        param[i] = theta - config.learning_rate * (m_hat / (std::sqrt(v_hat) + config.eps));
    }
}

void adamw_step(std::vector<ParamRef>& params, const std::vector<Tensor>& grads,
                AdamWState& state) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        raise(ErrorKind::Dimension, "adamw_step: parameter/gradient/state counts disagree");
    for (size_t p = 0; p < params.size(); ++p) {
        for (double g : grads[p].values()) {
            if (!std::isfinite(g))
                raise(ErrorKind::Numeric,
                      "adamw_step: non-finite gradient for " + params[p].name + ", step aborted");
        }
    }
    state.step += 1;
    for (size_t p = 0; p < params.size(); ++p)
        adamw_step(*params[p].value, grads[p], state.m[p], state.v[p], state.step,
                   state.config, params[p].decay);
}

GradCheckReport grad_check(const std::function<double(std::span<const double>)>& f,
                           std::span<const double> point,
                           std::span<const double> analytic,
                           double h,
                           std::span<const size_t> coords) {
    if (point.size() != analytic.size())
        raise(ErrorKind::Dimension, "grad_check: point/gradient sizes disagree");
    if (h <= 0.0) raise(ErrorKind::Parameter, "grad_check: h must be positive");

    std::vector<double> x(point.begin(), point.end());
    std::vector<size_t> all;
    if (coords.empty()) {
        all.resize(point.size());
        for (size_t i = 0; i < all.size(); ++i) all[i] = i;
        coords = all;
    }

    GradCheckReport report;
    for (size_t i : coords) {
        const double saved = x[i];
        x[i] = saved + h;
        const double f_plus = f(x);
        x[i] = saved - h;
        const double f_minus = f(x);
        x[i] = saved;
        if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
            raise(ErrorKind::Numeric,
                  "grad_check: non-finite evaluation at coordinate " + std::to_string(i));
        const double numeric = (f_plus - f_minus) / (2.0 * h);
        // Floor: central differences on an O(1..10) objective carry roughly
        // ulp(f)/2h ~ 1e-10 of absolute noise, so gradient components below
        // ~1e-6 cannot be resolved to 1e-4 relative accuracy in f64.
        const double denom =
            std::max({std::fabs(numeric), std::fabs(analytic[i]), 1e-6});
        const double rel = std::fabs(numeric - analytic[i]) / denom;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_coordinate = i;
            report.worst_analytic = analytic[i];
            report.worst_numeric = numeric;
        }
    }
    return report;
}

}  // namespace fgml
