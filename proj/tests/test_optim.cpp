#include <doctest.h>

#include <cmath>

#include "fgml/optim.hpp"
#include "fgml/rng.hpp"

using namespace fgml;

namespace {

// Textbook Adam, written independently of the library implementation.
struct ReferenceAdam {
    double m = 0.0, v = 0.0;
    uint64_t t = 0;

    double step(double theta, double g, const AdamWConfig& c) {
        t += 1;
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g * g;
        const double m_hat = m / (1.0 - std::pow(c.beta1, static_cast<double>(t)));
        const double v_hat = v / (1.0 - std::pow(c.beta2, static_cast<double>(t)));
        return theta - c.learning_rate * m_hat / (std::sqrt(v_hat) + c.eps);
    }
};

}  // namespace

TEST_CASE("zero gradient with zero decay leaves parameters unchanged") {
    Tensor p({3}, {1.0, -2.0, 0.5});
    const Tensor copy = p;
    Tensor g({3});
    Tensor m({3}), v({3});
    AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    adamw_step(p, g, m, v, 1, cfg, true);
    for (size_t i = 0; i < p.size(); ++i) CHECK(p[i] == copy[i]);
}

TEST_CASE("first step on a unit gradient scalar") {
    Tensor p({1}, {0.0});
    Tensor g({1}, {1.0});
    Tensor m({1}), v({1});
    AdamWConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.0;
    adamw_step(p, g, m, v, 1, cfg, true);
    CHECK(p[0] == doctest::Approx(-0.1 * (1.0 / (1.0 + 1e-8))).epsilon(1e-12));
}

TEST_CASE("decay-free trajectory matches reference adam over 10 steps") {
    AdamWConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.weight_decay = 0.0;
    Tensor p({1}, {0.7});
    Tensor m({1}), v({1});
    ReferenceAdam ref;
    double theta = 0.7;
    RngStream rng(31, 1);
    for (uint64_t t = 1; t <= 10; ++t) {
        const double g = rng.normal(0.0, 1.0);
        adamw_step(p, Tensor({1}, {g}), m, v, t, cfg, true);
        theta = ref.step(theta, g, cfg);
        CHECK(std::fabs(p[0] - theta) < 1e-12);
    }
}

TEST_CASE("decoupled decay is an exact multiply on the zero-gradient path") {
    AdamWConfig cfg;
    cfg.learning_rate = 1e-4;
    cfg.weight_decay = 1e-4;
    Tensor p({2}, {0.3, -1.7});
    const Tensor before = p;
    Tensor g({2}), m({2}), v({2});
    adamw_step(p, g, m, v, 1, cfg, true);
    const double factor = 1.0 - cfg.learning_rate * cfg.weight_decay;
    CHECK(p[0] == before[0] * factor);
    CHECK(p[1] == before[1] * factor);
}

TEST_CASE("no-decay parameters are untouched by the decay factor") {
    AdamWConfig cfg;
    cfg.weight_decay = 0.5;
    Tensor p({1}, {2.0});
    Tensor g({1}), m({1}), v({1});
    adamw_step(p, g, m, v, 1, cfg, false);
    CHECK(p[0] == 2.0);
}

TEST_CASE("descent on a quadratic") {
    AdamWConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.weight_decay = 0.0;
    Tensor p({1}, {1.0});
    Tensor m({1}), v({1});
    for (uint64_t t = 1; t <= 200; ++t) {
        Tensor g({1}, {2.0 * p[0]});
        adamw_step(p, g, m, v, t, cfg, true);
    }
    CHECK(std::fabs(p[0]) < 1e-2);
}

TEST_CASE("state trajectories are deterministic") {
    auto run = [] {
        std::vector<Tensor> params{Tensor({2}, {0.4, -0.2})};
        std::vector<ParamRef> refs{{"p", &params[0], true}};
        AdamWState state;
        state.config.learning_rate = 0.01;
        state.init(refs);
        RngStream rng(77, 7);
        for (int i = 0; i < 20; ++i) {
            Tensor g({2}, {rng.normal(0, 1), rng.normal(0, 1)});
            adamw_step(refs, {g}, state);
        }
        return params[0];
    };
    const Tensor a = run();
    const Tensor b = run();
    CHECK(a[0] == b[0]);
    CHECK(a[1] == b[1]);
}

TEST_CASE("non-finite gradient aborts the step without touching parameters") {
    std::vector<Tensor> params{Tensor({2}, {1.0, 2.0})};
    std::vector<ParamRef> refs{{"p", &params[0], true}};
    AdamWState state;
    state.init(refs);
    Tensor g({2}, {1.0, std::nan("")});
    CHECK_THROWS_AS(adamw_step(refs, {g}, state), Error);
    CHECK(params[0][0] == 1.0);
    CHECK(params[0][1] == 2.0);
    CHECK(state.step == 0);
}

TEST_CASE("grad_check on analytic cases") {
    // Quadratic: exact to numerical precision.
    auto quad = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    };
    const std::vector<double> point{1.0, 2.0};
    const std::vector<double> grad{2.0, 4.0};
    CHECK(grad_check(quad, point, grad).max_rel_error < 1e-9);

    // Affine: central differences are exact up to machine noise for any h.
    auto affine = [](std::span<const double> x) { return 3.0 * x[0] - 0.5 * x[1] + 2.0; };
    const std::vector<double> agrad{3.0, -0.5};
    CHECK(grad_check(affine, point, agrad, 1e-3).max_rel_error < 1e-10);
    CHECK(grad_check(affine, point, agrad, 1e-7).max_rel_error < 1e-6);
}

TEST_CASE("grad_check flags a wrong gradient") {
    auto quad = [](std::span<const double> x) { return x[0] * x[0]; };
    const std::vector<double> point{1.5};
    const std::vector<double> wrong{3.5};  // true gradient is 3.0
    CHECK(grad_check(quad, point, wrong).max_rel_error > 0.1);
}
