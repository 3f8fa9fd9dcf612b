#include <doctest.h>

#include <cmath>

#include "fgml/rng.hpp"
#include "fgml/tensor.hpp"

using namespace fgml;

namespace {

// Independent triple-loop reference for matmul checks.
Tensor matmul_reference(const Tensor& a, const Tensor& b) {
    const size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    Tensor c({m, n});
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (size_t kk = 0; kk < k; ++kk) acc += a.at(i, kk) * b.at(kk, j);
            c.at(i, j) = acc;
        }
    return c;
}

Tensor random_matrix(size_t rows, size_t cols, RngStream& rng) {
    Tensor t({rows, cols});
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, 1.0);
    return t;
}

}  // namespace

TEST_CASE("tensor shape and data invariants") {
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK_THROWS_AS(Tensor({2, 0}), Error);
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0, 3.0}), Error);
}

TEST_CASE("matmul identity and projector") {
    const Tensor a = Tensor::from_rows(2, 2, {1, 2, 3, 4});
    const Tensor id = Tensor::identity(2);

    Tensor left = matmul(id, a);
    Tensor right = matmul(a, id);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(left[i] == a[i]);
        CHECK(right[i] == a[i]);
    }

    const Tensor proj = Tensor::from_rows(2, 2, {1, 0, 0, 0});
    const Tensor b = Tensor::from_rows(2, 2, {5, 6, 7, 8});
    Tensor out = matmul(proj, b);
    CHECK(out.at(0, 0) == 5.0);
    CHECK(out.at(0, 1) == 6.0);
    CHECK(out.at(1, 0) == 0.0);
    CHECK(out.at(1, 1) == 0.0);
}

TEST_CASE("matmul agrees with triple-loop reference") {
    RngStream rng(7, 1);
    const Tensor a = random_matrix(3, 4, rng);
    const Tensor b = random_matrix(4, 2, rng);
    const Tensor got = matmul(a, b);
    const Tensor want = matmul_reference(a, b);
    for (size_t i = 0; i < got.size(); ++i)
        CHECK(std::fabs(got[i] - want[i]) < 1e-12);
}

TEST_CASE("matmul shape mismatch is a dimension error") {
    const Tensor a({2, 3});
    const Tensor b({2, 3});
    CHECK_THROWS_AS(matmul(a, b), Error);
}

TEST_CASE("matmul_nt and matmul_tn match explicit transposes") {
    RngStream rng(11, 2);
    const Tensor a = random_matrix(3, 5, rng);
    const Tensor b = random_matrix(4, 5, rng);
    const Tensor nt = matmul_nt(a, b);
    const Tensor nt_ref = matmul_reference(a, transpose(b));
    for (size_t i = 0; i < nt.size(); ++i) CHECK(std::fabs(nt[i] - nt_ref[i]) < 1e-12);

    const Tensor c = random_matrix(5, 3, rng);
    const Tensor d = random_matrix(5, 4, rng);
    const Tensor tn = matmul_tn(c, d);
    const Tensor tn_ref = matmul_reference(transpose(c), d);
    for (size_t i = 0; i < tn.size(); ++i) CHECK(std::fabs(tn[i] - tn_ref[i]) < 1e-12);
}

TEST_CASE("l2_normalize basics") {
    const Tensor v = Tensor::vector({3, 4});
    const Tensor n = l2_normalize(v);
    CHECK(n[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(n[1] == doctest::Approx(0.8).epsilon(1e-12));

    const Tensor unit = Tensor::vector({0, 1, 0});
    const Tensor same = l2_normalize(unit);
    for (size_t i = 0; i < 3; ++i) CHECK(same[i] == unit[i]);

    CHECK_THROWS_AS(l2_normalize(Tensor::vector({0, 0, 0})), Error);
}

TEST_CASE("l2_normalize random vector has unit norm and is idempotent") {
    RngStream rng(3, 9);
    Tensor v({256});
    for (size_t i = 0; i < v.size(); ++i) v[i] = rng.normal(0.0, 2.0);
    const Tensor n = l2_normalize(v);
    CHECK(std::fabs(l2_norm(n.values()) - 1.0) < 1e-12);
    const Tensor nn = l2_normalize(n);
    for (size_t i = 0; i < n.size(); ++i) CHECK(std::fabs(nn[i] - n[i]) < 1e-12);
}

TEST_CASE("log_softmax symmetry, shift invariance, overflow safety") {
    const Tensor sym = log_softmax(Tensor::vector({0, 0}));
    CHECK(sym[0] == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
    CHECK(sym[1] == doctest::Approx(-std::log(2.0)).epsilon(1e-12));

    RngStream rng(5, 4);
    Tensor z({6});
    for (size_t i = 0; i < z.size(); ++i) z[i] = rng.normal(0.0, 3.0);
    Tensor shifted = z;
    for (size_t i = 0; i < z.size(); ++i) shifted[i] += 123.5;
    const Tensor a = log_softmax(z);
    const Tensor b = log_softmax(shifted);
    for (size_t i = 0; i < z.size(); ++i) CHECK(std::fabs(a[i] - b[i]) < 1e-12);

    const Tensor big = log_softmax(Tensor::vector({1000, 0}));
    CHECK(std::fabs(big[0]) < 1e-12);
    CHECK(big[1] == doctest::Approx(-1000.0).epsilon(1e-12));
}

TEST_CASE("exp(log_softmax) sums to one") {
    RngStream rng(17, 0);
    for (int trial = 0; trial < 50; ++trial) {
        const size_t n = 2 + rng.below(10);
        Tensor z({n});
        for (size_t i = 0; i < n; ++i) z[i] = rng.uniform(-1e6, 1e6);
        const Tensor ls = log_softmax(z);
        double sum = 0.0;
        for (size_t i = 0; i < n; ++i) sum += std::exp(ls[i]);
        CHECK(std::fabs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("check_finite reports NaN") {
    Tensor t({2}, {1.0, std::nan("")});
    CHECK_THROWS_AS(check_finite(t, "test"), Error);
}
