#include "fgml/tensor.hpp"

#include <cmath>
#include <sstream>

namespace fgml {

namespace {

size_t checked_product(const std::vector<size_t>& shape) {
    size_t n = 1;
    for (size_t e : shape) {
        if (e == 0) raise(ErrorKind::Dimension, "tensor extent must be positive");
        n *= e;
    }
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<size_t> shape) : shape_(std::move(shape)) {
    data_.assign(checked_product(shape_), 0.0);
}

Tensor::Tensor(std::vector<size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
    if (checked_product(shape_) != data_.size())
        raise(ErrorKind::Dimension, "tensor data length does not match shape " + shape_str());
}

Tensor Tensor::from_rows(size_t rows, size_t cols, std::initializer_list<double> values) {
    return Tensor({rows, cols}, std::vector<double>(values));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::identity(size_t n) {
    Tensor t({n, n});
    for (size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

size_t Tensor::extent(size_t axis) const {
    if (axis >= shape_.size()) raise(ErrorKind::Dimension, "axis out of range");
    return shape_[axis];
}

void Tensor::fill(double value) {
    for (double& x : data_) x = value;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
    os << "]";
    return os.str();
}

void check_finite(std::span<const double> values, const char* context) {
    for (size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            raise(ErrorKind::Numeric,
                  std::string(context) + ": non-finite value at index " + std::to_string(i));
        }
    }
}

void check_finite(const Tensor& t, const char* context) {
    check_finite(t.values(), context);
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        raise(ErrorKind::Dimension, "matmul expects rank-2 tensors");
    if (a.extent(1) != b.extent(0))
        raise(ErrorKind::Dimension,
              "matmul inner extents differ: " + a.shape_str() + " vs " + b.shape_str());
    const size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
    Tensor c({m, n});
    const double* ap = a.data();
    const double* bp = b.data();
    double* cp = c.data();
    // ikj order: each c[i][j] accumulates k = 0..K-1 left to right.
    for (size_t i = 0; i < m; ++i) {
        for (size_t kk = 0; kk < k; ++kk) {
            const double av = ap[i * k + kk];
            const double* brow = bp + kk * n;
            double* crow = cp + i * n;
            for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    check_finite(c, "matmul");
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        raise(ErrorKind::Dimension, "matmul_nt expects rank-2 tensors");
    if (a.extent(1) != b.extent(1))
        raise(ErrorKind::Dimension,
              "matmul_nt inner extents differ: " + a.shape_str() + " vs " + b.shape_str());
    const size_t m = a.extent(0), k = a.extent(1), n = b.extent(0);
    Tensor c({m, n});
    for (size_t i = 0; i < m; ++i) {
        const double* arow = a.data() + i * k;
        double* crow = c.data() + i * n;
        for (size_t j = 0; j < n; ++j) {
            const double* brow = b.data() + j * k;
            double acc = 0.0;
            for (size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
            crow[j] = acc;
        }
    }
    check_finite(c, "matmul_nt");
    return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        raise(ErrorKind::Dimension, "matmul_tn expects rank-2 tensors");
    if (a.extent(0) != b.extent(0))
        raise(ErrorKind::Dimension,
              "matmul_tn inner extents differ: " + a.shape_str() + " vs " + b.shape_str());
    const size_t k = a.extent(0), m = a.extent(1), n = b.extent(1);
    Tensor c({m, n});
    for (size_t kk = 0; kk < k; ++kk) {
        const double* arow = a.data() + kk * m;
        const double* brow = b.data() + kk * n;
        for (size_t i = 0; i < m; ++i) {
            const double av = arow[i];
            double* crow = c.data() + i * n;
            for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    check_finite(c, "matmul_tn");
    return c;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) raise(ErrorKind::Dimension, "transpose expects a rank-2 tensor");
    const size_t m = a.extent(0), n = a.extent(1);
    Tensor t({n, m});
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

double eps_norm() { return 1e-12; }

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double l2_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

Tensor l2_normalize(const Tensor& v) {
    if (v.rank() != 1) raise(ErrorKind::Dimension, "l2_normalize expects a rank-1 tensor");
    check_finite(v, "l2_normalize input");
    const double norm = l2_norm(v.values());
    if (norm < eps_norm())
        raise(ErrorKind::Degenerate,
              "l2_normalize: vector norm " + std::to_string(norm) + " below threshold");
    Tensor out({v.size()});
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
    return out;
}

void log_softmax_row(std::span<double> row) {
    double max = row[0];
    for (double x : row) max = x > max ? x : max;
    double sum = 0.0;
    for (double x : row) sum += std::exp(x - max);
    const double lse = max + std::log(sum);
    for (double& x : row) x -= lse;
}

Tensor log_softmax(const Tensor& z) {
    if (z.rank() != 1) raise(ErrorKind::Dimension, "log_softmax expects a rank-1 tensor");
    check_finite(z, "log_softmax input");
    Tensor out({z.size()}, std::vector<double>(z.values().begin(), z.values().end()));
    log_softmax_row(out.values());
    check_finite(out, "log_softmax");
    return out;
}

}  // namespace fgml
