#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "fgml/error.hpp"

namespace fgml {

// Dense row-major tensor of doubles. Shape extents are all positive; the flat
// data length always equals the product of the extents. All compute is done in
// 64-bit floats; 32-bit conversion happens only at file I/O boundaries.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<size_t> shape);
    Tensor(std::vector<size_t> shape, std::vector<double> values);

    static Tensor zeros(std::vector<size_t> shape) { return Tensor(std::move(shape)); }
    static Tensor from_rows(size_t rows, size_t cols, std::initializer_list<double> values);
    static Tensor vector(std::initializer_list<double> values);
    static Tensor identity(size_t n);

    const std::vector<size_t>& shape() const { return shape_; }
    size_t rank() const { return shape_.size(); }
    size_t extent(size_t axis) const;
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }

    double& operator[](size_t i) { return data_[i]; }
    double operator[](size_t i) const { return data_[i]; }

    // 2-D accessors; bounds are the caller's responsibility on hot paths.
    double& at(size_t row, size_t col) { return data_[row * shape_[1] + col]; }
    double at(size_t row, size_t col) const { return data_[row * shape_[1] + col]; }

    std::span<double> row(size_t r) { return {data_.data() + r * shape_[1], shape_[1]}; }
    std::span<const double> row(size_t r) const { return {data_.data() + r * shape_[1], shape_[1]}; }

    void fill(double value);
    std::string shape_str() const;

  private:
    std::vector<size_t> shape_;
    std::vector<double> data_;
};

// Throws a Numeric error if any element is NaN or Inf.
void check_finite(const Tensor& t, const char* context);
void check_finite(std::span<const double> values, const char* context);

// Matrix product of a [M x K] and b [K x N]. Accumulation over K runs in
// ascending index order so results are reproducible across runs.
Tensor matmul(const Tensor& a, const Tensor& b);

// a [M x K] times b^T where b is [N x K]; returns [M x N].
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// a^T times b where a is [K x M], b is [K x N]; returns [M x N].
Tensor matmul_tn(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

// Unit-L2 copy of a 1-D tensor. Vectors with norm below eps_norm() are
// reported as degenerate rather than divided.
Tensor l2_normalize(const Tensor& v);
double eps_norm();

// Numerically stable log-softmax of a 1-D tensor.
Tensor log_softmax(const Tensor& z);

// In-place log-softmax over a contiguous row; used by the loss kernels.
void log_softmax_row(std::span<double> row);

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

}  // namespace fgml
