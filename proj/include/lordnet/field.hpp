#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lordnet {

// Error vocabulary used across the library. The CLI maps these onto exit
// codes: ConfigError -> 1, NumericError -> 2.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

// Dense row-major tensor of 64-bit reals. Axis 0 is the channel axis for
// multi-channel data; the remaining axes are spatial. A grid field is
// typically (1, n, n) or, inside a network, (C, n, n).
class Field {
public:
    Field() = default;
    explicit Field(Shape shape);
    Field(Shape shape, double fill);
    Field(Shape shape, std::vector<double> values);

    static Field scalar(double v) { return Field(Shape{1}, std::vector<double>{v}); }

    const Shape& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    double& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // Convenience accessors; hot kernels index raw data directly.
    double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
    double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
    double& at(int c, int i, int j) {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + i) * shape_[2] + j];
    }
    double at(int c, int i, int j) const {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + i) * shape_[2] + j];
    }

    bool same_shape(const Field& other) const { return shape_ == other.shape_; }
    bool all_finite() const;

private:
    Shape shape_;
    std::vector<double> data_;
};

std::int64_t shape_size(const Shape& s);

// Elementwise helpers on plain fields (no autodiff); used by the solvers,
// the optimizer and the tests.
Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(const Field& a, double s);
Field hadamard(const Field& a, const Field& b);
void axpy(double alpha, const Field& x, Field& y);  // y += alpha * x
double dot(const Field& a, const Field& b);
double norm2(const Field& a);
double max_abs(const Field& a);
double mean(const Field& a);

// Subtracts the arithmetic mean; the gauge fix for periodic problems.
Field mean_project(const Field& a);

// (C,h,w) -> (C,h+2,w+2) with a zero ring, and its inverse crop.
Field pad_with_zero_ring(const Field& a);
Field crop_interior(const Field& a);

// Cyclic spatial shift of a (C,H,W) field: out[c,i,j] = a[c,i-di,j-dj] (wrapped).
Field circular_shift(const Field& a, int di, int dj);

void require_same_shape(const Field& a, const Field& b, const char* what);

}  // namespace lordnet
