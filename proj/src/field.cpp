#include "lordnet/field.hpp"

#include <cmath>
#include <sstream>

namespace lordnet {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << ")";
    return os.str();
}

std::int64_t shape_size(const Shape& s) {
    std::int64_t n = 1;
    for (int d : s) {
        if (d <= 0) throw ShapeError("non-positive axis length in shape " + shape_str(s));
        n *= d;
    }
    return n;
}

Field::Field(Shape shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(shape_size(shape_)), 0.0);
}

Field::Field(Shape shape, double fill) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(shape_size(shape_)), fill);
}

Field::Field(Shape shape, std::vector<double> values) : shape_(std::move(shape)), data_(std::move(values)) {
    if (shape_size(shape_) != static_cast<std::int64_t>(data_.size()))
        throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_str(shape_));
}

bool Field::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

void require_same_shape(const Field& a, const Field& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

Field operator+(const Field& a, const Field& b) {
    require_same_shape(a, b, "add");
    Field out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Field operator-(const Field& a, const Field& b) {
    require_same_shape(a, b, "sub");
    Field out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Field operator*(const Field& a, double s) {
    Field out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
    return out;
}

Field hadamard(const Field& a, const Field& b) {
    require_same_shape(a, b, "hadamard");
    Field out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

void axpy(double alpha, const Field& x, Field& y) {
    require_same_shape(x, y, "axpy");
    for (std::int64_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(const Field& a, const Field& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Field& a) { return std::sqrt(dot(a, a)); }

double max_abs(const Field& a) {
    double m = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i]));
    return m;
}

double mean(const Field& a) {
    if (a.empty()) throw ShapeError("mean of empty field");
    double s = 0.0;
    for (std::int64_t i = 0; i < a.size(); ++i) s += a[i];
    return s / static_cast<double>(a.size());
}

Field mean_project(const Field& a) {
    double m = mean(a);
    Field out(a.shape());
    for (std::int64_t i = 0; i < a.size(); ++i) out[i] = a[i] - m;
    return out;
}

Field pad_with_zero_ring(const Field& a) {
    if (a.rank() != 3) throw ShapeError("pad_with_zero_ring expects (C,h,w), got " + shape_str(a.shape()));
    const int C = a.dim(0), h = a.dim(1), w = a.dim(2);
    Field out(Shape{C, h + 2, w + 2});
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) out.at(c, i + 1, j + 1) = a.at(c, i, j);
    return out;
}

Field crop_interior(const Field& a) {
    if (a.rank() != 3) throw ShapeError("crop_interior expects (C,H,W), got " + shape_str(a.shape()));
    const int C = a.dim(0), H = a.dim(1), W = a.dim(2);
    if (H < 3 || W < 3) throw ShapeError("crop_interior: grid " + shape_str(a.shape()) + " too small");
    Field out(Shape{C, H - 2, W - 2});
    for (int c = 0; c < C; ++c)
        for (int i = 1; i < H - 1; ++i)
            for (int j = 1; j < W - 1; ++j) out.at(c, i - 1, j - 1) = a.at(c, i, j);
    return out;
}

Field circular_shift(const Field& a, int di, int dj) {
    if (a.rank() != 3) throw ShapeError("circular_shift expects (C,H,W), got " + shape_str(a.shape()));
    const int C = a.dim(0), H = a.dim(1), W = a.dim(2);
    Field out(a.shape());
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                const int si = ((i - di) % H + H) % H;
                const int sj = ((j - dj) % W + W) % W;
                out.at(c, i, j) = a.at(c, si, sj);
            }
    return out;
}

}  // namespace lordnet
