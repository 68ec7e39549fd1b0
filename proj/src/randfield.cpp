#include "lordnet/randfield.hpp"

#include <cmath>

#include "lordnet/rng.hpp"

namespace lordnet::rf {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, unitary normalization (1/sqrt(n)).
void fft1_inplace(std::complex<double>* a, int n, bool inverse) {
    // bit reversal
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / len;
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int j = 0; j < len / 2; ++j) {
                std::complex<double> u = a[i + j];
                std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i) a[i] *= s;
}

cvec fft2_impl(const cvec& x, int n, bool inverse) {
    if (!is_pow2(n)) throw ShapeError("fft2: grid size " + std::to_string(n) + " is not a power of two");
    if (static_cast<int>(x.size()) != n * n) throw ShapeError("fft2: data length does not match n*n");
    cvec a = x;
    for (int i = 0; i < n; ++i) fft1_inplace(a.data() + static_cast<std::size_t>(i) * n, n, inverse);
    cvec col(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i) * n + j];
        fft1_inplace(col.data(), n, inverse);
        for (int i = 0; i < n; ++i) a[static_cast<std::size_t>(i) * n + j] = col[static_cast<std::size_t>(i)];
    }
    return a;
}

}  // namespace

cvec fft2(const cvec& x, int n) { return fft2_impl(x, n, false); }
cvec ifft2(const cvec& x, int n) { return fft2_impl(x, n, true); }

GrfSpec GrfSpec::poisson_forcing(int n, std::uint64_t seed) {
    return GrfSpec{std::pow(7.0, 1.5), 49.0, 2.5, n, seed};
}

GrfSpec GrfSpec::ns_vorticity(int n, std::uint64_t seed) {
    return GrfSpec{512.0, 64.0, 4.0, n, seed};
}

Field sample_grf(const GrfSpec& spec) {
    if (spec.shift <= 0.0 || spec.exponent <= 0.0)
        throw ConfigError("sample_grf: shift and exponent must be positive");
    const int n = spec.n;
    Rng rng(spec.seed);
    cvec noise(static_cast<std::size_t>(n) * n);
    for (auto& z : noise) z = std::complex<double>(rng.normal(), 0.0);

    cvec hat = fft2(noise, n);
    for (int a = 0; a < n; ++a) {
        const int m1 = a <= n / 2 ? a : a - n;
        for (int b = 0; b < n; ++b) {
            const int m2 = b <= n / 2 ? b : b - n;
            const double k2 = 4.0 * M_PI * M_PI * (static_cast<double>(m1) * m1 + static_cast<double>(m2) * m2);
            const double lambda = spec.amplitude * std::pow(k2 + spec.shift, -spec.exponent);
            hat[static_cast<std::size_t>(a) * n + b] *= std::sqrt(lambda);
        }
    }
    cvec field = ifft2(hat, n);

    Field out(Shape{1, n, n});
    for (std::size_t i = 0; i < field.size(); ++i) out[static_cast<std::int64_t>(i)] = field[i].real();
    return out;
}

Field sample_grf_on_grid(const GrfSpec& spec, int grid_n) {
    if (grid_n > spec.n)
        throw ConfigError("sample_grf_on_grid: grid n " + std::to_string(grid_n) +
                          " exceeds the sampler resolution " + std::to_string(spec.n));
    Field full = sample_grf(spec);
    if (grid_n == spec.n) return full;
    Field out(Shape{1, grid_n, grid_n});
    for (int i = 0; i < grid_n; ++i)
        for (int j = 0; j < grid_n; ++j) out.at(0, i, j) = full.at(0, i, j);
    return out;
}

}  // namespace lordnet::rf
