#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "lordnet/field.hpp"

namespace lordnet::rf {

using cvec = std::vector<std::complex<double>>;

// Gaussian random field on the periodic unit torus, sampled by spectral
// filtering of white noise: field = Re ifft2( sqrt(lambda_k) . fft2(xi) ),
// lambda_k = amplitude * (|k|^2 + shift)^(-exponent),
// |k|^2 = (2 pi m1)^2 + (2 pi m2)^2 for integer frequencies m.
struct GrfSpec {
    double amplitude = 1.0;
    double shift = 1.0;
    double exponent = 1.0;
    int n = 32;            // grid points per axis (power of two)
    std::uint64_t seed = 0;

    // N(0, 7^{3/2} (-lap + 49 I)^{-2.5}); Poisson forcing terms.
    static GrfSpec poisson_forcing(int n, std::uint64_t seed);
    // N(0, 8^3 (-lap + 64 I)^{-4.0}); initial vorticity fields.
    static GrfSpec ns_vorticity(int n, std::uint64_t seed);
};

// Unitary 2D DFT on an n*n row-major complex grid; n must be a power of two.
// ifft2(fft2(x)) == x and ||fft2(x)|| == ||x|| to machine precision.
cvec fft2(const cvec& x, int n);
cvec ifft2(const cvec& x, int n);

// Draws the field for the given spec; identical spec + seed give identical
// output. Returns shape (1, n, n).
Field sample_grf(const GrfSpec& spec);

// Samples on the spec's (power-of-two) periodic grid and restricts to the
// leading grid_n x grid_n block; how forcings are drawn for wall grids whose
// node count is not a power of two. grid_n == spec.n is the identity.
Field sample_grf_on_grid(const GrfSpec& spec, int grid_n);

}  // namespace lordnet::rf
