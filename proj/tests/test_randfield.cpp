#include <doctest.h>

#include <cmath>
#include <complex>

#include "lordnet/randfield.hpp"
#include "lordnet/rng.hpp"
#include "support/oracles.hpp"

using namespace lordnet;
using namespace lordnet::rf;

TEST_CASE("fft2: impulse has a flat spectrum") {
    const int n = 8;
    cvec x(static_cast<std::size_t>(n) * n, {0.0, 0.0});
    x[0] = {1.0, 0.0};
    cvec hat = fft2(x, n);
    for (const auto& z : hat) {
        CHECK(z.real() == doctest::Approx(1.0 / n).epsilon(1e-12));
        CHECK(std::abs(z.imag()) < 1e-14);
    }
}

TEST_CASE("fft2: round trip and Parseval") {
    const int n = 16;
    Rng rng(21);
    cvec x(static_cast<std::size_t>(n) * n);
    for (auto& z : x) z = {rng.normal(), rng.normal()};

    cvec back = ifft2(fft2(x, n), n);
    double dev = 0.0, nx = 0.0, nhat = 0.0;
    cvec hat = fft2(x, n);
    for (std::size_t i = 0; i < x.size(); ++i) {
        dev = std::max(dev, std::abs(back[i] - x[i]));
        nx += std::norm(x[i]);
        nhat += std::norm(hat[i]);
    }
    CHECK(dev < 1e-12);
    CHECK(std::sqrt(nx) == doctest::Approx(std::sqrt(nhat)).epsilon(1e-12));
}

TEST_CASE("fft2 rejects non-power-of-two sizes") {
    cvec x(9);
    CHECK_THROWS_AS((void)fft2(x, 3), ShapeError);
}

TEST_CASE("sample_grf: determinism per seed, independence across seeds") {
    GrfSpec spec = GrfSpec::poisson_forcing(64, 99);
    Field a = sample_grf(spec);
    Field b = sample_grf(spec);
    CHECK(a.raw() == b.raw());
    CHECK(a.all_finite());

    // Broad spectrum: thousands of effective modes, so one pair of draws
    // already decorrelates well below 0.1.
    auto corr_of = [](const Field& u, const Field& v) {
        Field um = mean_project(u), vm = mean_project(v);
        return dot(um, vm) / (norm2(um) * norm2(vm));
    };
    GrfSpec broad{1.0, 1.0, 0.25, 64, 99};
    GrfSpec broad2 = broad;
    broad2.seed = 100;
    CHECK(std::abs(corr_of(sample_grf(broad), sample_grf(broad2))) < 0.1);

    // The forcing spectrum concentrates on a handful of modes; independence
    // shows up in the average correlation over many seed pairs.
    double acc = 0.0;
    const int pairs = 100;
    for (int k = 0; k < pairs; ++k) {
        GrfSpec s1 = GrfSpec::poisson_forcing(64, Rng::derive(1000, static_cast<std::uint64_t>(2 * k)));
        GrfSpec s2 = GrfSpec::poisson_forcing(64, Rng::derive(1000, static_cast<std::uint64_t>(2 * k + 1)));
        acc += corr_of(sample_grf(s1), sample_grf(s2));
    }
    CHECK(std::abs(acc / pairs) < 0.1);
}

TEST_CASE("sample_grf: per-point means stay inside the CLT band") {
    const int n = 16, draws = 10000;
    Field sum(Shape{1, n, n});
    Field sumsq(Shape{1, n, n});
    for (int k = 0; k < draws; ++k) {
        GrfSpec spec = GrfSpec::poisson_forcing(n, Rng::derive(555, static_cast<std::uint64_t>(k)));
        Field f = sample_grf(spec);
        for (std::int64_t i = 0; i < f.size(); ++i) {
            sum[i] += f[i];
            sumsq[i] += f[i] * f[i];
        }
    }
    for (std::int64_t i = 0; i < sum.size(); ++i) {
        const double m = sum[i] / draws;
        const double sd = std::sqrt(sumsq[i] / draws - m * m);
        CHECK(std::abs(m) < 4.0 * sd / std::sqrt(static_cast<double>(draws)));
    }
}

TEST_CASE("sample_grf: empirical spectral power ratio between modes") {
    const int n = 32, draws = 10000;
    const double shift = 49.0, exponent = 2.5;
    double p10 = 0.0, p20 = 0.0;
    for (int k = 0; k < draws; ++k) {
        GrfSpec spec{std::pow(7.0, 1.5), shift, exponent, n,
                     Rng::derive(777, static_cast<std::uint64_t>(k))};
        Field f = sample_grf(spec);
        cvec x(static_cast<std::size_t>(n) * n);
        for (std::int64_t i = 0; i < f.size(); ++i) x[static_cast<std::size_t>(i)] = {f[i], 0.0};
        cvec hat = fft2(x, n);
        p10 += std::norm(hat[static_cast<std::size_t>(1) * n + 0]);
        p20 += std::norm(hat[static_cast<std::size_t>(2) * n + 0]);
    }
    const double got = p10 / p20;
    const double want = std::pow((16.0 * M_PI * M_PI + shift) / (4.0 * M_PI * M_PI + shift), exponent);
    CHECK(std::abs(got / want - 1.0) < 0.05);
}

TEST_CASE("sample_grf rejects non-positive covariance parameters") {
    GrfSpec bad{1.0, -1.0, 2.0, 16, 1};
    CHECK_THROWS_AS((void)sample_grf(bad), ConfigError);
}

TEST_CASE("mean_project: constants, zero mean, idempotence") {
    Field c(Shape{1, 4, 4}, 2.5);
    CHECK(max_abs(mean_project(c)) == 0.0);

    Field f = oracles::random_field(Shape{1, 8, 8}, 5);
    Field p = mean_project(f);
    CHECK(std::abs(mean(p)) < 1e-14);
    CHECK(max_abs(mean_project(p) - p) < 1e-14);
}
