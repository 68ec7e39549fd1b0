#include "lordnet/fdm.hpp"

#include <cmath>
#include <sstream>

#include "lordnet/randfield.hpp"

namespace lordnet::fdm {

void GridSpec::validate() const {
    if (n < 3) throw ConfigError("grid: n must be >= 3, got " + std::to_string(n));
    if (boundary != BoundaryKind::lid_driven && lid_speed != 0.0)
        throw ConfigError("grid: lid_speed only applies to lid_driven grids");
}

void NsParams::validate() const {
    if (reynolds <= 0.0) throw ConfigError("ns: reynolds must be positive");
    if (dt <= 0.0) throw ConfigError("ns: dt must be positive");
    if (steps < 0) throw ConfigError("ns: steps must be >= 0");
}

std::optional<std::string> NsParams::stability_warning(const GridSpec& grid) const {
    const double d = grid.delta();
    const double limit = d * d * reynolds / 4.0;
    if (dt <= limit) return std::nullopt;
    std::ostringstream os;
    os << "explicit scheme stability guard violated: dt=" << dt << " > delta^2*Re/4=" << limit;
    return os.str();
}

// ---------------------------------------------------------------------------
// CG
// ---------------------------------------------------------------------------

CgResult cg_solve(const LinOp& apply_A, const Field& b, double tol, int max_iter) {
    if (tol <= 0.0) throw ConfigError("cg_solve: tol must be positive");
    CgResult res;
    res.x = Field(b.shape());
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    Field r = b;
    Field p = r;
    double rs = dot(r, r);
    const double target = tol * bnorm;
    for (int it = 1; it <= max_iter; ++it) {
        Field Ap = apply_A(p);
        const double pAp = dot(p, Ap);
        if (pAp <= 0.0) throw NumericError("cg_solve: operator is not positive definite on this subspace");
        const double alpha = rs / pAp;
        axpy(alpha, p, res.x);
        axpy(-alpha, Ap, r);
        const double rs_new = dot(r, r);
        res.iters = it;
        if (std::sqrt(rs_new) <= target) {
            res.residual = std::sqrt(rs_new);
            res.converged = true;
            return res;
        }
        const double beta = rs_new / rs;
        for (std::int64_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
        rs = rs_new;
    }
    res.residual = std::sqrt(rs);
    res.converged = false;
    return res;
}

// ---------------------------------------------------------------------------
// Discrete Laplacian
// ---------------------------------------------------------------------------

static void check_grid_field(const Field& u, const GridSpec& grid, const char* what) {
    if (u.rank() != 3 || u.dim(0) != 1 || u.dim(1) != grid.n || u.dim(2) != grid.n)
        throw ShapeError(std::string(what) + ": field " + shape_str(u.shape()) + " does not match grid (1," +
                         std::to_string(grid.n) + "," + std::to_string(grid.n) + ")");
}

Field apply_neg_laplacian(const Field& u, const GridSpec& grid) {
    check_grid_field(u, grid, "apply_neg_laplacian");
    const double d = grid.delta();
    if (grid.periodic()) {
        StencilKernel k = StencilKernel::laplacian5(BoundaryMode::periodic_wrap);
        Field lap = apply_stencil(u, k, d);
        for (std::int64_t i = 0; i < lap.size(); ++i) lap[i] = -lap[i];
        return lap;
    }
    StencilKernel k = StencilKernel::laplacian5(BoundaryMode::dirichlet_interior_only);
    Field lap = apply_stencil(u, k, d);  // (1, n-2, n-2)
    Field out(u.shape());
    const int m = grid.n - 2;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) out.at(0, i + 1, j + 1) = -lap.at(0, i, j);
    return out;
}

// ---------------------------------------------------------------------------
// Poisson
// ---------------------------------------------------------------------------

static int default_max_iter(int unknowns) { return 10 * unknowns; }

Field poisson_solve(const Field& f, const GridSpec& grid, double tol) {
    grid.validate();
    check_grid_field(f, grid, "poisson_solve");
    const int n = grid.n;
    const double d = grid.delta();

    if (grid.periodic()) {
        Field b = mean_project(f);
        StencilKernel k = StencilKernel::laplacian5(BoundaryMode::periodic_wrap);
        LinOp A = [&k, d](const Field& u) {
            Field lap = apply_stencil(u, k, d);
            for (std::int64_t i = 0; i < lap.size(); ++i) lap[i] = -lap[i];
            return lap;
        };
        CgResult res = cg_solve(A, b, tol, default_max_iter(n * n));
        if (!res.converged)
            throw NumericError("poisson_solve: CG did not converge, residual " + std::to_string(res.residual) +
                               " after " + std::to_string(res.iters) + " iterations");
        return mean_project(res.x);
    }

    // Interior system with the frozen zero boundary.
    const int m = n - 2;
    Field b = crop_interior(f);
    StencilKernel k = StencilKernel::laplacian5(BoundaryMode::dirichlet_interior_only);
    LinOp A = [&k, d](const Field& u_int) {
        Field lap = apply_stencil(pad_with_zero_ring(u_int), k, d);
        for (std::int64_t i = 0; i < lap.size(); ++i) lap[i] = -lap[i];
        return lap;
    };
    CgResult res = cg_solve(A, b, tol, default_max_iter(m * m));
    if (!res.converged)
        throw NumericError("poisson_solve: CG did not converge, residual " + std::to_string(res.residual) +
                           " after " + std::to_string(res.iters) + " iterations");
    return pad_with_zero_ring(res.x);
}

// ---------------------------------------------------------------------------
// Vorticity / stream function
// ---------------------------------------------------------------------------

void refresh_boundary_vorticity(Field& omega, const Field& psi, const GridSpec& grid) {
    if (grid.periodic()) return;
    check_grid_field(omega, grid, "refresh_boundary_vorticity");
    check_grid_field(psi, grid, "refresh_boundary_vorticity");
    const int n = grid.n;
    const double d = grid.delta();
    const double c = -2.0 / (d * d);
    const double lid = grid.boundary == BoundaryKind::lid_driven ? -2.0 / d * grid.lid_speed : 0.0;
    // Four walls, in order; the later rows own the corners (corner values are
    // never read by the interior update).
    for (int i = 0; i < n; ++i) omega.at(0, i, 0) = c * psi.at(0, i, 1);
    for (int i = 0; i < n; ++i) omega.at(0, i, n - 1) = c * psi.at(0, i, n - 2) + lid;
    for (int j = 0; j < n; ++j) omega.at(0, 0, j) = c * psi.at(0, 1, j);
    for (int j = 0; j < n; ++j) omega.at(0, n - 1, j) = c * psi.at(0, n - 2, j);
}

Field vorticity_from_stream(const Field& psi, const GridSpec& grid) {
    check_grid_field(psi, grid, "vorticity_from_stream");
    Field omega = apply_neg_laplacian(psi, grid);
    refresh_boundary_vorticity(omega, psi, grid);
    return omega;
}

Field ns_euler_update(const Field& omega, const Field& psi, const GridSpec& grid, const NsParams& p) {
    check_grid_field(omega, grid, "ns_euler_update");
    check_grid_field(psi, grid, "ns_euler_update");
    const int n = grid.n;
    const double d = grid.delta();
    const double jac_c = p.dt / (4.0 * d * d);
    const double visc_c = p.dt / (p.reynolds * d * d);
    Field out(omega.shape());

    auto update_at = [&](int i, int j, auto at) {
        const double psi_jp = at(psi, i, j + 1), psi_jm = at(psi, i, j - 1);
        const double psi_ip = at(psi, i + 1, j), psi_im = at(psi, i - 1, j);
        const double w_ip = at(omega, i + 1, j), w_im = at(omega, i - 1, j);
        const double w_jp = at(omega, i, j + 1), w_jm = at(omega, i, j - 1);
        const double w = at(omega, i, j);
        const double jac = (psi_jp - psi_jm) * (w_ip - w_im) - (psi_ip - psi_im) * (w_jp - w_jm);
        const double visc = w_ip + w_im + w_jp + w_jm - 4.0 * w;
        return w - jac_c * jac + visc_c * visc;
    };

    if (grid.periodic()) {
        auto at = [n](const Field& f, int i, int j) {
            return f.at(0, (i % n + n) % n, (j % n + n) % n);
        };
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) out.at(0, i, j) = update_at(i, j, at);
    } else {
        auto at = [](const Field& f, int i, int j) { return f.at(0, i, j); };
        for (int i = 1; i < n - 1; ++i)
            for (int j = 1; j < n - 1; ++j) out.at(0, i, j) = update_at(i, j, at);
    }
    return out;
}

NsStepResult ns_step(const Field& omega_t, const GridSpec& grid, const NsParams& p, double tol) {
    p.validate();
    Field psi_t = poisson_solve(omega_t, grid, tol);
    Field omega_work = omega_t;
    refresh_boundary_vorticity(omega_work, psi_t, grid);
    Field omega_next = ns_euler_update(omega_work, psi_t, grid, p);
    return {std::move(omega_next), std::move(psi_t)};
}

std::vector<Field> ns_trajectory(const Field& omega_0, const GridSpec& grid, const NsParams& p, double tol) {
    p.validate();
    if (p.steps < 1) throw ConfigError("ns_trajectory: steps must be >= 1");
    std::vector<Field> psis;
    psis.reserve(static_cast<std::size_t>(p.steps) + 1);
    Field omega = omega_0;
    for (int t = 0; t < p.steps; ++t) {
        NsStepResult step = ns_step(omega, grid, p, tol);
        psis.push_back(std::move(step.psi_t));
        omega = std::move(step.omega_next);
    }
    psis.push_back(poisson_solve(omega, grid, tol));
    return psis;
}

// ---------------------------------------------------------------------------
// Inverse-operator rows
// ---------------------------------------------------------------------------

static bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

Field inverse_operator_row(int index, const GridSpec& grid, double tol) {
    grid.validate();
    const int n = grid.n;
    const double d = grid.delta();

    if (grid.periodic()) {
        if (index < 0 || index >= n * n) throw ShapeError("inverse_operator_row: index out of range");
        if (is_pow2(n)) {
            // Spectral pseudo-inverse on the mean-zero subspace.
            rf::cvec e(static_cast<std::size_t>(n) * n, {0.0, 0.0});
            e[static_cast<std::size_t>(index)] = {1.0, 0.0};
            rf::cvec hat = rf::fft2(e, n);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b) {
                    const double lam = (2.0 - 2.0 * std::cos(2.0 * M_PI * a / n) + 2.0 -
                                        2.0 * std::cos(2.0 * M_PI * b / n)) /
                                       (d * d);
                    auto& z = hat[static_cast<std::size_t>(a) * n + b];
                    z = (a == 0 && b == 0) ? std::complex<double>(0.0, 0.0) : z / lam;
                }
            rf::cvec row = rf::ifft2(hat, n);
            Field out(Shape{1, n, n});
            for (std::size_t i = 0; i < row.size(); ++i) out[static_cast<std::int64_t>(i)] = row[i].real();
            return out;
        }
        Field e(Shape{1, n, n});
        e[index] = 1.0;
        Field b = mean_project(e);
        StencilKernel k = StencilKernel::laplacian5(BoundaryMode::periodic_wrap);
        LinOp A = [&k, d](const Field& u) {
            Field lap = apply_stencil(u, k, d);
            for (std::int64_t i = 0; i < lap.size(); ++i) lap[i] = -lap[i];
            return lap;
        };
        CgResult res = cg_solve(A, b, tol, default_max_iter(n * n));
        if (!res.converged) throw NumericError("inverse_operator_row: CG did not converge");
        return mean_project(res.x);
    }

    const int m = n - 2;
    if (index < 0 || index >= m * m) throw ShapeError("inverse_operator_row: interior index out of range");
    Field e(Shape{1, m, m});
    e[index] = 1.0;
    StencilKernel k = StencilKernel::laplacian5(BoundaryMode::dirichlet_interior_only);
    LinOp A = [&k, d](const Field& u_int) {
        Field lap = apply_stencil(pad_with_zero_ring(u_int), k, d);
        for (std::int64_t i = 0; i < lap.size(); ++i) lap[i] = -lap[i];
        return lap;
    };
    CgResult res = cg_solve(A, e, tol, default_max_iter(m * m));
    if (!res.converged) throw NumericError("inverse_operator_row: CG did not converge");
    return pad_with_zero_ring(res.x);
}

}  // namespace lordnet::fdm
