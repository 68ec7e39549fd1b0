#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lordnet/field.hpp"
#include "lordnet/tape.hpp"

namespace lordnet::fdm {

inline constexpr double kDefaultCgTol = 1e-10;

enum class BoundaryKind { periodic, dirichlet_zero, lid_driven };

// Uniform n x n node grid on the unit square. Periodic grids identify node n
// with node 0 (delta = 1/n); Dirichlet node grids include both walls
// (delta = 1/(n-1)).
struct GridSpec {
    int n = 32;
    BoundaryKind boundary = BoundaryKind::periodic;
    double lid_speed = 0.0;  // U, lid_driven only

    double delta() const { return boundary == BoundaryKind::periodic ? 1.0 / n : 1.0 / (n - 1); }
    bool periodic() const { return boundary == BoundaryKind::periodic; }

    static GridSpec make_periodic(int n) { return {n, BoundaryKind::periodic, 0.0}; }
    static GridSpec make_dirichlet(int n) { return {n, BoundaryKind::dirichlet_zero, 0.0}; }
    static GridSpec make_lid_driven(int n, double u) { return {n, BoundaryKind::lid_driven, u}; }

    void validate() const;
};

struct NsParams {
    double reynolds = 1000.0;
    double dt = 1e-2;
    int steps = 1;

    void validate() const;
    // Explicit-scheme guard: dt <= delta^2 * Re / 4.
    std::optional<std::string> stability_warning(const GridSpec& grid) const;
};

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

struct CgResult {
    Field x;
    double residual = 0.0;  // ||A x - b||_2
    int iters = 0;
    bool converged = false;
};

using LinOp = std::function<Field(const Field&)>;

// Conjugate gradients from x0 = 0; stops at ||r||_2 <= tol * ||b||_2. A
// non-converged result is reported, never silently accepted.
CgResult cg_solve(const LinOp& apply_A, const Field& b, double tol, int max_iter);

// -lap_h u on the grid: full-grid wrap for periodic grids, interior system
// with the frozen zero boundary otherwise. Input and output are full (1,n,n)
// fields (boundary entries of the output are zero for wall grids).
Field apply_neg_laplacian(const Field& u, const GridSpec& grid);

// ---------------------------------------------------------------------------
// Poisson
// ---------------------------------------------------------------------------

// Solves -lap_h u = f. Dirichlet: u is zero on the boundary and the interior
// satisfies the 5-point system to CG tolerance. Periodic: f is mean-projected
// and u gauge-fixed to exactly zero mean. Throws NumericError on
// non-convergence.
Field poisson_solve(const Field& f, const GridSpec& grid, double tol = kDefaultCgTol);

// ---------------------------------------------------------------------------
// Vorticity-stream Navier-Stokes
// ---------------------------------------------------------------------------

// omega = -lap_h psi on the interior; wall grids fill the boundary rows from
// the stream function, with the -(2/delta) U term on the moving edge
// (j = n-1). Periodic grids wrap.
Field vorticity_from_stream(const Field& psi, const GridSpec& grid);

// Overwrites the four boundary rows of omega from psi (wall grids only).
void refresh_boundary_vorticity(Field& omega, const Field& psi, const GridSpec& grid);

// One forward-Euler step of the vorticity transport equation. Reads omega
// and psi at time t; writes the updated interior (wall grids leave the
// output boundary at zero; periodic grids update every point).
Field ns_euler_update(const Field& omega, const Field& psi, const GridSpec& grid, const NsParams& p);

struct NsStepResult {
    Field omega_next;
    Field psi_t;
};

// psi_t = poisson_solve(omega_t); boundary vorticity refreshed from psi_t;
// omega_next by the forward-Euler update.
NsStepResult ns_step(const Field& omega_t, const GridSpec& grid, const NsParams& p,
                     double tol = kDefaultCgTol);

// [psi^0, ..., psi^steps]; deterministic for fixed inputs.
std::vector<Field> ns_trajectory(const Field& omega_0, const GridSpec& grid, const NsParams& p,
                                 double tol = kDefaultCgTol);

// ---------------------------------------------------------------------------
// Inverse-operator rows (the long-range entanglement view)
// ---------------------------------------------------------------------------

// Row `index` of the inverse of the discrete -lap_h system, reshaped onto the
// grid. Dirichlet: index is a flat interior index in [0, (n-2)^2); the row is
// embedded in a full grid with zero boundary. Periodic: index in [0, n^2);
// the singular system is handled by the pseudo-inverse on the mean-zero
// subspace.
Field inverse_operator_row(int index, const GridSpec& grid, double tol = 1e-12);

}  // namespace lordnet::fdm
