#pragma once

#include "lordnet/fdm.hpp"
#include "lordnet/field.hpp"
#include "lordnet/tape.hpp"

namespace lordnet::msr {

enum class ResidualKind { poisson_dirichlet, poisson_periodic, ns_liddriven, ns_periodic };

bool is_poisson(ResidualKind k);
bool is_periodic(ResidualKind k);
const char* kind_name(ResidualKind k);
ResidualKind kind_from_name(const std::string& name);

// A discretized-PDE residual definition: which equation set, on which grid,
// with which time-step constants. The residual of the matching
// finite-difference solution is zero up to solver tolerance.
struct ResidualSpec {
    ResidualKind kind = ResidualKind::poisson_periodic;
    fdm::GridSpec grid;
    fdm::NsParams ns;       // ns kinds only
    double cg_tol = fdm::kDefaultCgTol;

    void validate() const;
    // Spatial extent of the network's prediction (interior for wall grids).
    int prediction_extent() const;
};

// r = lap_h u_hat + f on the equation set. Dirichlet: u_hat is the
// interior-only prediction (1,m,m), padded with the frozen zero boundary
// before the stencil; f is the interior forcing. Periodic: full-grid u_hat
// and f, with f mean-projected.
DiffValue poisson_residual(DiffValue u_hat, const Field& f, const ResidualSpec& spec);

// r = omega(psi_next) - EulerUpdate(omega(psi_t), psi_t) on the interior
// equation set (all points for periodic grids). psi_t is the network input
// and is treated as a constant: gradients flow only through psi_next.
// psi_t is a full-grid field; psi_next is the prediction (interior-only for
// the lid-driven cavity).
DiffValue ns_residual(const Field& psi_t, DiffValue psi_next, const ResidualSpec& spec);

// Mean over the equation set of squared residuals.
DiffValue msr_loss(DiffValue residual);

// Mean of squared differences against a solved target.
DiffValue mse_loss(DiffValue pred, const Field& target);

}  // namespace lordnet::msr
