#include "lordnet/msr.hpp"

namespace lordnet::msr {

bool is_poisson(ResidualKind k) {
    return k == ResidualKind::poisson_dirichlet || k == ResidualKind::poisson_periodic;
}

bool is_periodic(ResidualKind k) {
    return k == ResidualKind::poisson_periodic || k == ResidualKind::ns_periodic;
}

const char* kind_name(ResidualKind k) {
    switch (k) {
        case ResidualKind::poisson_dirichlet: return "poisson_dirichlet";
        case ResidualKind::poisson_periodic: return "poisson_periodic";
        case ResidualKind::ns_liddriven: return "ns_liddriven";
        case ResidualKind::ns_periodic: return "ns_periodic";
    }
    return "?";
}

ResidualKind kind_from_name(const std::string& name) {
    if (name == "poisson_dirichlet") return ResidualKind::poisson_dirichlet;
    if (name == "poisson_periodic") return ResidualKind::poisson_periodic;
    if (name == "ns_liddriven") return ResidualKind::ns_liddriven;
    if (name == "ns_periodic") return ResidualKind::ns_periodic;
    throw ConfigError("unknown problem kind '" + name + "'");
}

void ResidualSpec::validate() const {
    grid.validate();
    const bool periodic_grid = grid.boundary == fdm::BoundaryKind::periodic;
    switch (kind) {
        case ResidualKind::poisson_periodic:
        case ResidualKind::ns_periodic:
            if (!periodic_grid) throw ConfigError("periodic residual kind requires a periodic grid");
            break;
        case ResidualKind::poisson_dirichlet:
            if (grid.boundary != fdm::BoundaryKind::dirichlet_zero)
                throw ConfigError("poisson_dirichlet requires a dirichlet_zero grid");
            break;
        case ResidualKind::ns_liddriven:
            if (grid.boundary != fdm::BoundaryKind::lid_driven)
                throw ConfigError("ns_liddriven requires a lid_driven grid");
            break;
    }
    if (!is_poisson(kind)) ns.validate();
    if (cg_tol <= 0.0) throw ConfigError("cg_tol must be positive");
}

int ResidualSpec::prediction_extent() const {
    return grid.periodic() ? grid.n : grid.n - 2;
}

// ---------------------------------------------------------------------------

static void check_prediction_shape(const Field& v, const ResidualSpec& spec, const char* what) {
    const int m = spec.prediction_extent();
    if (v.rank() != 3 || v.dim(0) != 1 || v.dim(1) != m || v.dim(2) != m)
        throw ShapeError(std::string(what) + ": prediction " + shape_str(v.shape()) + " expects (1," +
                         std::to_string(m) + "," + std::to_string(m) + ") for " + kind_name(spec.kind));
}

DiffValue poisson_residual(DiffValue u_hat, const Field& f, const ResidualSpec& spec) {
    spec.validate();
    if (!is_poisson(spec.kind)) throw ConfigError("poisson_residual: spec kind is not a poisson kind");
    check_prediction_shape(u_hat.value(), spec, "poisson_residual");
    const double d = spec.grid.delta();
    Tape& t = *u_hat.tape;

    if (spec.kind == ResidualKind::poisson_periodic) {
        if (!f.same_shape(u_hat.value()))
            throw ShapeError("poisson_residual: forcing " + shape_str(f.shape()) + " vs prediction " +
                             shape_str(u_hat.value().shape()));
        StencilKernel k = StencilKernel::laplacian5(BoundaryMode::periodic_wrap);
        DiffValue lap = stencil_apply(u_hat, k, d);
        return add(lap, t.input(mean_project(f)));
    }

    if (!f.same_shape(u_hat.value()))
        throw ShapeError("poisson_residual: forcing " + shape_str(f.shape()) + " vs prediction " +
                         shape_str(u_hat.value().shape()));
    StencilKernel k = StencilKernel::laplacian5(BoundaryMode::dirichlet_interior_only);
    DiffValue lap = stencil_apply(pad_interior(u_hat), k, d);
    return add(lap, t.input(f));
}

DiffValue ns_residual(const Field& psi_t, DiffValue psi_next, const ResidualSpec& spec) {
    spec.validate();
    if (is_poisson(spec.kind)) throw ConfigError("ns_residual: spec kind is not an ns kind");
    check_prediction_shape(psi_next.value(), spec, "ns_residual");
    const int n = spec.grid.n;
    if (psi_t.rank() != 3 || psi_t.dim(0) != 1 || psi_t.dim(1) != n || psi_t.dim(2) != n)
        throw ShapeError("ns_residual: psi_t " + shape_str(psi_t.shape()) + " expects full grid (1," +
                         std::to_string(n) + "," + std::to_string(n) + ")");
    const double d = spec.grid.delta();
    Tape& t = *psi_next.tape;

    // The time-t side is constant: omega(psi_t) with refreshed boundary rows,
    // advanced by the same forward-Euler formula as the solver.
    Field omega_t = fdm::vorticity_from_stream(psi_t, spec.grid);
    Field target = fdm::ns_euler_update(omega_t, psi_t, spec.grid, spec.ns);

    // Negated 5-point Laplacian: omega = -lap_h psi.
    StencilKernel neg_lap = StencilKernel::laplacian5(
        spec.kind == ResidualKind::ns_periodic ? BoundaryMode::periodic_wrap
                                               : BoundaryMode::dirichlet_interior_only);
    for (auto& c : neg_lap.coefficients) c = -c;

    if (spec.kind == ResidualKind::ns_periodic) {
        DiffValue omega_next = stencil_apply(psi_next, neg_lap, d);
        return sub(omega_next, t.input(target));
    }
    DiffValue omega_next = stencil_apply(pad_interior(psi_next), neg_lap, d);
    return sub(omega_next, t.input(crop_interior(target)));
}

DiffValue msr_loss(DiffValue residual) { return mean_square(residual); }

DiffValue mse_loss(DiffValue pred, const Field& target) {
    require_same_shape(pred.value(), target, "mse_loss");
    Tape& t = *pred.tape;
    return mean_square(sub(pred, t.input(target)));
}

}  // namespace lordnet::msr
