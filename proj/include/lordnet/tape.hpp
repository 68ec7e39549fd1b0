#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "lordnet/field.hpp"

namespace lordnet {

enum class BoundaryMode { periodic_wrap, dirichlet_interior_only, zero_pad };

// Fixed-coefficient cross-correlation kernel. Coefficients are constants
// and never trained; gradients flow through the input only.
struct StencilKernel {
    std::vector<std::pair<int, int>> offsets;  // (di, dj) spatial offsets
    std::vector<double> coefficients;
    BoundaryMode boundary = BoundaryMode::periodic_wrap;
    bool scale_by_delta_sq = true;  // result multiplied by 1/delta^2

    // 5-point Laplacian: u_{i,j-1} + u_{i-1,j} - 4 u_{i,j} + u_{i,j+1} + u_{i+1,j},
    // divided by delta^2.
    static StencilKernel laplacian5(BoundaryMode mode);
};

// Plain (non-differentiable) application, shared with the finite-difference
// solvers. Input (C,H,W); output (C,H,W) for periodic_wrap or (C,H-2,W-2)
// for dirichlet_interior_only.
Field apply_stencil(const Field& x, const StencilKernel& k, double delta);

// Exact GELU, x * Phi(x) with the error-function form.
double gelu_scalar(double x);
double gelu_grad_scalar(double x);

class Tape;

// Handle to a node on a tape. Cheap to copy; the tape owns the storage.
struct DiffValue {
    Tape* tape = nullptr;
    int id = -1;

    const Field& value() const;
    const Field& grad() const;
};

// Reverse-mode autodiff tape. Nodes are appended in evaluation order, so a
// single reverse sweep is a valid topological order. A tape is single-writer:
// build and differentiate it from one thread; independent batch items get
// independent tapes.
class Tape {
public:
    DiffValue input(Field v);        // constant leaf (data)
    DiffValue param(Field v);        // trainable leaf (tracked for grads)

    // Reverse accumulation from a scalar loss node. Grads are reset first,
    // so the call is idempotent and deterministic for a fixed tape.
    void backward(DiffValue loss);

    const Field& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    Field& grad(int id) { return nodes_[static_cast<std::size_t>(id)].grad; }
    const Field& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }

    int num_params() const { return static_cast<int>(param_ids_.size()); }
    // Gradient of the loss w.r.t. the k-th parameter leaf (creation order).
    const Field& param_grad(int k) const { return grad(param_ids_[static_cast<std::size_t>(k)]); }

    std::size_t num_nodes() const { return nodes_.size(); }

    // Used by the op implementations.
    DiffValue emit(Field value, std::function<void(Tape&, int)> back);

private:
    struct Node {
        Field value;
        Field grad;
        std::function<void(Tape&, int)> back;  // empty for leaves
    };
    std::deque<Node> nodes_;
    std::vector<int> param_ids_;
};

// ---------------------------------------------------------------------------
// Differentiable operations. Shapes must match exactly; scalar broadcasting
// is provided by scale(). Shape violations raise ShapeError.
// ---------------------------------------------------------------------------

DiffValue add(DiffValue a, DiffValue b);
DiffValue sub(DiffValue a, DiffValue b);
DiffValue hadamard(DiffValue a, DiffValue b);
DiffValue scale(DiffValue a, double s);
DiffValue gelu(DiffValue a);

// y[c,...] = eta[c,col] * x[c,...]; eta has shape (C,R).
DiffValue channel_scale(DiffValue x, DiffValue eta, int col);

// Per-point channel mix: x (C_in, S...), w (C_out, C_in), bias (C_out).
DiffValue conv1x1(DiffValue x, DiffValue w);
DiffValue conv1x1(DiffValue x, DiffValue w, DiffValue bias);

// Contracts spatial axis `axis` of x (C, S0, S1[, S2]) with the per-channel
// matrix w (C, I, O), I = length of that axis.
DiffValue axis_matmul(DiffValue x, DiffValue w, int axis);

// Constant-coefficient stencil; input (C,H,W).
DiffValue stencil_apply(DiffValue x, const StencilKernel& k, double delta);

// Learnable 3x3 dilated convolution, same spatial shape.
// boundary must be periodic_wrap or zero_pad.
DiffValue conv2d_dilated(DiffValue x, DiffValue w, int dilation, BoundaryMode boundary);

// (C,h,w) -> (C,h+2,w+2) with a zero ring; the frozen Dirichlet boundary.
DiffValue pad_interior(DiffValue x);

// Scalar (1/len) sum x_i^2.
DiffValue mean_square(DiffValue x);

// ---------------------------------------------------------------------------
// Gradient checking: autodiff vs central finite differences.
// ---------------------------------------------------------------------------

struct GradCheckProblem {
    std::vector<Shape> param_shapes;
    // Builds a scalar loss from parameter leaves already registered on the
    // tape. Must be deterministic; any data it needs is captured by value.
    std::function<DiffValue(Tape&, const std::vector<DiffValue>&)> build;
};

// Compares every parameter entry's autodiff gradient against a central
// finite difference (default step 1e-5) on parameters sampled from `seed`.
// Returns the max deviation |ad - fd| / max(|ad|, |fd|, 1).
double gradcheck(const GradCheckProblem& problem, std::uint64_t seed, double step = 1e-5);

}  // namespace lordnet
