#include "lordnet/tape.hpp"

#include <cmath>
#include <string>

#include "lordnet/rng.hpp"

namespace lordnet {

namespace {

inline int wrap(int i, int n) {
    int r = i % n;
    return r < 0 ? r + n : r;
}

}  // namespace

// ---------------------------------------------------------------------------
// StencilKernel
// ---------------------------------------------------------------------------

StencilKernel StencilKernel::laplacian5(BoundaryMode mode) {
    StencilKernel k;
    k.offsets = {{0, -1}, {-1, 0}, {0, 0}, {0, 1}, {1, 0}};
    k.coefficients = {1.0, 1.0, -4.0, 1.0, 1.0};
    k.boundary = mode;
    k.scale_by_delta_sq = true;
    return k;
}

static void check_stencil(const Field& x, const StencilKernel& k) {
    if (x.rank() != 3) throw ShapeError("stencil_apply expects (C,H,W), got " + shape_str(x.shape()));
    if (k.offsets.size() != k.coefficients.size())
        throw ShapeError("stencil offsets/coefficients length mismatch");
    if (k.boundary == BoundaryMode::zero_pad)
        throw ConfigError("stencil_apply supports periodic_wrap or dirichlet_interior_only");
    if (k.boundary == BoundaryMode::dirichlet_interior_only) {
        if (x.dim(1) < 3 || x.dim(2) < 3)
            throw ShapeError("grid " + shape_str(x.shape()) + " smaller than stencil reach in dirichlet mode");
        for (auto [di, dj] : k.offsets)
            if (di < -1 || di > 1 || dj < -1 || dj > 1)
                throw ShapeError("stencil reach exceeds the one-ring interior margin");
    }
}

Field apply_stencil(const Field& x, const StencilKernel& k, double delta) {
    check_stencil(x, k);
    const int C = x.dim(0), H = x.dim(1), W = x.dim(2);
    const double s = k.scale_by_delta_sq ? 1.0 / (delta * delta) : 1.0;
    const int m = static_cast<int>(k.offsets.size());

    if (k.boundary == BoundaryMode::periodic_wrap) {
        Field y(x.shape());
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < H; ++i)
                for (int j = 0; j < W; ++j) {
                    double acc = 0.0;
                    for (int t = 0; t < m; ++t)
                        acc += k.coefficients[static_cast<std::size_t>(t)] *
                               x.at(c, wrap(i + k.offsets[static_cast<std::size_t>(t)].first, H),
                                    wrap(j + k.offsets[static_cast<std::size_t>(t)].second, W));
                    y.at(c, i, j) = s * acc;
                }
        return y;
    }
    Field y(Shape{C, H - 2, W - 2});
    for (int c = 0; c < C; ++c)
        for (int i = 1; i < H - 1; ++i)
            for (int j = 1; j < W - 1; ++j) {
                double acc = 0.0;
                for (int t = 0; t < m; ++t)
                    acc += k.coefficients[static_cast<std::size_t>(t)] *
                           x.at(c, i + k.offsets[static_cast<std::size_t>(t)].first,
                                j + k.offsets[static_cast<std::size_t>(t)].second);
                y.at(c, i - 1, j - 1) = s * acc;
            }
    return y;
}

// ---------------------------------------------------------------------------
// GELU
// ---------------------------------------------------------------------------

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad_scalar(double x) {
    const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return 0.5 * (1.0 + std::erf(x * M_SQRT1_2)) + x * phi;
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

const Field& DiffValue::value() const { return tape->value(id); }
const Field& DiffValue::grad() const { return tape->grad(id); }

DiffValue Tape::input(Field v) {
    Field g(v.shape());
    nodes_.push_back(Node{std::move(v), std::move(g), {}});
    return DiffValue{this, static_cast<int>(nodes_.size()) - 1};
}

DiffValue Tape::param(Field v) {
    DiffValue d = input(std::move(v));
    param_ids_.push_back(d.id);
    return d;
}

DiffValue Tape::emit(Field value, std::function<void(Tape&, int)> back) {
    Field g(value.shape());
    nodes_.push_back(Node{std::move(value), std::move(g), std::move(back)});
    return DiffValue{this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(DiffValue loss) {
    if (loss.tape != this || loss.id < 0) throw ShapeError("backward: loss not on this tape");
    if (value(loss.id).size() != 1)
        throw ShapeError("backward: loss must be scalar, got " + shape_str(value(loss.id).shape()));
    if (nodes_.empty()) throw ShapeError("backward: empty tape");
    for (auto& n : nodes_) std::fill(n.grad.raw().begin(), n.grad.raw().end(), 0.0);
    nodes_[static_cast<std::size_t>(loss.id)].grad[0] = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        auto& n = nodes_[static_cast<std::size_t>(id)];
        if (n.back) n.back(*this, id);
    }
}

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

static void check_same_tape(DiffValue a, DiffValue b, const char* what) {
    if (a.tape == nullptr || a.tape != b.tape)
        throw ShapeError(std::string(what) + ": operands on different tapes");
}

DiffValue add(DiffValue a, DiffValue b) {
    check_same_tape(a, b, "add");
    require_same_shape(a.value(), b.value(), "add");
    Field y = a.value() + b.value();
    int ia = a.id, ib = b.id;
    return a.tape->emit(std::move(y), [ia, ib](Tape& t, int self) {
        axpy(1.0, t.grad(self), t.grad(ia));
        axpy(1.0, t.grad(self), t.grad(ib));
    });
}

DiffValue sub(DiffValue a, DiffValue b) {
    check_same_tape(a, b, "sub");
    require_same_shape(a.value(), b.value(), "sub");
    Field y = a.value() - b.value();
    int ia = a.id, ib = b.id;
    return a.tape->emit(std::move(y), [ia, ib](Tape& t, int self) {
        axpy(1.0, t.grad(self), t.grad(ia));
        axpy(-1.0, t.grad(self), t.grad(ib));
    });
}

DiffValue hadamard(DiffValue a, DiffValue b) {
    check_same_tape(a, b, "hadamard");
    require_same_shape(a.value(), b.value(), "hadamard");
    Field y = hadamard(a.value(), b.value());
    int ia = a.id, ib = b.id;
    return a.tape->emit(std::move(y), [ia, ib](Tape& t, int self) {
        const Field& gy = t.grad(self);
        const Field& va = t.value(ia);
        const Field& vb = t.value(ib);
        Field& ga = t.grad(ia);
        Field& gb = t.grad(ib);
        for (std::int64_t i = 0; i < gy.size(); ++i) {
            ga[i] += gy[i] * vb[i];
            gb[i] += gy[i] * va[i];
        }
    });
}

DiffValue scale(DiffValue a, double s) {
    Field y = a.value() * s;
    int ia = a.id;
    return a.tape->emit(std::move(y), [ia, s](Tape& t, int self) {
        axpy(s, t.grad(self), t.grad(ia));
    });
}

DiffValue gelu(DiffValue a) {
    Field y(a.value().shape());
    for (std::int64_t i = 0; i < y.size(); ++i) y[i] = gelu_scalar(a.value()[i]);
    int ia = a.id;
    return a.tape->emit(std::move(y), [ia](Tape& t, int self) {
        const Field& gy = t.grad(self);
        const Field& x = t.value(ia);
        Field& gx = t.grad(ia);
        for (std::int64_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * gelu_grad_scalar(x[i]);
    });
}

DiffValue channel_scale(DiffValue x, DiffValue eta, int col) {
    check_same_tape(x, eta, "channel_scale");
    const Field& xv = x.value();
    const Field& ev = eta.value();
    if (ev.rank() != 2 || ev.dim(0) != xv.dim(0) || col < 0 || col >= ev.dim(1))
        throw ShapeError("channel_scale: eta " + shape_str(ev.shape()) + " incompatible with x " +
                         shape_str(xv.shape()) + " col " + std::to_string(col));
    const int C = xv.dim(0);
    const std::int64_t S = xv.size() / C;
    const int R = ev.dim(1);
    Field y(xv.shape());
    for (int c = 0; c < C; ++c) {
        const double e = ev[static_cast<std::int64_t>(c) * R + col];
        for (std::int64_t s = 0; s < S; ++s) y[c * S + s] = e * xv[c * S + s];
    }
    int ix = x.id, ie = eta.id;
    return x.tape->emit(std::move(y), [ix, ie, col, C, S, R](Tape& t, int self) {
        const Field& gy = t.grad(self);
        const Field& xv2 = t.value(ix);
        const Field& ev2 = t.value(ie);
        Field& gx = t.grad(ix);
        Field& ge = t.grad(ie);
        for (int c = 0; c < C; ++c) {
            const double e = ev2[static_cast<std::int64_t>(c) * R + col];
            double acc = 0.0;
            for (std::int64_t s = 0; s < S; ++s) {
                gx[c * S + s] += e * gy[c * S + s];
                acc += xv2[c * S + s] * gy[c * S + s];
            }
            ge[static_cast<std::int64_t>(c) * R + col] += acc;
        }
    });
}

// ---------------------------------------------------------------------------
// conv1x1
// ---------------------------------------------------------------------------

static DiffValue conv1x1_impl(DiffValue x, DiffValue w, const DiffValue* bias) {
    check_same_tape(x, w, "conv1x1");
    const Field& xv = x.value();
    const Field& wv = w.value();
    if (xv.rank() < 2 || wv.rank() != 2 || wv.dim(1) != xv.dim(0))
        throw ShapeError("conv1x1: channel mismatch, x " + shape_str(xv.shape()) + " w " +
                         shape_str(wv.shape()));
    const int Ci = xv.dim(0), Co = wv.dim(0);
    const std::int64_t S = xv.size() / Ci;
    if (bias) {
        const Field& bv = bias->value();
        if (bv.rank() != 1 || bv.dim(0) != Co)
            throw ShapeError("conv1x1: bias shape " + shape_str(bv.shape()) + " expects (" +
                             std::to_string(Co) + ")");
    }
    Shape out_shape = xv.shape();
    out_shape[0] = Co;
    Field y(out_shape);
    const double* xp = xv.data();
    const double* wp = wv.data();
    double* yp = y.data();
    for (int o = 0; o < Co; ++o) {
        double* yo = yp + static_cast<std::int64_t>(o) * S;
        if (bias) {
            const double b = bias->value()[o];
            for (std::int64_t s = 0; s < S; ++s) yo[s] = b;
        }
        for (int i = 0; i < Ci; ++i) {
            const double coef = wp[static_cast<std::int64_t>(o) * Ci + i];
            const double* xi = xp + static_cast<std::int64_t>(i) * S;
            for (std::int64_t s = 0; s < S; ++s) yo[s] += coef * xi[s];
        }
    }
    int ix = x.id, iw = w.id, ib = bias ? bias->id : -1;
    return x.tape->emit(std::move(y), [ix, iw, ib, Ci, Co, S](Tape& t, int self) {
        const Field& gy = t.grad(self);
        const Field& xv2 = t.value(ix);
        const Field& wv2 = t.value(iw);
        Field& gx = t.grad(ix);
        Field& gw = t.grad(iw);
        const double* gyp = gy.data();
        const double* xp2 = xv2.data();
        const double* wp2 = wv2.data();
        double* gxp = gx.data();
        double* gwp = gw.data();
        for (int o = 0; o < Co; ++o) {
            const double* gyo = gyp + static_cast<std::int64_t>(o) * S;
            for (int i = 0; i < Ci; ++i) {
                const double coef = wp2[static_cast<std::int64_t>(o) * Ci + i];
                const double* xi = xp2 + static_cast<std::int64_t>(i) * S;
                double* gxi = gxp + static_cast<std::int64_t>(i) * S;
                double acc = 0.0;
                for (std::int64_t s = 0; s < S; ++s) {
                    gxi[s] += coef * gyo[s];
                    acc += gyo[s] * xi[s];
                }
                gwp[static_cast<std::int64_t>(o) * Ci + i] += acc;
            }
            if (ib >= 0) {
                double acc = 0.0;
                for (std::int64_t s = 0; s < S; ++s) acc += gyo[s];
                t.grad(ib)[o] += acc;
            }
        }
    });
}

DiffValue conv1x1(DiffValue x, DiffValue w) { return conv1x1_impl(x, w, nullptr); }
DiffValue conv1x1(DiffValue x, DiffValue w, DiffValue bias) { return conv1x1_impl(x, w, &bias); }

// ---------------------------------------------------------------------------
// axis_matmul
// ---------------------------------------------------------------------------

DiffValue axis_matmul(DiffValue x, DiffValue w, int axis) {
    check_same_tape(x, w, "axis_matmul");
    const Field& xv = x.value();
    const Field& wv = w.value();
    const int spatial_rank = xv.rank() - 1;
    if (spatial_rank < 1 || axis < 0 || axis >= spatial_rank)
        throw ShapeError("axis_matmul: axis " + std::to_string(axis) + " out of range for " +
                         shape_str(xv.shape()));
    const int C = xv.dim(0);
    const int I = xv.dim(axis + 1);
    if (wv.rank() != 3 || wv.dim(0) != C || wv.dim(1) != I)
        throw ShapeError("axis_matmul: weight " + shape_str(wv.shape()) + " does not contract axis " +
                         std::to_string(axis) + " of " + shape_str(xv.shape()));
    const int O = wv.dim(2);
    std::int64_t pre = 1, post = 1;
    for (int a = 0; a < axis; ++a) pre *= xv.dim(a + 1);
    for (int a = axis + 1; a < spatial_rank; ++a) post *= xv.dim(a + 1);

    Shape out_shape = xv.shape();
    out_shape[static_cast<std::size_t>(axis + 1)] = O;
    Field y(out_shape);
    const double* xp = xv.data();
    const double* wp = wv.data();
    double* yp = y.data();
    for (int c = 0; c < C; ++c) {
        const double* wc = wp + static_cast<std::int64_t>(c) * I * O;
        for (std::int64_t p = 0; p < pre; ++p) {
            const double* xcp = xp + ((static_cast<std::int64_t>(c) * pre + p) * I) * post;
            double* ycp = yp + ((static_cast<std::int64_t>(c) * pre + p) * O) * post;
            for (int i = 0; i < I; ++i) {
                const double* xi = xcp + static_cast<std::int64_t>(i) * post;
                for (int o = 0; o < O; ++o) {
                    const double coef = wc[static_cast<std::int64_t>(i) * O + o];
                    double* yo = ycp + static_cast<std::int64_t>(o) * post;
                    for (std::int64_t q = 0; q < post; ++q) yo[q] += coef * xi[q];
                }
            }
        }
    }
    int ix = x.id, iw = w.id;
    return x.tape->emit(std::move(y), [ix, iw, C, I, O, pre, post](Tape& t, int self) {
        const Field& gy = t.grad(self);
        const Field& xv2 = t.value(ix);
        const Field& wv2 = t.value(iw);
        Field& gx = t.grad(ix);
        Field& gw = t.grad(iw);
        const double* gyp = gy.data();
        const double* xp2 = xv2.data();
        const double* wp2 = wv2.data();
        double* gxp = gx.data();
        double* gwp = gw.data();
        for (int c = 0; c < C; ++c) {
            const double* wc = wp2 + static_cast<std::int64_t>(c) * I * O;
            double* gwc = gwp + static_cast<std::int64_t>(c) * I * O;
            for (std::int64_t p = 0; p < pre; ++p) {
                const double* xcp = xp2 + ((static_cast<std::int64_t>(c) * pre + p) * I) * post;
                double* gxcp = gxp + ((static_cast<std::int64_t>(c) * pre + p) * I) * post;
                const double* gycp = gyp + ((static_cast<std::int64_t>(c) * pre + p) * O) * post;
                for (int i = 0; i < I; ++i) {
                    double* gxi = gxcp + static_cast<std::int64_t>(i) * post;
                    const double* xi = xcp + static_cast<std::int64_t>(i) * post;
                    for (int o = 0; o < O; ++o) {
                        const double coef = wc[static_cast<std::int64_t>(i) * O + o];
                        const double* gyo = gycp + static_cast<std::int64_t>(o) * post;
                        double acc = 0.0;
                        for (std::int64_t q = 0; q < post; ++q) {
                            gxi[q] += coef * gyo[q];
                            acc += xi[q] * gyo[q];
                        }
                        gwc[static_cast<std::int64_t>(i) * O + o] += acc;
                    }
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// stencil_apply (differentiable wrapper; coefficients are constants)
// ---------------------------------------------------------------------------

DiffValue stencil_apply(DiffValue x, const StencilKernel& k, double delta) {
    Field y = apply_stencil(x.value(), k, delta);
    const int C = x.value().dim(0), H = x.value().dim(1), W = x.value().dim(2);
    const double s = k.scale_by_delta_sq ? 1.0 / (delta * delta) : 1.0;
    StencilKernel kc = k;  // captured by value
    int ix = x.id;
    return x.tape->emit(std::move(y), [ix, kc, s, C, H, W](Tape& t, int self) {
        const Field& gy = t.grad(self);
        Field& gx = t.grad(ix);
        const int m = static_cast<int>(kc.offsets.size());
        if (kc.boundary == BoundaryMode::periodic_wrap) {
            // gx[q] = s * sum_t c_t * gy[q - off_t] (wrapped)
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < H; ++i)
                    for (int j = 0; j < W; ++j) {
                        double acc = 0.0;
                        for (int tt = 0; tt < m; ++tt)
                            acc += kc.coefficients[static_cast<std::size_t>(tt)] *
                                   gy.at(c, wrap(i - kc.offsets[static_cast<std::size_t>(tt)].first, H),
                                         wrap(j - kc.offsets[static_cast<std::size_t>(tt)].second, W));
                        gx.at(c, i, j) += s * acc;
                    }
        } else {
            // gy lives on the (H-2)x(W-2) interior; zero outside.
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < H; ++i)
                    for (int j = 0; j < W; ++j) {
                        double acc = 0.0;
                        for (int tt = 0; tt < m; ++tt) {
                            const int oi = i - kc.offsets[static_cast<std::size_t>(tt)].first - 1;
                            const int oj = j - kc.offsets[static_cast<std::size_t>(tt)].second - 1;
                            if (oi >= 0 && oi < H - 2 && oj >= 0 && oj < W - 2)
                                acc += kc.coefficients[static_cast<std::size_t>(tt)] * gy.at(c, oi, oj);
                        }
                        gx.at(c, i, j) += s * acc;
                    }
        }
    });
}

// ---------------------------------------------------------------------------
// conv2d_dilated
// ---------------------------------------------------------------------------

DiffValue conv2d_dilated(DiffValue x, DiffValue w, int dilation, BoundaryMode boundary) {
    check_same_tape(x, w, "conv2d_dilated");
    const Field& xv = x.value();
    const Field& wv = w.value();
    if (xv.rank() != 3) throw ShapeError("conv2d_dilated expects x (C,H,W), got " + shape_str(xv.shape()));
    if (wv.rank() != 4 || wv.dim(1) != xv.dim(0) || wv.dim(2) != 3 || wv.dim(3) != 3)
        throw ShapeError("conv2d_dilated: weight " + shape_str(wv.shape()) + " expects (Co," +
                         std::to_string(xv.dim(0)) + ",3,3)");
    if (dilation < 1) throw ConfigError("conv2d_dilated: dilation must be >= 1");
    if (boundary == BoundaryMode::dirichlet_interior_only)
        throw ConfigError("conv2d_dilated supports periodic_wrap or zero_pad");
    const bool periodic = boundary == BoundaryMode::periodic_wrap;
    const int Ci = xv.dim(0), H = xv.dim(1), W = xv.dim(2), Co = wv.dim(0);
    const int d = dilation;

    Field y(Shape{Co, H, W});
    for (int o = 0; o < Co; ++o)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                double acc = 0.0;
                for (int ci = 0; ci < Ci; ++ci)
                    for (int p = -1; p <= 1; ++p)
                        for (int q = -1; q <= 1; ++q) {
                            int ii = i + p * d, jj = j + q * d;
                            double xval;
                            if (periodic) {
                                xval = xv.at(ci, wrap(ii, H), wrap(jj, W));
                            } else {
                                xval = (ii >= 0 && ii < H && jj >= 0 && jj < W) ? xv.at(ci, ii, jj) : 0.0;
                            }
                            acc += wv[((static_cast<std::int64_t>(o) * Ci + ci) * 3 + (p + 1)) * 3 + (q + 1)] * xval;
                        }
                y.at(o, i, j) = acc;
            }

    int ix = x.id, iw = w.id;
    return x.tape->emit(std::move(y), [ix, iw, Ci, Co, H, W, d, periodic](Tape& t, int self) {
        const Field& gy = t.grad(self);
        const Field& xv2 = t.value(ix);
        const Field& wv2 = t.value(iw);
        Field& gx = t.grad(ix);
        Field& gw = t.grad(iw);
        // gx[ci,a,b] = sum_{o,p,q} w[o,ci,p,q] * gy[o, a - p*d, b - q*d]
        for (int ci = 0; ci < Ci; ++ci)
            for (int a = 0; a < H; ++a)
                for (int b = 0; b < W; ++b) {
                    double acc = 0.0;
                    for (int o = 0; o < Co; ++o)
                        for (int p = -1; p <= 1; ++p)
                            for (int q = -1; q <= 1; ++q) {
                                int ii = a - p * d, jj = b - q * d;
                                double g;
                                if (periodic) {
                                    g = gy.at(o, wrap(ii, H), wrap(jj, W));
                                } else {
                                    g = (ii >= 0 && ii < H && jj >= 0 && jj < W) ? gy.at(o, ii, jj) : 0.0;
                                }
                                acc += wv2[((static_cast<std::int64_t>(o) * Ci + ci) * 3 + (p + 1)) * 3 + (q + 1)] * g;
                            }
                    gx.at(ci, a, b) += acc;
                }
        // gw[o,ci,p,q] = sum_{i,j} gy[o,i,j] * x[ci, i + p*d, j + q*d]
        for (int o = 0; o < Co; ++o)
            for (int ci = 0; ci < Ci; ++ci)
                for (int p = -1; p <= 1; ++p)
                    for (int q = -1; q <= 1; ++q) {
                        double acc = 0.0;
                        for (int i = 0; i < H; ++i)
                            for (int j = 0; j < W; ++j) {
                                int ii = i + p * d, jj = j + q * d;
                                double xval;
                                if (periodic) {
                                    xval = xv2.at(ci, wrap(ii, H), wrap(jj, W));
                                } else {
                                    xval = (ii >= 0 && ii < H && jj >= 0 && jj < W) ? xv2.at(ci, ii, jj) : 0.0;
                                }
                                acc += gy.at(o, i, j) * xval;
                            }
                        gw[((static_cast<std::int64_t>(o) * Ci + ci) * 3 + (p + 1)) * 3 + (q + 1)] += acc;
                    }
    });
}

// ---------------------------------------------------------------------------
// pad_interior / mean_square
// ---------------------------------------------------------------------------

DiffValue pad_interior(DiffValue x) {
    const Field& xv = x.value();
    if (xv.rank() != 3) throw ShapeError("pad_interior expects (C,h,w), got " + shape_str(xv.shape()));
    const int C = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
    Field y(Shape{C, h + 2, w + 2});
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) y.at(c, i + 1, j + 1) = xv.at(c, i, j);
    int ix = x.id;
    return x.tape->emit(std::move(y), [ix, C, h, w](Tape& t, int self) {
        const Field& gy = t.grad(self);
        Field& gx = t.grad(ix);
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < w; ++j) gx.at(c, i, j) += gy.at(c, i + 1, j + 1);
    });
}

DiffValue mean_square(DiffValue x) {
    const Field& xv = x.value();
    if (xv.empty()) throw ShapeError("mean_square of empty tensor");
    const std::int64_t N = xv.size();
    double acc = 0.0;
    for (std::int64_t i = 0; i < N; ++i) acc += xv[i] * xv[i];
    int ix = x.id;
    return x.tape->emit(Field::scalar(acc / static_cast<double>(N)), [ix, N](Tape& t, int self) {
        const double g = t.grad(self)[0];
        const Field& v = t.value(ix);
        Field& gx = t.grad(ix);
        const double c = 2.0 * g / static_cast<double>(N);
        for (std::int64_t i = 0; i < N; ++i) gx[i] += c * v[i];
    });
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

namespace {

double eval_loss(const GradCheckProblem& p, const std::vector<Field>& params) {
    Tape t;
    std::vector<DiffValue> leaves;
    leaves.reserve(params.size());
    for (const auto& f : params) leaves.push_back(t.param(f));
    DiffValue loss = p.build(t, leaves);
    if (loss.value().size() != 1) throw ShapeError("gradcheck: loss must be scalar");
    return loss.value()[0];
}

}  // namespace

double gradcheck(const GradCheckProblem& problem, std::uint64_t seed, double step) {
    Rng rng(seed);
    std::vector<Field> params;
    params.reserve(problem.param_shapes.size());
    for (const auto& shape : problem.param_shapes) {
        Field f(shape);
        for (std::int64_t i = 0; i < f.size(); ++i) f[i] = 0.6 * rng.normal();
        params.push_back(std::move(f));
    }

    Tape t;
    std::vector<DiffValue> leaves;
    for (const auto& f : params) leaves.push_back(t.param(f));
    DiffValue loss = problem.build(t, leaves);
    if (loss.value().size() != 1) throw ShapeError("gradcheck: loss must be scalar");
    t.backward(loss);
    std::vector<Field> autodiff;
    for (int k = 0; k < t.num_params(); ++k) autodiff.push_back(t.param_grad(k));

    double max_dev = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        for (std::int64_t i = 0; i < params[k].size(); ++i) {
            const double orig = params[k][i];
            params[k][i] = orig + step;
            const double lp = eval_loss(problem, params);
            params[k][i] = orig - step;
            const double lm = eval_loss(problem, params);
            params[k][i] = orig;
            const double fd = (lp - lm) / (2.0 * step);
            const double ad = autodiff[k][i];
            const double denom = std::max({std::abs(ad), std::abs(fd), 1.0});
            max_dev = std::max(max_dev, std::abs(ad - fd) / denom);
        }
    }
    return max_dev;
}

}  // namespace lordnet
