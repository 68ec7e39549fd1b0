#include "lordnet/net.hpp"

#include <cmath>

#include "lordnet/rng.hpp"

namespace lordnet::net {

// ---------------------------------------------------------------------------
// mcfc_dense_forward
// ---------------------------------------------------------------------------

DiffValue mcfc_dense_forward(DiffValue x, DiffValue w) {
    const Field& xv = x.value();
    const Field& wv = w.value();
    if (xv.rank() != 2 || wv.rank() != 3 || wv.dim(0) != xv.dim(0) || wv.dim(2) != xv.dim(1))
        throw ShapeError("mcfc_dense_forward: x " + shape_str(xv.shape()) + " w " + shape_str(wv.shape()));
    const int C = xv.dim(0), M = wv.dim(1), N = wv.dim(2);
    Field y(Shape{C, M});
    for (int c = 0; c < C; ++c)
        for (int m = 0; m < M; ++m) {
            double acc = 0.0;
            for (int n = 0; n < N; ++n)
                acc += wv[(static_cast<std::int64_t>(c) * M + m) * N + n] * xv[static_cast<std::int64_t>(c) * N + n];
            y[static_cast<std::int64_t>(c) * M + m] = acc;
        }
    int ix = x.id, iw = w.id;
    return x.tape->emit(std::move(y), [ix, iw, C, M, N](Tape& t, int self) {
        const Field& gy = t.grad(self);
        const Field& xv2 = t.value(ix);
        const Field& wv2 = t.value(iw);
        Field& gx = t.grad(ix);
        Field& gw = t.grad(iw);
        for (int c = 0; c < C; ++c)
            for (int m = 0; m < M; ++m) {
                const double g = gy[static_cast<std::int64_t>(c) * M + m];
                for (int n = 0; n < N; ++n) {
                    gx[static_cast<std::int64_t>(c) * N + n] +=
                        wv2[(static_cast<std::int64_t>(c) * M + m) * N + n] * g;
                    gw[(static_cast<std::int64_t>(c) * M + m) * N + n] +=
                        g * xv2[static_cast<std::int64_t>(c) * N + n];
                }
            }
    });
}

// ---------------------------------------------------------------------------
// lowrank_vec_forward
// ---------------------------------------------------------------------------

DiffValue lowrank_vec_forward(DiffValue x, DiffValue sigma, DiffValue a, DiffValue b) {
    const Field& xv = x.value();
    const Field& sv = sigma.value();
    const Field& av = a.value();
    const Field& bv = b.value();
    if (xv.rank() != 2 || sv.rank() != 2 || av.rank() != 3 || bv.rank() != 3)
        throw ShapeError("lowrank_vec_forward: bad ranks");
    const int C = xv.dim(0), N = xv.dim(1), R = sv.dim(1), M = av.dim(2);
    if (sv.dim(0) != C || av.dim(0) != C || av.dim(1) != R || bv.dim(0) != C || bv.dim(1) != R ||
        bv.dim(2) != N)
        throw ShapeError("lowrank_vec_forward: x " + shape_str(xv.shape()) + " sigma " + shape_str(sv.shape()) +
                         " a " + shape_str(av.shape()) + " b " + shape_str(bv.shape()));
    Field y(Shape{C, M});
    for (int c = 0; c < C; ++c)
        for (int r = 0; r < R; ++r) {
            double t = 0.0;
            for (int n = 0; n < N; ++n)
                t += bv[(static_cast<std::int64_t>(c) * R + r) * N + n] * xv[static_cast<std::int64_t>(c) * N + n];
            const double s = sv[static_cast<std::int64_t>(c) * R + r] * t;
            for (int m = 0; m < M; ++m)
                y[static_cast<std::int64_t>(c) * M + m] += s * av[(static_cast<std::int64_t>(c) * R + r) * M + m];
        }
    int ix = x.id, is = sigma.id, ia = a.id, ib = b.id;
    return x.tape->emit(std::move(y), [ix, is, ia, ib, C, N, R, M](Tape& t, int self) {
        const Field& gy = t.grad(self);
        const Field& xv2 = t.value(ix);
        const Field& sv2 = t.value(is);
        const Field& av2 = t.value(ia);
        const Field& bv2 = t.value(ib);
        Field& gx = t.grad(ix);
        Field& gs = t.grad(is);
        Field& ga = t.grad(ia);
        Field& gb = t.grad(ib);
        for (int c = 0; c < C; ++c)
            for (int r = 0; r < R; ++r) {
                const std::int64_t cr = static_cast<std::int64_t>(c) * R + r;
                double tdot = 0.0;
                for (int n = 0; n < N; ++n) tdot += bv2[cr * N + n] * xv2[static_cast<std::int64_t>(c) * N + n];
                double gdot = 0.0;
                for (int m = 0; m < M; ++m) gdot += av2[cr * M + m] * gy[static_cast<std::int64_t>(c) * M + m];
                const double sig = sv2[cr];
                gs[cr] += tdot * gdot;
                for (int m = 0; m < M; ++m) ga[cr * M + m] += sig * tdot * gy[static_cast<std::int64_t>(c) * M + m];
                for (int n = 0; n < N; ++n) {
                    gb[cr * N + n] += sig * gdot * xv2[static_cast<std::int64_t>(c) * N + n];
                    gx[static_cast<std::int64_t>(c) * N + n] += sig * gdot * bv2[cr * N + n];
                }
            }
    });
}

// ---------------------------------------------------------------------------
// Matrix-factored layer
// ---------------------------------------------------------------------------

DiffValue lord_factored_forward(DiffValue x, const LordFactorHandles& h) {
    if (h.A.empty()) throw ShapeError("lord_factored_forward: no rank terms");
    const int R = static_cast<int>(h.A.size());
    const int d = static_cast<int>(h.A.front().size());
    if (x.value().rank() != d + 1)
        throw ShapeError("lord_factored_forward: input rank " + std::to_string(x.value().rank()) +
                         " expects " + std::to_string(d) + " spatial axes");
    DiffValue acc;
    for (int r = 0; r < R; ++r) {
        DiffValue t = x;
        for (int axis = 0; axis < d; ++axis)
            t = axis_matmul(t, h.A[static_cast<std::size_t>(r)][static_cast<std::size_t>(axis)], axis);
        t = channel_scale(t, h.eta, r);
        acc = r == 0 ? t : add(acc, t);
    }
    return acc;
}

LordFactorWeights LordFactorWeights::random(int channels, int rank,
                                            const std::vector<std::pair<int, int>>& axis_io,
                                            std::uint64_t seed) {
    LordFactorWeights w;
    w.channels = channels;
    w.rank = rank;
    w.eta = Field(Shape{channels, rank}, 1.0);
    Rng rng(seed);
    const int d = static_cast<int>(axis_io.size());
    w.A.resize(static_cast<std::size_t>(rank));
    for (int r = 0; r < rank; ++r)
        for (const auto& [I, O] : axis_io) {
            // per-axis fan normalization, spread across ranks
            const double std_dev = 1.0 / std::sqrt(static_cast<double>(I) *
                                                   std::pow(static_cast<double>(rank), 1.0 / d));
            Field a(Shape{channels, I, O});
            for (std::int64_t i = 0; i < a.size(); ++i) a[i] = std_dev * rng.normal();
            w.A[static_cast<std::size_t>(r)].push_back(std::move(a));
        }
    return w;
}

std::int64_t LordFactorWeights::factor_entries() const {
    std::int64_t n = 0;
    for (const auto& per_rank : A)
        for (const auto& a : per_rank) n += a.size();
    return n;
}

Field lord_factored_eval(const Field& x, const LordFactorWeights& w) {
    Tape t;
    LordFactorHandles h;
    h.eta = t.input(w.eta);
    h.A.resize(w.A.size());
    for (std::size_t r = 0; r < w.A.size(); ++r)
        for (const auto& a : w.A[r]) h.A[r].push_back(t.input(a));
    return lord_factored_forward(t.input(x), h).value();
}

McfcWeights materialize_dense(const LordFactorWeights& w) {
    const int C = w.channels, R = w.rank;
    const int d = w.spatial_rank();
    if (d != 2 && d != 3) throw ShapeError("materialize_dense: supports 2 or 3 spatial axes");
    std::int64_t M = 1, N = 1;
    for (const auto& a : w.A.front()) {
        N *= a.dim(1);
        M *= a.dim(2);
    }
    if (static_cast<std::int64_t>(C) * M * N > (1ll << 24))
        throw NumericError("materialize_dense: dense tensor exceeds the size guard");
    Field W(Shape{C, static_cast<int>(M), static_cast<int>(N)});
    for (int c = 0; c < C; ++c)
        for (int r = 0; r < R; ++r) {
            const double e = w.eta[static_cast<std::int64_t>(c) * R + r];
            const auto& ax = w.A[static_cast<std::size_t>(r)];
            if (d == 2) {
                const Field &A1 = ax[0], &A2 = ax[1];
                const int I1 = A1.dim(1), O1 = A1.dim(2), I2 = A2.dim(1), O2 = A2.dim(2);
                for (int i1 = 0; i1 < I1; ++i1)
                    for (int o1 = 0; o1 < O1; ++o1) {
                        const double a1 = A1.at(c, i1, o1);
                        for (int i2 = 0; i2 < I2; ++i2)
                            for (int o2 = 0; o2 < O2; ++o2)
                                W[(static_cast<std::int64_t>(c) * M + (static_cast<std::int64_t>(o1) * O2 + o2)) * N +
                                  (static_cast<std::int64_t>(i1) * I2 + i2)] += e * a1 * A2.at(c, i2, o2);
                    }
            } else {
                const Field &A1 = ax[0], &A2 = ax[1], &A3 = ax[2];
                const int I1 = A1.dim(1), O1 = A1.dim(2), I2 = A2.dim(1), O2 = A2.dim(2);
                const int I3 = A3.dim(1), O3 = A3.dim(2);
                for (int i1 = 0; i1 < I1; ++i1)
                    for (int o1 = 0; o1 < O1; ++o1)
                        for (int i2 = 0; i2 < I2; ++i2)
                            for (int o2 = 0; o2 < O2; ++o2) {
                                const double a12 = A1.at(c, i1, o1) * A2.at(c, i2, o2);
                                for (int i3 = 0; i3 < I3; ++i3)
                                    for (int o3 = 0; o3 < O3; ++o3) {
                                        const std::int64_t m =
                                            (static_cast<std::int64_t>(o1) * O2 + o2) * O3 + o3;
                                        const std::int64_t nn =
                                            (static_cast<std::int64_t>(i1) * I2 + i2) * I3 + i3;
                                        W[(static_cast<std::int64_t>(c) * M + m) * N + nn] +=
                                            e * a12 * A3.at(c, i3, o3);
                                    }
                            }
            }
        }
    return McfcWeights{std::move(W)};
}

// ---------------------------------------------------------------------------
// CP form
// ---------------------------------------------------------------------------

CpWeights CpWeights::random(int channels, int rank, const std::vector<std::pair<int, int>>& axis_io,
                            std::uint64_t seed) {
    CpWeights w;
    Rng rng(seed);
    w.sigma = Field(Shape{channels, rank});
    for (std::int64_t i = 0; i < w.sigma.size(); ++i) w.sigma[i] = rng.normal();
    for (const auto& [I, O] : axis_io) {
        Field a(Shape{channels, rank, I});
        Field b(Shape{channels, rank, O});
        for (std::int64_t i = 0; i < a.size(); ++i) a[i] = rng.normal() / std::sqrt(static_cast<double>(I));
        for (std::int64_t i = 0; i < b.size(); ++i) b[i] = rng.normal();
        w.a.push_back(std::move(a));
        w.b.push_back(std::move(b));
    }
    return w;
}

Field cp_eval(const Field& x, const CpWeights& w) {
    const int d = static_cast<int>(w.a.size());
    if (x.rank() != d + 1) throw ShapeError("cp_eval: input rank mismatch");
    const int C = x.dim(0), R = w.sigma.dim(1);
    Shape out_shape{C};
    for (int axis = 0; axis < d; ++axis) out_shape.push_back(w.b[static_cast<std::size_t>(axis)].dim(2));
    Field y(out_shape);
    if (d == 2) {
        const int I1 = x.dim(1), I2 = x.dim(2);
        const int O1 = out_shape[1], O2 = out_shape[2];
        for (int c = 0; c < C; ++c)
            for (int r = 0; r < R; ++r) {
                // s = a1^T X a2
                double s = 0.0;
                for (int i1 = 0; i1 < I1; ++i1)
                    for (int i2 = 0; i2 < I2; ++i2)
                        s += w.a[0][(static_cast<std::int64_t>(c) * R + r) * I1 + i1] *
                             w.a[1][(static_cast<std::int64_t>(c) * R + r) * I2 + i2] * x.at(c, i1, i2);
                s *= w.sigma[static_cast<std::int64_t>(c) * R + r];
                for (int o1 = 0; o1 < O1; ++o1)
                    for (int o2 = 0; o2 < O2; ++o2)
                        y.at(c, o1, o2) += s * w.b[0][(static_cast<std::int64_t>(c) * R + r) * O1 + o1] *
                                           w.b[1][(static_cast<std::int64_t>(c) * R + r) * O2 + o2];
            }
        return y;
    }
    if (d != 3) throw ShapeError("cp_eval: supports 2 or 3 spatial axes");
    const int I1 = x.dim(1), I2 = x.dim(2), I3 = x.dim(3);
    const int O1 = out_shape[1], O2 = out_shape[2], O3 = out_shape[3];
    for (int c = 0; c < C; ++c)
        for (int r = 0; r < R; ++r) {
            double s = 0.0;
            for (int i1 = 0; i1 < I1; ++i1)
                for (int i2 = 0; i2 < I2; ++i2)
                    for (int i3 = 0; i3 < I3; ++i3)
                        s += w.a[0][(static_cast<std::int64_t>(c) * R + r) * I1 + i1] *
                             w.a[1][(static_cast<std::int64_t>(c) * R + r) * I2 + i2] *
                             w.a[2][(static_cast<std::int64_t>(c) * R + r) * I3 + i3] *
                             x[((static_cast<std::int64_t>(c) * I1 + i1) * I2 + i2) * I3 + i3];
            s *= w.sigma[static_cast<std::int64_t>(c) * R + r];
            for (int o1 = 0; o1 < O1; ++o1)
                for (int o2 = 0; o2 < O2; ++o2)
                    for (int o3 = 0; o3 < O3; ++o3)
                        y[((static_cast<std::int64_t>(c) * O1 + o1) * O2 + o2) * O3 + o3] +=
                            s * w.b[0][(static_cast<std::int64_t>(c) * R + r) * O1 + o1] *
                            w.b[1][(static_cast<std::int64_t>(c) * R + r) * O2 + o2] *
                            w.b[2][(static_cast<std::int64_t>(c) * R + r) * O3 + o3];
        }
    return y;
}

double cp_specialization_check(const CpWeights& w, std::uint64_t seed) {
    const int d = static_cast<int>(w.a.size());
    const int C = w.sigma.dim(0), R = w.sigma.dim(1);
    LordFactorWeights lf;
    lf.channels = C;
    lf.rank = R;
    lf.eta = w.sigma;
    lf.A.resize(static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r)
        for (int axis = 0; axis < d; ++axis) {
            const int I = w.a[static_cast<std::size_t>(axis)].dim(2);
            const int O = w.b[static_cast<std::size_t>(axis)].dim(2);
            Field A(Shape{C, I, O});
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < I; ++i)
                    for (int o = 0; o < O; ++o)
                        A.at(c, i, o) = w.a[static_cast<std::size_t>(axis)][(static_cast<std::int64_t>(c) * R + r) * I + i] *
                                        w.b[static_cast<std::size_t>(axis)][(static_cast<std::int64_t>(c) * R + r) * O + o];
            lf.A[static_cast<std::size_t>(r)].push_back(std::move(A));
        }

    Shape in_shape{C};
    for (int axis = 0; axis < d; ++axis) in_shape.push_back(w.a[static_cast<std::size_t>(axis)].dim(2));
    Rng rng(seed);
    Field x(in_shape);
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = rng.normal();

    Field y_factored = lord_factored_eval(x, lf);
    Field y_cp = cp_eval(x, w);
    return max_abs(y_factored - y_cp);
}

// ---------------------------------------------------------------------------
// Parameter-count formulas
// ---------------------------------------------------------------------------

std::int64_t dense_weight_count(int C, int M, int N) {
    return static_cast<std::int64_t>(C) * M * N;
}

std::int64_t vec_lowrank_weight_count(int C, int R, int M, int N) {
    return static_cast<std::int64_t>(C) * R * (M + N);
}

std::int64_t cp_weight_count(int C, int R, const std::vector<std::pair<int, int>>& axis_io) {
    std::int64_t s = 0;
    for (const auto& [I, O] : axis_io) s += I + O;
    return static_cast<std::int64_t>(C) * R * s;
}

std::int64_t matrix_factored_weight_count(int C, int R, const std::vector<std::pair<int, int>>& axis_io) {
    std::int64_t s = 0;
    for (const auto& [I, O] : axis_io) s += static_cast<std::int64_t>(I) * O;
    return static_cast<std::int64_t>(C) * R * s;
}

// ---------------------------------------------------------------------------
// Network assembly
// ---------------------------------------------------------------------------

void NetworkConfig::validate() const {
    if (channels < 1 || layers < 1 || rank < 1 || height < 1 || width < 1)
        throw ConfigError("network config: channels/layers/rank/extent must be positive");
    if (variant == Variant::ns_lord && static_cast<int>(hidden.size()) != layers)
        throw ConfigError("network config: ns_lord needs one hidden width per module (got " +
                          std::to_string(hidden.size()) + " for " + std::to_string(layers) + " modules)");
}

namespace {

Field normal_field(Shape shape, double std_dev, Rng& rng) {
    Field f(std::move(shape));
    for (std::int64_t i = 0; i < f.size(); ++i) f[i] = std_dev * rng.normal();
    return f;
}

}  // namespace

Network build_network(const NetworkConfig& cfg) {
    cfg.validate();
    Network model;
    model.cfg = cfg;
    Rng rng(cfg.init_seed);
    ParamSet& P = model.params_;
    const int C = cfg.channels, R = cfg.rank, H = cfg.height, W = cfg.width;

    auto add_factored = [&](Network::LayerIdx& idx, const std::string& prefix) {
        idx.eta = P.add(prefix + ".eta", Field(Shape{C, R}, 1.0));
        idx.A.resize(static_cast<std::size_t>(R));
        const double rank_comp = std::pow(static_cast<double>(R), 0.25);
        for (int r = 0; r < R; ++r) {
            idx.A[static_cast<std::size_t>(r)].push_back(
                P.add(prefix + ".A1.r" + std::to_string(r),
                      normal_field(Shape{C, H, H}, 1.0 / (std::sqrt(static_cast<double>(H)) * rank_comp), rng)));
            idx.A[static_cast<std::size_t>(r)].push_back(
                P.add(prefix + ".A2.r" + std::to_string(r),
                      normal_field(Shape{C, W, W}, 1.0 / (std::sqrt(static_cast<double>(W)) * rank_comp), rng)));
        }
    };

    if (cfg.variant == Variant::poisson_linear) {
        model.lift_w_ = P.add("lift.w", normal_field(Shape{C, 1}, 1.0, rng));
        for (int l = 0; l < cfg.layers; ++l) {
            Network::LayerIdx idx;
            add_factored(idx, "lord" + std::to_string(l));
            if (l + 1 < cfg.layers)
                idx.mid_w = P.add("mid" + std::to_string(l) + ".w",
                                  normal_field(Shape{C, C}, 1.0 / std::sqrt(static_cast<double>(C)), rng));
            model.layers_.push_back(std::move(idx));
        }
        model.head_w_ = P.add("head.w", normal_field(Shape{1, C}, 1.0 / std::sqrt(static_cast<double>(C)), rng));
        return model;
    }

    model.lift_w_ = P.add("lift.w", normal_field(Shape{C, 1}, 1.0, rng));
    model.lift_b_ = P.add("lift.b", Field(Shape{C}));
    for (int m = 0; m < cfg.layers; ++m) {
        Network::LayerIdx idx;
        const int h = cfg.hidden[static_cast<std::size_t>(m)];
        const std::string prefix = "mod" + std::to_string(m);
        idx.e1_w = P.add(prefix + ".embed1.w", normal_field(Shape{h, C}, 1.0 / std::sqrt(static_cast<double>(C)), rng));
        idx.e1_b = P.add(prefix + ".embed1.b", Field(Shape{h}));
        idx.e2_w = P.add(prefix + ".embed2.w", normal_field(Shape{C, h}, 1.0 / std::sqrt(static_cast<double>(h)), rng));
        idx.e2_b = P.add(prefix + ".embed2.b", Field(Shape{C}));
        add_factored(idx, prefix + ".lord");
        idx.mix_w = P.add(prefix + ".mix.w", normal_field(Shape{C, C}, 1.0 / std::sqrt(static_cast<double>(C)), rng));
        idx.mix_b = P.add(prefix + ".mix.b", Field(Shape{C}));
        idx.f1_w = P.add(prefix + ".f1.w", normal_field(Shape{C, C}, 1.0 / std::sqrt(static_cast<double>(C)), rng));
        idx.f1_b = P.add(prefix + ".f1.b", Field(Shape{C}));
        model.layers_.push_back(std::move(idx));
    }
    model.head_w_ = P.add("head.w", normal_field(Shape{1, C}, 1.0 / std::sqrt(static_cast<double>(C)), rng));
    model.head_b_ = P.add("head.b", Field(Shape{1}));
    return model;
}

DiffValue Network::forward(Tape& t, const std::vector<DiffValue>& bound, DiffValue x) const {
    (void)t;
    const Field& xv = x.value();
    if (xv.rank() != 3 || xv.dim(0) != 1 || xv.dim(1) != cfg.height || xv.dim(2) != cfg.width)
        throw ShapeError("network forward: input " + shape_str(xv.shape()) + " expects (1," +
                         std::to_string(cfg.height) + "," + std::to_string(cfg.width) + ")");

    auto factored = [&](DiffValue v, const LayerIdx& idx) {
        LordFactorHandles h;
        h.eta = bound[static_cast<std::size_t>(idx.eta)];
        h.A.resize(idx.A.size());
        for (std::size_t r = 0; r < idx.A.size(); ++r)
            for (int id : idx.A[r]) h.A[r].push_back(bound[static_cast<std::size_t>(id)]);
        return lord_factored_forward(v, h);
    };

    if (cfg.variant == Variant::poisson_linear) {
        DiffValue v = conv1x1(x, bound[static_cast<std::size_t>(lift_w_)]);
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            v = factored(v, layers_[l]);
            if (layers_[l].mid_w >= 0) v = conv1x1(v, bound[static_cast<std::size_t>(layers_[l].mid_w)]);
        }
        return conv1x1(v, bound[static_cast<std::size_t>(head_w_)]);
    }

    DiffValue v = conv1x1(x, bound[static_cast<std::size_t>(lift_w_)], bound[static_cast<std::size_t>(lift_b_)]);
    for (const LayerIdx& idx : layers_) {
        auto embed = [&](DiffValue u) {
            DiffValue e = conv1x1(u, bound[static_cast<std::size_t>(idx.e1_w)], bound[static_cast<std::size_t>(idx.e1_b)]);
            e = gelu(e);
            return conv1x1(e, bound[static_cast<std::size_t>(idx.e2_w)], bound[static_cast<std::size_t>(idx.e2_b)]);
        };
        DiffValue branch = cfg.order == ModuleOrder::embed_lord_mix ? factored(embed(v), idx)
                                                                    : embed(factored(v, idx));
        branch = conv1x1(branch, bound[static_cast<std::size_t>(idx.mix_w)], bound[static_cast<std::size_t>(idx.mix_b)]);
        DiffValue shortcut = conv1x1(v, bound[static_cast<std::size_t>(idx.f1_w)], bound[static_cast<std::size_t>(idx.f1_b)]);
        v = add(shortcut, branch);
    }
    return conv1x1(v, bound[static_cast<std::size_t>(head_w_)], bound[static_cast<std::size_t>(head_b_)]);
}

}  // namespace lordnet::net
