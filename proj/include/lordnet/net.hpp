#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lordnet/model.hpp"
#include "lordnet/tape.hpp"

namespace lordnet::net {

// ---------------------------------------------------------------------------
// Layer forms. The dense multi-channel fully-connected layer is the reference
// the factored forms are checked against.
// ---------------------------------------------------------------------------

// Per-channel dense map, W (C,M,N): Y[c,m] = sum_n W[c,m,n] X[c,n].
struct McfcWeights {
    Field W;
};
DiffValue mcfc_dense_forward(DiffValue x, DiffValue w);

// Rank-R vector decomposition of each channel's weight matrix:
// W_c = sum_r sigma[c,r] a[c,r] (x) b[c,r], a output-side (M), b input-side (N).
struct LowRankVecWeights {
    Field sigma;  // (C,R)
    Field a;      // (C,R,M)
    Field b;      // (C,R,N)
};
DiffValue lowrank_vec_forward(DiffValue x, DiffValue sigma, DiffValue a, DiffValue b);

// Matrix-factored weights: W_c = sum_r eta[c,r] A_{c,r,1} (x) ... (x) A_{c,r,d},
// A_{c,r,i} of shape (I_i, O_i). Two or three spatial axes.
struct LordFactorWeights {
    int channels = 0;
    int rank = 0;
    Field eta;                          // (C,R)
    std::vector<std::vector<Field>> A;  // [r][axis], each (C,I_i,O_i)

    static LordFactorWeights random(int channels, int rank,
                                    const std::vector<std::pair<int, int>>& axis_io,
                                    std::uint64_t seed);
    std::int64_t factor_entries() const;  // C * R * sum_i I_i * O_i
    int spatial_rank() const { return A.empty() ? 0 : static_cast<int>(A.front().size()); }
};

// Tape-side handles for one factored layer.
struct LordFactorHandles {
    DiffValue eta;
    std::vector<std::vector<DiffValue>> A;  // [r][axis]
};

// Computed as per-rank sequences of axis contractions (row-wise, then
// column-wise, then depth-wise) weighted by eta and summed.
DiffValue lord_factored_forward(DiffValue x, const LordFactorHandles& h);

// Scratch-tape evaluation with plain weights.
Field lord_factored_eval(const Field& x, const LordFactorWeights& w);

// Explicit dense weight for equivalence tests. Throws NumericError when the
// dense tensor would exceed the size guard.
McfcWeights materialize_dense(const LordFactorWeights& w);

// Sum-of-outer-products (CP) weights: the rank-1-matrix special case.
// a_i input-side (C,R,I_i), b_i output-side (C,R,O_i).
struct CpWeights {
    Field sigma;            // (C,R)
    std::vector<Field> a;   // per axis (C,R,I_i)
    std::vector<Field> b;   // per axis (C,R,O_i)

    static CpWeights random(int channels, int rank, const std::vector<std::pair<int, int>>& axis_io,
                            std::uint64_t seed);
};

// Direct evaluation of the CP form.
Field cp_eval(const Field& x, const CpWeights& w);

// Builds the rank-1 factor matrices A_i = a_i (x) b_i from the CP weights and
// compares the matrix-factored forward against the direct CP evaluation on a
// random input. Returns the max absolute deviation.
double cp_specialization_check(const CpWeights& w, std::uint64_t seed);

// Parameter-count formulas for each weight form.
std::int64_t dense_weight_count(int C, int M, int N);
std::int64_t vec_lowrank_weight_count(int C, int R, int M, int N);
std::int64_t cp_weight_count(int C, int R, const std::vector<std::pair<int, int>>& axis_io);
std::int64_t matrix_factored_weight_count(int C, int R, const std::vector<std::pair<int, int>>& axis_io);

// ---------------------------------------------------------------------------
// Network assembly
// ---------------------------------------------------------------------------

enum class Variant { poisson_linear, ns_lord };

// Intra-module ordering (the text leaves it ambiguous, so it is a switch):
// embed_lord_mix:  y = f1(x) + mix(lord(embed(x)))
// lord_embed_mix:  y = f1(x) + mix(embed(lord(x)))
// with embed = conv1x1(C,h) -> GELU -> conv1x1(h,C).
enum class ModuleOrder { embed_lord_mix, lord_embed_mix };

struct NetworkConfig {
    Variant variant = Variant::poisson_linear;
    int channels = 16;
    int layers = 2;  // factored layers (poisson) or Lord modules (ns)
    int rank = 1;
    int height = 32;
    int width = 32;
    std::vector<int> hidden = {256, 128};  // per-module embed hidden widths (ns)
    ModuleOrder order = ModuleOrder::embed_lord_mix;
    std::uint64_t init_seed = 1;

    void validate() const;
};

class Network : public ModelIface {
public:
    NetworkConfig cfg;

    ParamSet& params() override { return params_; }
    const ParamSet& params() const override { return params_; }
    DiffValue forward(Tape& t, const std::vector<DiffValue>& bound, DiffValue x) const override;

private:
    friend Network build_network(const NetworkConfig&);

    struct LayerIdx {
        int eta = -1;
        std::vector<std::vector<int>> A;  // [r][axis]
        int mid_w = -1;                   // poisson: conv between factored layers
        int e1_w = -1, e1_b = -1, e2_w = -1, e2_b = -1;
        int mix_w = -1, mix_b = -1, f1_w = -1, f1_b = -1;
    };
    int lift_w_ = -1, lift_b_ = -1, head_w_ = -1, head_b_ = -1;
    std::vector<LayerIdx> layers_;
    ParamSet params_;
};

// Deterministic construction from cfg.init_seed. poisson_linear is fully
// linear (no activations, no biases); ns_lord stacks Lord modules with GELU
// embeddings and the learned f1(x)+f(x) shortcut.
Network build_network(const NetworkConfig& cfg);

}  // namespace lordnet::net
