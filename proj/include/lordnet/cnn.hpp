#pragma once

#include <cstdint>
#include <vector>

#include "lordnet/model.hpp"
#include "lordnet/tape.hpp"

namespace lordnet::cnn {

// Linear (activation-free) stack of 3x3 dilated convolutions with dilation
// doubling per layer until the receptive field covers the grid; the
// translation-invariant comparator.
struct DilatedCnnConfig {
    int channels = 16;
    int height = 32;
    int width = 32;
    BoundaryMode boundary = BoundaryMode::periodic_wrap;  // or zero_pad
    std::vector<int> dilations;  // empty = derive 1,2,4,... automatically
    std::uint64_t init_seed = 1;

    void validate() const;
};

// Doubling dilation sequence whose cumulative radius covers `diameter`.
std::vector<int> covering_dilations(int diameter);

class CnnModel : public ModelIface {
public:
    DilatedCnnConfig cfg;
    std::vector<int> dilations;

    ParamSet& params() override { return params_; }
    const ParamSet& params() const override { return params_; }
    DiffValue forward(Tape& t, const std::vector<DiffValue>& bound, DiffValue x) const override;

private:
    friend CnnModel build_cnn(const DilatedCnnConfig&);
    int lift_w_ = -1, head_w_ = -1;
    std::vector<int> conv_w_;
    ParamSet params_;
};

CnnModel build_cnn(const DilatedCnnConfig& cfg);

}  // namespace lordnet::cnn
