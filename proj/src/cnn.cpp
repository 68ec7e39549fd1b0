#include "lordnet/cnn.hpp"

#include <cmath>
#include <numeric>

#include "lordnet/rng.hpp"

namespace lordnet::cnn {

void DilatedCnnConfig::validate() const {
    if (channels < 1 || height < 3 || width < 3)
        throw ConfigError("cnn config: channels must be positive and the grid at least 3x3");
    if (boundary == BoundaryMode::dirichlet_interior_only)
        throw ConfigError("cnn config: boundary must be periodic_wrap or zero_pad");
    if (!dilations.empty()) {
        const int diameter = std::max(height, width) - 1;
        int radius = 0;
        for (int d : dilations) {
            if (d < 1) throw ConfigError("cnn config: dilations must be >= 1");
            radius += d;
        }
        if (radius < diameter)
            throw ConfigError("cnn config: receptive-field radius " + std::to_string(radius) +
                              " does not cover the grid diameter " + std::to_string(diameter));
    }
}

std::vector<int> covering_dilations(int diameter) {
    std::vector<int> out;
    int radius = 0, d = 1;
    while (radius < diameter) {
        out.push_back(d);
        radius += d;
        d *= 2;
    }
    return out;
}

CnnModel build_cnn(const DilatedCnnConfig& cfg) {
    cfg.validate();
    CnnModel model;
    model.cfg = cfg;
    model.dilations = cfg.dilations.empty() ? covering_dilations(std::max(cfg.height, cfg.width) - 1)
                                            : cfg.dilations;
    Rng rng(cfg.init_seed);
    const int C = cfg.channels;
    auto normal_field = [&rng](Shape shape, double std_dev) {
        Field f(std::move(shape));
        for (std::int64_t i = 0; i < f.size(); ++i) f[i] = std_dev * rng.normal();
        return f;
    };
    model.lift_w_ = model.params_.add("lift.w", normal_field(Shape{C, 1}, 1.0));
    for (std::size_t l = 0; l < model.dilations.size(); ++l)
        model.conv_w_.push_back(model.params_.add(
            "conv" + std::to_string(l) + ".w",
            normal_field(Shape{C, C, 3, 3}, 1.0 / std::sqrt(9.0 * static_cast<double>(C)))));
    model.head_w_ = model.params_.add("head.w", normal_field(Shape{1, C}, 1.0 / std::sqrt(static_cast<double>(C))));
    return model;
}

DiffValue CnnModel::forward(Tape& t, const std::vector<DiffValue>& bound, DiffValue x) const {
    (void)t;
    const Field& xv = x.value();
    if (xv.rank() != 3 || xv.dim(0) != 1 || xv.dim(1) != cfg.height || xv.dim(2) != cfg.width)
        throw ShapeError("cnn forward: input " + shape_str(xv.shape()) + " expects (1," +
                         std::to_string(cfg.height) + "," + std::to_string(cfg.width) + ")");
    DiffValue v = conv1x1(x, bound[static_cast<std::size_t>(lift_w_)]);
    for (std::size_t l = 0; l < dilations.size(); ++l)
        v = conv2d_dilated(v, bound[static_cast<std::size_t>(conv_w_[l])], dilations[l], cfg.boundary);
    return conv1x1(v, bound[static_cast<std::size_t>(head_w_)]);
}

}  // namespace lordnet::cnn
