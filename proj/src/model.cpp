#include "lordnet/model.hpp"

namespace lordnet {

int ParamSet::add(std::string name, Field f) {
    names_.push_back(std::move(name));
    fields_.push_back(std::move(f));
    return static_cast<int>(fields_.size()) - 1;
}

std::int64_t ParamSet::total_entries() const {
    std::int64_t n = 0;
    for (const auto& f : fields_) n += f.size();
    return n;
}

int ParamSet::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return static_cast<int>(i);
    return -1;
}

std::vector<DiffValue> bind_params(Tape& t, const ParamSet& p) {
    std::vector<DiffValue> out;
    out.reserve(static_cast<std::size_t>(p.size()));
    for (int i = 0; i < p.size(); ++i) out.push_back(t.param(p.field(i)));
    return out;
}

Field predict(const ModelIface& model, const Field& x) {
    Tape t;
    std::vector<DiffValue> bound = bind_params(t, model.params());
    DiffValue y = model.forward(t, bound, t.input(x));
    return y.value();
}

}  // namespace lordnet
