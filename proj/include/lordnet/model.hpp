#pragma once

#include <string>
#include <vector>

#include "lordnet/field.hpp"
#include "lordnet/tape.hpp"

namespace lordnet {

// Named parameter collection. Order is the binding order and the checkpoint
// order; it never changes after construction.
class ParamSet {
public:
    int add(std::string name, Field f);
    int size() const { return static_cast<int>(fields_.size()); }
    std::int64_t total_entries() const;

    Field& field(int i) { return fields_[static_cast<std::size_t>(i)]; }
    const Field& field(int i) const { return fields_[static_cast<std::size_t>(i)]; }
    const std::string& name(int i) const { return names_[static_cast<std::size_t>(i)]; }
    int index_of(const std::string& name) const;  // -1 if absent

private:
    std::vector<std::string> names_;
    std::vector<Field> fields_;
};

// Registers every parameter on the tape, in order.
std::vector<DiffValue> bind_params(Tape& t, const ParamSet& p);

// Common surface of the trainable models (LordNet variants and the dilated
// CNN baseline). forward() consumes the handles produced by bind_params so a
// caller controls which tape the evaluation lives on.
class ModelIface {
public:
    virtual ~ModelIface() = default;
    virtual ParamSet& params() = 0;
    virtual const ParamSet& params() const = 0;
    virtual DiffValue forward(Tape& t, const std::vector<DiffValue>& bound, DiffValue x) const = 0;
};

// Convenience inference on a scratch tape.
Field predict(const ModelIface& model, const Field& x);

}  // namespace lordnet
