#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string_view>
#include <vector>

#include "cmarl/numerics/param_set.hpp"
#include "cmarl/numerics/tensor.hpp"

namespace cmarl::numerics {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid until the tape is cleared.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    bool requires_grad() const;
    std::size_t id() const noexcept { return id_; }
    Tape* tape() const noexcept { return tape_; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_{tape}, id_{id} {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

// Reverse-mode gradient tape. Parameters are bound to one ParamSet so that
// backward() can return a flat gradient aligned with it.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var parameter(const ParamSet& params, std::string_view name);

    // Appends a computed node; `fn` is kept only if an input needs a gradient.
    Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);

    // Gradient of a scalar node with respect to every bound parameter.
    // The tape is cleared afterwards.
    std::vector<double> backward(Var loss);

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    // Gradient accumulator of a node, zero-allocated on first access.
    Tensor& grad(std::size_t id);

    std::size_t size() const noexcept { return nodes_.size(); }
    void clear();

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        BackwardFn backward;
        std::ptrdiff_t param_offset = -1;
    };

    std::deque<Node> nodes_;
    const ParamSet* bound_ = nullptr;
};

}  // namespace cmarl::numerics
