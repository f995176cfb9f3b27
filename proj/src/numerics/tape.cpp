#include "cmarl/numerics/tape.hpp"

#include <string>

#include "cmarl/common/error.hpp"

namespace cmarl::numerics {

const Tensor& Var::value() const
{
    return tape_->value(id_);
}

bool Var::requires_grad() const
{
    return tape_->requires_grad(id_);
}

Var Tape::constant(Tensor value)
{
    nodes_.push_back(Node{std::move(value), {}, false, {}, -1});
    return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(const ParamSet& params, std::string_view name)
{
    if (bound_ != nullptr && bound_ != &params) {
        throw UsageError("tape already bound to a different parameter set");
    }
    bound_ = &params;
    const auto& e = params.entry(name);
    Node n;
    n.value = params.tensor(name);
    n.requires_grad = true;
    n.param_offset = static_cast<std::ptrdiff_t>(e.offset);
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn)
{
    bool needs = false;
    for (const Var& v : inputs) {
        if (v.tape() != this) {
            throw UsageError("operands live on different tapes");
        }
        needs = needs || requires_grad(v.id());
    }
    Node n;
    n.value = std::move(value);
    n.requires_grad = needs;
    if (needs) {
        n.backward = std::move(fn);
    }
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id)
{
    Node& n = nodes_[id];
    if (n.grad.size() != n.value.size()) {
        n.grad = Tensor{n.value.shape()};
    }
    return n.grad;
}

std::vector<double> Tape::backward(Var loss)
{
    if (loss.tape() != this) {
        throw UsageError("loss node belongs to another tape");
    }
    if (value(loss.id()).size() != 1) {
        throw UsageError("backward requires a scalar loss, got " + std::to_string(value(loss.id()).size()) +
                         " elements");
    }
    std::vector<double> out(bound_ != nullptr ? bound_->size() : 0, 0.0);
    if (requires_grad(loss.id())) {
        grad(loss.id())[0] = 1.0;
        for (std::size_t i = loss.id() + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.requires_grad || n.grad.empty()) {
                continue;
            }
            if (n.backward) {
                n.backward(*this, i);
            }
            if (n.param_offset >= 0) {
                const auto off = static_cast<std::size_t>(n.param_offset);
                for (std::size_t k = 0; k < n.grad.size(); ++k) {
                    out[off + k] += n.grad[k];
                }
            }
        }
    }
    clear();
    return out;
}

void Tape::clear()
{
    nodes_.clear();
    bound_ = nullptr;
}

}  // namespace cmarl::numerics
