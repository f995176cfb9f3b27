#include "cmarl/replay/sum_tree.hpp"

#include "cmarl/common/error.hpp"

namespace cmarl::replay {

SumTree::SumTree(std::size_t leaves) : leaves_{leaves}
{
    if (leaves == 0) {
        throw ConfigError("sum tree needs at least one leaf");
    }
    while (base_ < leaves) {
        base_ *= 2;
    }
    nodes_.assign(2 * base_, 0.0);
}

void SumTree::set(std::size_t leaf, double value)
{
    if (leaf >= leaves_ || !(value >= 0.0)) {
        throw ContractViolation("sum tree: leaf out of range or negative value");
    }
    std::size_t i = base_ + leaf;
    nodes_[i] = value;
    for (i /= 2; i >= 1; i /= 2) {
        nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
    }
}

std::size_t SumTree::find(double mass) const
{
    if (!(total() > 0.0)) {
        throw ContractViolation("sum tree is empty");
    }
    std::size_t i = 1;
    while (i < base_) {
        const double left = nodes_[2 * i];
        if (mass < left || nodes_[2 * i + 1] <= 0.0) {
            i = 2 * i;
        } else {
            mass -= left;
            i = 2 * i + 1;
        }
    }
    // Rounding can walk into an empty left leaf; step to the nearest non-empty one.
    std::size_t leaf = i - base_;
    while (nodes_[base_ + leaf] <= 0.0 && leaf + 1 < leaves_) {
        ++leaf;
    }
    while (nodes_[base_ + leaf] <= 0.0 && leaf > 0) {
        --leaf;
    }
    return leaf;
}

}  // namespace cmarl::replay
