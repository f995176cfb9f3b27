#pragma once

#include <cstddef>
#include <vector>

namespace cmarl::replay {

// Binary tree of partial sums over a fixed number of non-negative leaves.
class SumTree {
public:
    explicit SumTree(std::size_t leaves);

    std::size_t leaves() const noexcept { return leaves_; }
    double total() const noexcept { return nodes_.empty() ? 0.0 : nodes_[1]; }
    double get(std::size_t leaf) const { return nodes_[base_ + leaf]; }
    void set(std::size_t leaf, double value);
    // Leaf whose cumulative interval contains `mass`, for mass in [0, total()).
    // Zero-valued leaves are never returned while total() > 0.
    std::size_t find(double mass) const;

private:
    std::size_t leaves_;
    std::size_t base_ = 1;
    std::vector<double> nodes_;
};

}  // namespace cmarl::replay
