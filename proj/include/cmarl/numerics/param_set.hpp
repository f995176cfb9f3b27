#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cmarl/numerics/tensor.hpp"

namespace cmarl::numerics {

struct ParamEntry {
    std::string name;
    Shape shape;
    std::size_t offset = 0;
    std::size_t size = 0;
};

// Named tensors packed into one flat vector. Entry order is insertion order,
// which is also the serialization order.
class ParamSet {
public:
    void add(std::string name, Shape shape);

    bool contains(std::string_view name) const noexcept;
    const ParamEntry& entry(std::string_view name) const;
    const std::vector<ParamEntry>& entries() const noexcept { return entries_; }

    Tensor tensor(std::string_view name) const;
    std::span<double> span(std::string_view name);
    std::span<const double> span(std::string_view name) const;
    void set(std::string_view name, const Tensor& value);

    std::span<double> flat() noexcept { return data_; }
    std::span<const double> flat() const noexcept { return data_; }
    std::size_t size() const noexcept { return data_.size(); }

    // Copy of every entry whose name starts with `prefix`.
    ParamSet subset(std::string_view prefix) const;
    // Overwrite the entries named in `other`; each must exist here with the same shape.
    void assign(const ParamSet& other);
    // Entries share names and shapes in the same order.
    bool same_layout(const ParamSet& other) const noexcept;

    friend bool operator==(const ParamSet& a, const ParamSet& b)
    {
        return a.same_layout(b) && a.data_ == b.data_;
    }

private:
    std::vector<ParamEntry> entries_;
    std::vector<double> data_;
};

}  // namespace cmarl::numerics
