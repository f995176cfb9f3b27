#include "cmarl/numerics/param_set.hpp"

#include <algorithm>

#include "cmarl/common/error.hpp"

namespace cmarl::numerics {

void ParamSet::add(std::string name, Shape shape)
{
    if (contains(name)) {
        throw ConfigError("duplicate parameter '" + name + "'");
    }
    ParamEntry e;
    e.name = std::move(name);
    e.size = shape_size(shape);
    e.shape = std::move(shape);
    e.offset = data_.size();
    data_.resize(data_.size() + e.size, 0.0);
    entries_.push_back(std::move(e));
}

bool ParamSet::contains(std::string_view name) const noexcept
{
    return std::any_of(entries_.begin(), entries_.end(), [&](const ParamEntry& e) { return e.name == name; });
}

const ParamEntry& ParamSet::entry(std::string_view name) const
{
    for (const auto& e : entries_) {
        if (e.name == name) {
            return e;
        }
    }
    throw ConfigError("unknown parameter '" + std::string(name) + "'");
}

Tensor ParamSet::tensor(std::string_view name) const
{
    const auto& e = entry(name);
    return Tensor{e.shape, std::vector<double>(data_.begin() + e.offset, data_.begin() + e.offset + e.size)};
}

std::span<double> ParamSet::span(std::string_view name)
{
    const auto& e = entry(name);
    return std::span<double>(data_).subspan(e.offset, e.size);
}

std::span<const double> ParamSet::span(std::string_view name) const
{
    const auto& e = entry(name);
    return std::span<const double>(data_).subspan(e.offset, e.size);
}

void ParamSet::set(std::string_view name, const Tensor& value)
{
    const auto& e = entry(name);
    if (value.size() != e.size) {
        throw ConfigError("parameter '" + e.name + "' expects " + std::to_string(e.size) + " values, got " +
                          std::to_string(value.size()));
    }
    std::copy(value.values().begin(), value.values().end(), data_.begin() + e.offset);
}

ParamSet ParamSet::subset(std::string_view prefix) const
{
    ParamSet out;
    for (const auto& e : entries_) {
        if (e.name.starts_with(prefix)) {
            out.add(e.name, e.shape);
            auto dst = out.span(e.name);
            std::copy(data_.begin() + e.offset, data_.begin() + e.offset + e.size, dst.begin());
        }
    }
    return out;
}

void ParamSet::assign(const ParamSet& other)
{
    for (const auto& src : other.entries_) {
        const auto& dst = entry(src.name);
        if (dst.shape != src.shape) {
            throw ConfigError("shape mismatch assigning parameter '" + src.name + "'");
        }
        std::copy(other.data_.begin() + src.offset, other.data_.begin() + src.offset + src.size,
                  data_.begin() + dst.offset);
    }
}

bool ParamSet::same_layout(const ParamSet& other) const noexcept
{
    if (entries_.size() != other.entries_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name != other.entries_[i].name || entries_[i].shape != other.entries_[i].shape) {
            return false;
        }
    }
    return true;
}

}  // namespace cmarl::numerics
