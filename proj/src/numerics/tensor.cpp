#include "cmarl/numerics/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "cmarl/common/error.hpp"
#include "eigen_maps.hpp"

namespace cmarl::numerics {

std::size_t shape_size(const Shape& shape) noexcept
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape) : shape_{std::move(shape)}, data_(shape_size(shape_), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_{std::move(shape)}, data_{std::move(data)}
{
    if (shape_size(shape_) != data_.size()) {
        throw ConfigError("tensor shape holds " + std::to_string(shape_size(shape_)) +
                          " elements but data has " + std::to_string(data_.size()));
    }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill)
{
    Tensor t{Shape{rows, cols}};
    t.fill(fill);
    return t;
}

Tensor Tensor::row(std::vector<double> values)
{
    const std::size_t n = values.size();
    return Tensor{Shape{1, n}, std::move(values)};
}

Tensor Tensor::scalar(double value)
{
    return Tensor{Shape{1, 1}, {value}};
}

std::size_t Tensor::rows() const noexcept
{
    if (shape_.size() < 2) {
        return 1;
    }
    return std::accumulate(shape_.begin(), shape_.end() - 1, std::size_t{1}, std::multiplies<>());
}

std::size_t Tensor::cols() const noexcept
{
    return shape_.empty() ? 1 : shape_.back();
}

double Tensor::item() const
{
    if (data_.size() != 1) {
        throw UsageError("item() on a tensor with " + std::to_string(data_.size()) + " elements");
    }
    return data_[0];
}

void Tensor::fill(double value) noexcept
{
    std::fill(data_.begin(), data_.end(), value);
}

Tensor Tensor::reshaped(Shape shape) const
{
    return Tensor{std::move(shape), data_};
}

bool Tensor::all_finite() const noexcept
{
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

Tensor matmul(const Tensor& a, const Tensor& b)
{
    if (a.cols() != b.rows()) {
        throw ConfigError("matmul inner dimensions differ: " + std::to_string(a.cols()) + " vs " +
                          std::to_string(b.rows()));
    }
    Tensor out = Tensor::matrix(a.rows(), b.cols());
    as_matrix(out).noalias() = as_matrix(a) * as_matrix(b);
    return out;
}

}  // namespace cmarl::numerics
