#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cmarl::numerics {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape) noexcept;

// Dense row-major array of doubles. Most code treats it as a 2-D matrix:
// rows() is the product of all leading dimensions and cols() the last one.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    static Tensor row(std::vector<double> values);
    static Tensor scalar(double value);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t rows() const noexcept;
    std::size_t cols() const noexcept;

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    // Value of a single-element tensor.
    double item() const;
    void fill(double value) noexcept;
    Tensor reshaped(Shape shape) const;
    bool all_finite() const noexcept;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

// Plain (untracked) matrix product of two 2-D tensors.
Tensor matmul(const Tensor& a, const Tensor& b);

}  // namespace cmarl::numerics
