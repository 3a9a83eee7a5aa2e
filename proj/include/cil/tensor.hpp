#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace cil {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles. Most of the framework uses rank 1 or 2.
class Tensor {
 public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor vector(std::initializer_list<double> values);
    static Tensor scalar(double v) { return Tensor(Shape{1}, std::vector<double>{v}); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    // Rank-2 views. A rank-1 tensor reads as a single row.
    std::size_t rows() const noexcept;
    std::size_t cols() const noexcept;

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    std::span<const double> row(std::size_t r) const { return data().subspan(r * cols(), cols()); }
    std::span<double> row(std::size_t r) { return data().subspan(r * cols(), cols()); }

    void fill(double v);
    bool all_finite() const noexcept;

    bool operator==(const Tensor&) const = default;

 private:
    Shape shape_;
    std::vector<double> data_;
};

std::size_t shape_numel(const Shape& shape);

// Gathers the listed rows of a rank-2 tensor.
Tensor take_rows(const Tensor& t, std::span<const std::size_t> rows);

double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace cil
