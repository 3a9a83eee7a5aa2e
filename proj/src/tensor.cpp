#include "cil/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "cil/errors.hpp"

namespace cil {

std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    for (auto d : shape_)
        if (d == 0) throw ContractError("tensor dimensions must be positive, got " + shape_str(shape_));
    data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    for (auto d : shape_)
        if (d == 0) throw ContractError("tensor dimensions must be positive, got " + shape_str(shape_));
    if (shape_numel(shape_) != data_.size())
        throw ContractError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                            shape_str(shape_));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw ContractError("ragged matrix literal");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::rows() const noexcept {
    if (shape_.empty()) return 0;
    return shape_.size() == 1 ? 1 : shape_[0];
}

std::size_t Tensor::cols() const noexcept {
    if (shape_.empty()) return 0;
    return shape_.back();
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor take_rows(const Tensor& t, std::span<const std::size_t> rows) {
    if (rows.empty()) throw ContractError("take_rows: empty row selection");
    const std::size_t c = t.cols();
    Tensor out({rows.size(), c});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= t.rows()) throw ContractError("take_rows: row index out of range");
        std::copy_n(t.row(rows[i]).begin(), c, out.row(i).begin());
    }
    return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ContractError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace cil
