#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace puforge {

/// Dense row-major matrix of feature vectors, one example per row.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] bool empty() const noexcept { return rows_ == 0; }

  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  [[nodiscard]] std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }

  /// Appends a row; the first row fixes the width of an empty, width-less matrix.
  void push_back(std::span<const double> x);

  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Rows of `m` selected by `indices`, in that order.
FeatureMatrix gather(const FeatureMatrix& m, std::span<const std::size_t> indices);

}  // namespace puforge
