#include "puforge/matrix.hpp"

#include <string>

#include "puforge/error.hpp"

namespace puforge {

void FeatureMatrix::push_back(std::span<const double> x) {
  if (rows_ == 0 && cols_ == 0) cols_ = x.size();
  if (x.size() != cols_) {
    throw InvalidArgument("FeatureMatrix: row of width " + std::to_string(x.size()) +
                          " pushed into matrix of width " + std::to_string(cols_));
  }
  data_.insert(data_.end(), x.begin(), x.end());
  ++rows_;
}

FeatureMatrix gather(const FeatureMatrix& m, std::span<const std::size_t> indices) {
  FeatureMatrix out(m.cols());
  for (std::size_t i : indices) {
    if (i >= m.rows()) throw InvalidArgument("gather: row index out of range");
    out.push_back(m.row(i));
  }
  return out;
}

}  // namespace puforge
