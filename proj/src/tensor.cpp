#include "seqfed/tensor.hpp"

#include <algorithm>

#include "seqfed/error.hpp"

namespace seqfed {

Dataset gather(const Dataset& source, std::span<const std::size_t> rows) {
  Dataset out;
  out.class_count = source.class_count;
  out.features = Matrix(rows.size(), source.dims());
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= source.size())
      throw Error(ErrorKind::kInvalidArgument, "gather: row index out of range");
    const auto src = source.features.row(rows[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.labels.push_back(source.labels[rows[r]]);
  }
  return out;
}

}  // namespace seqfed
