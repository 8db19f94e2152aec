#include "normclash/tensor.hpp"

#include <cmath>
#include <sstream>

#include "normclash/error.hpp"
#include "normclash/gemm.hpp"

namespace normclash {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  for (auto e : shape_) {
    if (e == 0) throw ShapeError("tensor: zero extent in shape " + to_string(shape_));
  }
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto e : shape_) {
    if (e == 0) throw ShapeError("tensor: zero extent in shape " + to_string(shape_));
  }
  if (element_count(shape_) != data_.size()) {
    throw ShapeError("tensor: shape " + to_string(shape_) + " needs " +
                     std::to_string(element_count(shape_)) + " elements, got " +
                     std::to_string(data_.size()));
  }
}

Tensor Tensor::vector(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::rows() const noexcept {
  return shape_.size() >= 2 ? shape_[0] : (shape_.empty() ? 0 : 1);
}

std::size_t Tensor::cols() const noexcept {
  if (shape_.empty()) return 0;
  return shape_.size() >= 2 ? data_.size() / shape_[0] : shape_[0];
}

bool Tensor::all_finite() const noexcept {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor Tensor::slice_rows(std::size_t first, std::size_t count) const {
  const std::size_t c = cols();
  if (first + count > rows() || count == 0) {
    throw ShapeError("slice_rows: rows [" + std::to_string(first) + ", " +
                     std::to_string(first + count) + ") out of range for shape " +
                     to_string(shape_));
  }
  Shape s = shape_;
  if (s.size() < 2) s = {1, c};
  s[0] = count;
  return Tensor(std::move(s), std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(first * c),
                                                  data_.begin() + static_cast<std::ptrdiff_t>((first + count) * c)));
}

Tensor Tensor::transposed() const {
  Tensor out({cols(), rows()});
  kernels::transpose(data_, out.data(), rows(), cols());
  return out;
}

}  // namespace normclash
