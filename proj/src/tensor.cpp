#include "semtrack/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace semtrack {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
  }
}

Tensor Tensor::uniform(Shape shape, double bound, RngStream& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data_) v = rng.uniform(-bound, bound);
  return t;
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_shape(const Tensor& t, const Shape& expected, const char* what) {
  if (t.shape() != expected) {
    throw ShapeError(std::string(what) + ": expected shape " + shape_string(expected) + ", got " +
                     shape_string(t.shape()));
  }
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got shape " +
                     shape_string(t.shape()));
  }
}

namespace {
template <typename Op>
Tensor zip(const Tensor& a, const Tensor& b, Op op, const char* what) {
  require_shape(b, a.shape(), what);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
  return out;
}
}  // namespace

Tensor operator+(const Tensor& a, const Tensor& b) { return zip(a, b, std::plus<>(), "add"); }
Tensor operator-(const Tensor& a, const Tensor& b) { return zip(a, b, std::minus<>(), "subtract"); }
Tensor operator*(const Tensor& a, const Tensor& b) { return zip(a, b, std::multiplies<>(), "multiply"); }

Tensor operator*(double s, const Tensor& a) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return out;
}

double sum(const Tensor& t) { return std::accumulate(t.data().begin(), t.data().end(), 0.0); }

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_shape(b, a.shape(), "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

Tensor to_tokens(const Tensor& map) {
  require_rank(map, 3, "to_tokens");
  const auto C = map.extent(0), H = map.extent(1), W = map.extent(2);
  Tensor tokens({H * W, C});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t p = 0; p < H * W; ++p) tokens.at(p, c) = map[c * H * W + p];
  return tokens;
}

Tensor from_tokens(const Tensor& tokens, std::size_t height, std::size_t width) {
  require_rank(tokens, 2, "from_tokens");
  if (tokens.extent(0) != height * width) throw ShapeError("from_tokens: token count does not match grid");
  const auto C = tokens.extent(1);
  Tensor map({C, height, width});
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t p = 0; p < height * width; ++p) map[c * height * width + p] = tokens.at(p, c);
  return map;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  require_rank(a, 3, "concat_channels");
  require_rank(b, 3, "concat_channels");
  if (a.extent(1) != b.extent(1) || a.extent(2) != b.extent(2)) {
    throw ShapeError("concat_channels: spatial extents differ");
  }
  Tensor out({a.extent(0) + b.extent(0), a.extent(1), a.extent(2)});
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

}  // namespace semtrack
