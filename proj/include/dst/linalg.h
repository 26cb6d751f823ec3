#ifndef DST_LINALG_H_
#define DST_LINALG_H_

#include <cassert>
#include <cmath>
#include <span>
#include <vector>

namespace dst {

using Vec = std::vector<double>;

// Dense row-major matrix. Just enough for the heads' affine layers.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(size_t r, size_t c) { return data[r * cols + c]; }
  double operator()(size_t r, size_t c) const { return data[r * cols + c]; }
  std::span<double> row(size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(size_t r) const { return {data.data() + r * cols, cols}; }
  bool operator==(const Matrix&) const = default;
};

inline double Dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow.
inline double LogSigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

// Numerically stable softmax and its log.
inline Vec Softmax(std::span<const double> logits) {
  Vec out(logits.begin(), logits.end());
  if (out.empty()) return out;
  double m = out[0];
  for (double v : out) m = std::max(m, v);
  double z = 0.0;
  for (double& v : out) {
    v = std::exp(v - m);
    z += v;
  }
  for (double& v : out) v /= z;
  return out;
}

inline Vec LogSoftmax(std::span<const double> logits) {
  Vec out(logits.begin(), logits.end());
  if (out.empty()) return out;
  double m = out[0];
  for (double v : out) m = std::max(m, v);
  double z = 0.0;
  for (double v : out) z += std::exp(v - m);
  double lz = m + std::log(z);
  for (double& v : out) v -= lz;
  return out;
}

inline bool AllFinite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace dst

#endif  // DST_LINALG_H_
