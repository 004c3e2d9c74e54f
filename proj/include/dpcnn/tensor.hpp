#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpcnn {

// Dense row-major tensor of up to 4 dimensions. Training runs use float,
// gradient checks and oracles use double; both share the same code paths.
template <class T>
struct Tensor {
  std::array<int, 4> dims{1, 1, 1, 1};
  int ndim = 0;
  std::vector<T> v;

  Tensor() = default;
  explicit Tensor(std::initializer_list<int> shape) { reshape(shape); }

  void reshape(std::initializer_list<int> shape) {
    if (shape.size() == 0 || shape.size() > 4)
      throw std::invalid_argument("Tensor: rank must be 1..4");
    dims = {1, 1, 1, 1};
    ndim = static_cast<int>(shape.size());
    size_t total = 1;
    int i = 0;
    for (int d : shape) {
      if (d <= 0) throw std::invalid_argument("Tensor: dims must be positive");
      dims[i++] = d;
      total *= static_cast<size_t>(d);
    }
    v.assign(total, T(0));
  }

  size_t size() const { return v.size(); }
  T* data() { return v.data(); }
  const T* data() const { return v.data(); }
  T& operator[](size_t i) { return v[i]; }
  const T& operator[](size_t i) const { return v[i]; }

  void fill(T x) { std::fill(v.begin(), v.end(), x); }

  bool finite() const {
    for (const T& x : v)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  void require_finite(const std::string& who) const {
    if (!finite()) throw std::runtime_error(who + ": non-finite tensor entries");
  }
};

}  // namespace dpcnn
