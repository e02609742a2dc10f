#pragma once

// Shared primitives: error type, small fixed-size linear algebra, the
// deterministic parallel loop, and the flat shaped buffer used by the
// computation graph.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace tomograd {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline Vec2 operator*(Vec2 v, double s) { return s * v; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 v) { return std::sqrt(dot(v, v)); }

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
inline Vec3 operator*(Vec3 v, double s) { return s * v; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 v) { return std::sqrt(dot(v, v)); }

struct Mat33 {
  // row-major
  std::array<double, 9> m{};

  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) -
           m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  Mat33 inverse() const {
    const double d = det();
    check(std::abs(d) > 1e-300, "matrix block is not invertible");
    const double i = 1.0 / d;
    Mat33 r;
    r.m = {(m[4] * m[8] - m[5] * m[7]) * i, (m[2] * m[7] - m[1] * m[8]) * i,
           (m[1] * m[5] - m[2] * m[4]) * i, (m[5] * m[6] - m[3] * m[8]) * i,
           (m[0] * m[8] - m[2] * m[6]) * i, (m[2] * m[3] - m[0] * m[5]) * i,
           (m[3] * m[7] - m[4] * m[6]) * i, (m[1] * m[6] - m[0] * m[7]) * i,
           (m[0] * m[4] - m[1] * m[3]) * i};
    return r;
  }

  Vec3 mul(Vec3 v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  Mat33 matmul(const Mat33& o) const {
    Mat33 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          r.m[std::size_t(3 * i + j)] +=
              m[std::size_t(3 * i + k)] * o.m[std::size_t(3 * k + j)];
    return r;
  }
};

// 3x4 homogeneous projection matrix, row-major.
struct Mat34 {
  std::array<double, 12> m{};

  // maps world (x,y,z,1) to homogeneous pixel coordinates (u*w, v*w, w)
  Vec3 mul_point(Vec3 p) const {
    return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
            m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
            m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
  }

  Mat33 left_block() const {
    return Mat33{{m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]}};
  }

  Vec3 last_column() const { return {m[3], m[7], m[11]}; }
};

// --- deterministic parallelism -------------------------------------------
//
// Work is split by output element; every element is computed by a pure
// function of the inputs, so results are bitwise identical for any thread
// count.

inline unsigned& thread_count_ref() {
  static unsigned n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

inline void set_num_threads(unsigned n) { thread_count_ref() = std::max(1u, n); }
inline unsigned num_threads() { return thread_count_ref(); }

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  const unsigned threads = num_threads();
  if (threads <= 1 || n < 2 * threads) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

// --- flat shaped buffer ----------------------------------------------------

template <typename T = double>
struct Tensor {
  std::vector<std::size_t> shape;  // empty shape = scalar
  std::vector<T> data;

  Tensor() : data(1, T(0)) {}
  explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
    data.assign(element_count(shape), T(0));
  }
  Tensor(std::vector<std::size_t> s, std::vector<T> d)
      : shape(std::move(s)), data(std::move(d)) {
    check(data.size() == element_count(shape), "tensor data does not match shape");
  }

  static std::size_t element_count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto v : s) n *= v;
    return n;
  }

  static Tensor scalar(T v) {
    Tensor t;
    t.data[0] = v;
    return t;
  }

  std::size_t size() const { return data.size(); }
  bool is_scalar() const { return shape.empty(); }
  T scalar_value() const {
    check(is_scalar(), "tensor is not a scalar");
    return data[0];
  }
};

}  // namespace tomograd
