#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace keytopics {

// log(sum_i exp(v_i)) without overflow; -inf for an empty or all -inf input.
inline double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!(m > -std::numeric_limits<double>::infinity())) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Deterministic random source. Every distribution is built directly on the
// raw mt19937_64 output stream: the standard library's distribution objects
// are implementation-defined, which would break both cross-platform
// reproducibility and checkpoint/resume equality. The full generator state
// round-trips through serialize_state()/restore_state().
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed = 0) : engine_(seed) {}

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe under log().
  double uniform_pos() { return 1.0 - uniform01(); }

  // Unbiased uniform integer in [0, n).
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    std::uint64_t x = engine_();
    while (x < threshold) x = engine_();
    return x % n;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal via Box-Muller; consumes exactly two uniforms per draw.
  double normal01() {
    const double u1 = uniform_pos();
    const double u2 = uniform01();
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  // log of a Gamma(shape, 1) draw. Evaluated in log space so that shapes far
  // below one (symmetric Dirichlet concentrations like 1e-4) stay finite even
  // when the linear-space value would underflow.
  double log_gamma_draw(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("log_gamma_draw: shape must be positive");
    if (shape < 1.0) {
      return log_gamma_draw(shape + 1.0) + std::log(uniform_pos()) / shape;
    }
    // Marsaglia-Tsang squeeze method.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x, v;
      do {
        x = normal01();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return std::log(d * v);
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return std::log(d * v);
    }
  }

  double gamma_draw(double shape) { return std::exp(log_gamma_draw(shape)); }

  // Dirichlet draw in log space, normalized with log-sum-exp. Guarantees at
  // least one coordinate equal to exp(0 - small) even when every gamma draw
  // underflows in linear space.
  std::vector<double> dirichlet_log(const std::vector<double>& concentration) {
    if (concentration.empty()) throw std::invalid_argument("dirichlet_log: empty concentration");
    std::vector<double> lg(concentration.size());
    for (std::size_t i = 0; i < concentration.size(); ++i) lg[i] = log_gamma_draw(concentration[i]);
    const double lse = log_sum_exp(lg);
    for (double& x : lg) x -= lse;
    return lg;
  }

  std::vector<double> dirichlet(const std::vector<double>& concentration) {
    std::vector<double> p = dirichlet_log(concentration);
    for (double& x : p) x = std::exp(x);
    return p;
  }

  std::vector<double> dirichlet_symmetric(std::size_t dim, double concentration) {
    return dirichlet(std::vector<double>(dim, concentration));
  }

  double beta_draw(double a, double b) {
    const double la = log_gamma_draw(a);
    const double lb = log_gamma_draw(b);
    const double m = std::max(la, lb);
    const double ea = std::exp(la - m);
    const double eb = std::exp(lb - m);
    return ea / (ea + eb);
  }

  // Index drawn proportionally to non-negative weights.
  std::size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw std::runtime_error("categorical: negative or NaN weight");
      total += w;
    }
    if (!(total > 0.0)) throw std::runtime_error("categorical: all weights are zero");
    double u = uniform01() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

  std::size_t categorical_logits(const std::vector<double>& logits) {
    double m = -std::numeric_limits<double>::infinity();
    for (double l : logits) m = std::max(m, l);
    if (!(m > -std::numeric_limits<double>::infinity()))
      throw std::runtime_error("categorical_logits: all logits are -inf");
    std::vector<double> w(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) w[i] = std::exp(logits[i] - m);
    return categorical(w);
  }

  std::string serialize_state() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void restore_state(const std::string& text) {
    std::istringstream is(text);
    is >> engine_;
    if (is.fail()) throw std::runtime_error("RandomSource: malformed generator state");
  }

  bool operator==(const RandomSource& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace keytopics
