#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>

#include "milrec/matrix.hpp"
#include "milrec/rng.hpp"

namespace milrec {

enum class Activation : std::uint8_t { linear = 0, sigmoid = 1, tanh = 2, relu = 3 };

const char* to_string(Activation a);
std::optional<Activation> activation_from_string(std::string_view s);

// Element-wise activation and its exact derivative at x. sigmoid uses the
// sign-split form so exp never overflows.
double activate(Activation kind, double x);
double activate_grad(Activation kind, double x);

// Glorot/Xavier uniform init: entries uniform in [-b, b],
// b = sqrt(6 / (rows + cols)). Throws InvalidArgument on a zero dimension.
Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

// N(0, std^2) samples rejected outside +-2*std. Throws InvalidArgument for
// std <= 0.
Vector truncated_normal(std::size_t len, double stddev, Rng& rng);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector m;  // first moment
  Vector v;  // second moment
  std::int64_t t = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update over a flat parameter view. state buffers
// must match the parameter length (sized on first use if empty).
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg);
void adam_step(Matrix& params, const Matrix& grads, AdamState& state, const AdamConfig& cfg);

// Central difference (f(x+h e_i) - f(x-h e_i)) / 2h per coordinate.
// Throws NumericError if f returns a non-finite value.
Vector finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                            std::span<const double> x, double h);

// x^n for integer n >= 0, by repeated squaring. Deterministic across
// platforms, unlike std::pow on some libms.
double ipow(double x, int n);

}  // namespace milrec
