#include "milrec/numeric.hpp"

#include <cmath>
#include <string>

#include "milrec/error.hpp"

namespace milrec {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "?";
}

std::optional<Activation> activation_from_string(std::string_view s) {
  if (s == "linear") return Activation::linear;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  return std::nullopt;
}

double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::linear:
      return x;
    case Activation::sigmoid:
      if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
      } else {
        double e = std::exp(x);
        return e / (1.0 + e);
      }
    case Activation::tanh:
      return std::tanh(x);
    case Activation::relu:
      return x > 0.0 ? x : 0.0;
  }
  return x;
}

double activate_grad(Activation kind, double x) {
  switch (kind) {
    case Activation::linear:
      return 1.0;
    case Activation::sigmoid: {
      double s = activate(Activation::sigmoid, x);
      return s * (1.0 - s);
    }
    case Activation::tanh: {
      double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::relu:
      return x > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0)
    throw InvalidArgument("glorot_uniform: zero dimension");
  Matrix m(rows, cols);
  double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (double& v : m.data) v = rng.next_uniform_sym(bound);
  return m;
}

Vector truncated_normal(std::size_t len, double stddev, Rng& rng) {
  if (!(stddev > 0.0))
    throw InvalidArgument("truncated_normal: std must be > 0");
  Vector out(len);
  double bound = 2.0 * stddev;
  for (double& v : out) {
    double z;
    do {
      z = rng.next_normal(stddev);
    } while (std::abs(z) > bound);
    v = z;
  }
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size())
    throw InvalidArgument("adam_step: parameter/gradient size mismatch");
  if (!(cfg.lr > 0.0)) throw InvalidArgument("adam_step: lr must be > 0");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw InvalidArgument("adam_step: state size mismatch");

  state.t += 1;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const std::size_t n = params.size();
  for (std::size_t i = 0; i < n; ++i) {
    double g = grads[i];
    double m = state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    double v = state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    double mhat = m / bc1;
    double vhat = v / bc2;
    params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void adam_step(Matrix& params, const Matrix& grads, AdamState& state, const AdamConfig& cfg) {
  if (!params.same_shape(grads))
    throw InvalidArgument("adam_step: parameter/gradient shape mismatch");
  adam_step(std::span<double>(params.data), std::span<const double>(grads.data), state, cfg);
}

Vector finite_diff_gradient(const std::function<double(std::span<const double>)>& f,
                            std::span<const double> x, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite_diff_gradient: h must be > 0");
  Vector work(x.begin(), x.end());
  Vector grad(x.size(), 0.0);
  for (std::size_t i = 0; i < work.size(); ++i) {
    double orig = work[i];
    work[i] = orig + h;
    double fp = f(work);
    work[i] = orig - h;
    double fm = f(work);
    work[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_diff_gradient: non-finite evaluation at coordinate " +
                         std::to_string(i));
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double ipow(double x, int n) {
  if (n < 0) throw InvalidArgument("ipow: negative exponent");
  double result = 1.0;
  double base = x;
  unsigned e = static_cast<unsigned>(n);
  while (e != 0) {
    if (e & 1u) result *= base;
    base *= base;
    e >>= 1;
  }
  return result;
}

}  // namespace milrec
