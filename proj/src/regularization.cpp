#include "milrec/regularization.hpp"

#include <cmath>

#include "milrec/error.hpp"
#include "milrec/model.hpp"

namespace milrec {

void RegSpec::validate() const {
  if (lambda < 0.0) throw InvalidArgument("reg: lambda must be >= 0");
  if (alpha_enc && !(*alpha_enc > 0.0)) throw InvalidArgument("reg: alpha_enc must be > 0");
  if (alpha_dec && !(*alpha_dec > 0.0)) throw InvalidArgument("reg: alpha_dec must be > 0");
  if (!(dropout_q >= 0.0 && dropout_q < 1.0))
    throw InvalidArgument("reg: dropout_q must be in [0, 1)");
}

namespace {

double squared_norm(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data) s += v * v;
  return s;
}

void axpy(double alpha, const Matrix& x, Matrix& y) {
  for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] += alpha * x.data[i];
}

}  // namespace

double weight_decay(const Matrix& W, const Matrix& Wp, double lambda, Matrix* grad_W,
                    Matrix* grad_Wp) {
  if (lambda < 0.0) throw InvalidArgument("weight_decay: lambda must be >= 0");
  if (lambda == 0.0) return 0.0;
  double penalty = lambda * (squared_norm(W) + squared_norm(Wp));
  if (grad_W) axpy(2.0 * lambda, W, *grad_W);
  if (grad_Wp) axpy(2.0 * lambda, Wp, *grad_Wp);
  return penalty;
}

double scaled_weight_decay(const Matrix& W, const Matrix& Wp, double lambda, std::size_t dim,
                           std::size_t n_users, std::size_t n_items, Matrix* grad_W,
                           Matrix* grad_Wp) {
  if (dim == 0 || n_users == 0 || n_items == 0)
    throw InvalidArgument("scaled_weight_decay: zero dimension");
  if (lambda < 0.0) throw InvalidArgument("scaled_weight_decay: lambda must be >= 0");
  if (lambda == 0.0) return 0.0;
  double cw = lambda / (static_cast<double>(dim) * static_cast<double>(n_users));
  double cp = lambda / (static_cast<double>(dim) * static_cast<double>(n_items));
  double penalty = cw * squared_norm(W) + cp * squared_norm(Wp);
  if (grad_W) axpy(2.0 * cw, W, *grad_W);
  if (grad_Wp) axpy(2.0 * cp, Wp, *grad_Wp);
  return penalty;
}

namespace {

// Rescales until the squared norm is within bound. Iterating makes the op
// exactly idempotent: a clipped vector re-enters with sq <= nsq (or a scale
// that rounds to >= 1) and is returned untouched bit for bit.
template <typename Get, typename Scale>
void clip_to_norm(std::size_t len, double alpha, Get get, Scale scale_by) {
  const double n = alpha * std::sqrt(static_cast<double>(len));
  const double nsq = n * n;
  while (true) {
    double sq = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      double v = get(i);
      sq += v * v;
    }
    if (sq <= nsq) return;
    double scale = n / std::sqrt(sq);
    if (scale >= 1.0) return;
    scale_by(scale);
  }
}

}  // namespace

void max_norm_clip(std::span<double> x, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("max_norm_clip: alpha must be > 0");
  clip_to_norm(
      x.size(), alpha, [&x](std::size_t i) { return x[i]; },
      [&x](double s) {
        for (double& v : x) v *= s;
      });
}

void max_norm_columns(Matrix& m, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("max_norm_columns: alpha must be > 0");
  for (std::size_t j = 0; j < m.cols; ++j) {
    clip_to_norm(
        m.rows, alpha, [&m, j](std::size_t i) { return m(i, j); },
        [&m, j](double s) {
          for (std::size_t i = 0; i < m.rows; ++i) m(i, j) *= s;
        });
  }
}

void max_norm_rows(Matrix& m, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("max_norm_rows: alpha must be > 0");
  for (std::size_t i = 0; i < m.rows; ++i) max_norm_clip(m.row(i), alpha);
}

void apply_max_norm(ModelParams& params, std::optional<double> alpha_enc,
                    std::optional<double> alpha_dec) {
  if (alpha_enc) max_norm_columns(params.W, *alpha_enc);
  if (alpha_dec) max_norm_rows(params.Wp, *alpha_dec);
}

void dropout_corrupt(SparseVec& v, double q, Rng& rng, bool inverted) {
  if (!(q >= 0.0 && q < 1.0)) throw InvalidArgument("dropout_corrupt: q must be in [0, 1)");
  if (q == 0.0) return;
  double keep_scale = inverted ? 1.0 / (1.0 - q) : 1.0;
  std::size_t w = 0;
  for (std::size_t k = 0; k < v.idx.size(); ++k) {
    bool drop = rng.next_double() < q;
    if (!drop) {
      v.idx[w] = v.idx[k];
      v.val[w] = v.val[k] * keep_scale;
      ++w;
    }
  }
  v.idx.resize(w);
  v.val.resize(w);
}

}  // namespace milrec
