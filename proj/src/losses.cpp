#include "milrec/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "milrec/error.hpp"
#include "milrec/numeric.hpp"

namespace milrec {

const char* to_string(LossKind k) {
  switch (k) {
    case LossKind::square_conf: return "square";
    case LossKind::ce_point: return "ce-point";
    case LossKind::ce_pair: return "ce-pair";
    case LossKind::multinomial: return "multinomial";
    case LossKind::mil: return "mil";
  }
  return "?";
}

std::optional<LossKind> loss_kind_from_string(std::string_view s) {
  if (s == "square") return LossKind::square_conf;
  if (s == "ce-point") return LossKind::ce_point;
  if (s == "ce-pair") return LossKind::ce_pair;
  if (s == "multinomial") return LossKind::multinomial;
  if (s == "mil") return LossKind::mil;
  return std::nullopt;
}

void LossSpec::validate() const {
  if (!(A_mi > 0.0)) throw InvalidArgument("loss: A_mi must be > 0");
  if (gamma_mi < 1) throw InvalidArgument("loss: gamma_mi must be >= 1");
  if (gamma_pos < 1) throw InvalidArgument("loss: gamma_pos must be >= 1");
  if (gamma_neg < 1) throw InvalidArgument("loss: gamma_neg must be >= 1");
  if (!(eps > 0.0 && eps < 0.5)) throw InvalidArgument("loss: eps must be in (0, 0.5)");
  if (a < 0.0) throw InvalidArgument("loss: confidence slope a must be >= 0");
}

double clamp_pref(double p_hat, double eps) {
  return std::min(std::max(p_hat, eps), 1.0 - eps);
}

namespace {

// 1 inside [eps, 1-eps], 0 where the clamp is active.
double clamp_mask(double p_hat, double eps) {
  return (p_hat >= eps && p_hat <= 1.0 - eps) ? 1.0 : 0.0;
}

double stable_sigmoid(double x) { return activate(Activation::sigmoid, x); }

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

}  // namespace

ScalarLoss square_conf(int p, double p_hat, double a) {
  if (p != 0 && p != 1) throw InvalidArgument("square_conf: p must be 0 or 1");
  double weight = (a * p + 1.0) / 2.0;
  double diff = p - p_hat;
  return {weight * diff * diff, -2.0 * weight * diff};
}

ScalarLoss ce_point(int p, double p_hat, double a, double eps) {
  if (p != 0 && p != 1) throw InvalidArgument("ce_point: p must be 0 or 1");
  double mask = clamp_mask(p_hat, eps);
  double q = clamp_pref(p_hat, eps);
  double loss = 0.0, grad = 0.0;
  if (p == 1) {
    loss = -a * std::log(q);
    grad = -a / q * mask;
  } else {
    loss = -std::log(1.0 - q);
    grad = 1.0 / (1.0 - q) * mask;
  }
  return {loss, grad};
}

PairLoss ce_pair(double p_hat_i, double p_hat_j, double eps) {
  double mask_i = clamp_mask(p_hat_i, eps);
  double mask_j = clamp_mask(p_hat_j, eps);
  double d = clamp_pref(p_hat_i, eps) - clamp_pref(p_hat_j, eps);
  double loss = softplus(-d);     // == -log sigmoid(d)
  double g = stable_sigmoid(d) - 1.0;  // d loss / d d
  return {loss, g * mask_i, -g * mask_j};
}

double multinomial_loss(std::span<const double> p, std::span<const double> logits,
                        std::span<double> grad) {
  const std::size_t n = logits.size();
  if (p.size() != n || grad.size() != n)
    throw InvalidArgument("multinomial_loss: length mismatch");
  if (n == 0) throw InvalidArgument("multinomial_loss: empty input");

  double max_logit = logits[0];
  for (double x : logits) max_logit = std::max(max_logit, x);
  double z = 0.0;
  for (double x : logits) z += std::exp(x - max_logit);
  double log_z = std::log(z) + max_logit;

  double p_sum = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p_sum += p[i];
    if (p[i] != 0.0) loss += p[i] * (log_z - logits[i]);
  }
  if (p_sum == 0.0) throw InvalidArgument("multinomial_loss: target vector is all zero");
  for (std::size_t i = 0; i < n; ++i) {
    double pi = std::exp(logits[i] - max_logit) / z;
    grad[i] = p_sum * pi - p[i];
  }
  return loss;
}

ScalarLoss mil(int p, double p_hat, const LossSpec& spec) {
  if (p != -1 && p != 0 && p != 1) throw InvalidArgument("mil: p must be in {-1, 0, 1}");
  double mask = clamp_mask(p_hat, spec.eps);
  double q = clamp_pref(p_hat, spec.eps);
  ScalarLoss out;
  if (p == 1) {
    out.loss = ipow(1.0 - q, spec.gamma_pos);
    out.grad = -spec.gamma_pos * ipow(1.0 - q, spec.gamma_pos - 1) * mask;
  } else if (p == 0) {
    double d = q - 0.5;
    out.loss = spec.A_mi * ipow(d, 2 * spec.gamma_mi);
    out.grad = spec.A_mi * 2 * spec.gamma_mi * ipow(d, 2 * spec.gamma_mi - 1) * mask;
  } else {
    double sign = spec.paper_negative_sign ? -1.0 : 1.0;
    out.loss = sign * ipow(q, spec.gamma_neg);
    out.grad = sign * spec.gamma_neg * ipow(q, spec.gamma_neg - 1) * mask;
  }
  return out;
}

ScalarLoss point_loss(const LossSpec& spec, int label, double p_hat) {
  switch (spec.kind) {
    case LossKind::square_conf: return square_conf(label, p_hat, spec.a);
    case LossKind::ce_point: return ce_point(label, p_hat, spec.a, spec.eps);
    case LossKind::mil: return mil(label, p_hat, spec);
    default:
      throw InvalidArgument(std::string("point_loss: ") + to_string(spec.kind) +
                            " is not a per-item loss");
  }
}

double batch_point_loss(const LossSpec& spec, std::span<const std::uint32_t> targets,
                        std::span<const double> preds, std::span<const std::int8_t> labels,
                        SparseGrad& grad_out) {
  if (targets.empty()) throw InvalidArgument("batch_point_loss: empty target set");
  if (preds.size() != targets.size() || labels.size() != targets.size())
    throw InvalidArgument("batch_point_loss: length mismatch");
  grad_out.clear();
  grad_out.idx.reserve(targets.size());
  grad_out.val.reserve(targets.size());
  double total = 0.0;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    ScalarLoss l = point_loss(spec, labels[k], preds[k]);
    total += l.loss;
    grad_out.idx.push_back(targets[k]);
    grad_out.val.push_back(l.grad);
  }
  return total;
}

double batch_pair_loss(const LossSpec& spec, std::span<const ItemPair> pairs,
                       std::span<const double> preds, SparseGrad& grad_out) {
  if (pairs.empty()) throw InvalidArgument("batch_pair_loss: empty pair set");
  grad_out.clear();
  double total = 0.0;
  std::vector<std::pair<std::uint32_t, double>> contrib;
  contrib.reserve(pairs.size() * 2);
  for (const ItemPair& pr : pairs) {
    PairLoss l = ce_pair(preds[pr.pos], preds[pr.neg], spec.eps);
    total += l.loss;
    contrib.emplace_back(pr.pos, l.grad_i);
    contrib.emplace_back(pr.neg, l.grad_j);
  }
  // stable: contributions of one item always sum in pair order
  std::stable_sort(contrib.begin(), contrib.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t k = 0; k < contrib.size();) {
    std::uint32_t item = contrib[k].first;
    double g = 0.0;
    while (k < contrib.size() && contrib[k].first == item) g += contrib[k++].second;
    grad_out.idx.push_back(item);
    grad_out.val.push_back(g);
  }
  return total;
}

}  // namespace milrec
