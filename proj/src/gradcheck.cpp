#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "milrec/error.hpp"
#include "milrec/train.hpp"

namespace milrec {

namespace {

constexpr std::size_t kUsers = 6;
constexpr std::size_t kItems = 12;
constexpr std::size_t kDim = 3;

Interactions tiny_interactions() {
  Interactions in;
  in.n_users = kUsers;
  in.n_items = kItems;
  in.items = {{0, 3, 7}, {1, 2}, {4, 5, 6, 11}, {0, 8}, {9}, {2, 3, 10}};
  return in;
}

// Per-user fixed fixture so the loss is a pure function of the parameters.
struct UserFixture {
  SparseVec input;
  std::vector<std::uint32_t> targets;
  std::vector<std::int8_t> labels;
  std::vector<ItemPair> pairs;
};

std::size_t flat_size(const ModelParams& p) {
  return p.W.size() + p.b.size() + p.Wp.size() + p.bp.size();
}

Vector flatten(const ModelParams& p) {
  Vector x;
  x.reserve(flat_size(p));
  x.insert(x.end(), p.W.data.begin(), p.W.data.end());
  x.insert(x.end(), p.b.begin(), p.b.end());
  x.insert(x.end(), p.Wp.data.begin(), p.Wp.data.end());
  x.insert(x.end(), p.bp.begin(), p.bp.end());
  return x;
}

Vector flatten(const GradBuffers& g) {
  Vector x;
  x.reserve(g.W.size() + g.b.size() + g.Wp.size() + g.bp.size());
  x.insert(x.end(), g.W.data.begin(), g.W.data.end());
  x.insert(x.end(), g.b.begin(), g.b.end());
  x.insert(x.end(), g.Wp.data.begin(), g.Wp.data.end());
  x.insert(x.end(), g.bp.begin(), g.bp.end());
  return x;
}

void unflatten(std::span<const double> x, ModelParams& p) {
  std::size_t off = 0;
  std::copy(x.begin() + off, x.begin() + off + p.W.size(), p.W.data.begin());
  off += p.W.size();
  std::copy(x.begin() + off, x.begin() + off + p.b.size(), p.b.begin());
  off += p.b.size();
  std::copy(x.begin() + off, x.begin() + off + p.Wp.size(), p.Wp.data.begin());
  off += p.Wp.size();
  std::copy(x.begin() + off, x.begin() + off + p.bp.size(), p.bp.begin());
}

// Forward + loss for one fixture; when grads is set, also backpropagates
// with weight 1/kUsers.
double fixture_loss(const TrainConfig& config, const ModelParams& params, const UserFixture& fx,
                    GradBuffers* grads) {
  Vector hidden_pre, hidden;
  encode_sparse(params, fx.input, hidden_pre, hidden);

  SparseGrad grad;
  Vector out_pre;
  double loss = 0.0;
  if (config.loss.kind == LossKind::ce_pair) {
    std::vector<std::uint32_t> touched;
    for (const ItemPair& pr : fx.pairs) {
      touched.push_back(pr.pos);
      touched.push_back(pr.neg);
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    Vector pre(touched.size()), preds(touched.size());
    for (std::size_t k = 0; k < touched.size(); ++k) {
      pre[k] = decode_pre_at(params, hidden, touched[k]);
      preds[k] = activate(params.dec_act, pre[k]);
    }
    std::vector<ItemPair> local(fx.pairs.size());
    auto local_of = [&touched](std::uint32_t item) {
      return static_cast<std::uint32_t>(
          std::lower_bound(touched.begin(), touched.end(), item) - touched.begin());
    };
    for (std::size_t k = 0; k < fx.pairs.size(); ++k)
      local[k] = {local_of(fx.pairs[k].pos), local_of(fx.pairs[k].neg)};
    SparseGrad lg;
    loss = batch_pair_loss(config.loss, local, preds, lg);
    grad.idx.resize(lg.idx.size());
    grad.val = lg.val;
    out_pre.resize(lg.idx.size());
    for (std::size_t k = 0; k < lg.idx.size(); ++k) {
      grad.idx[k] = touched[lg.idx[k]];
      out_pre[k] = pre[lg.idx[k]];
    }
  } else if (config.loss.kind == LossKind::multinomial) {
    Vector p(kItems, 0.0);
    for (std::size_t k = 0; k < fx.targets.size(); ++k)
      if (fx.labels[k] == 1) p[fx.targets[k]] = 1.0;
    out_pre.resize(kItems);
    for (std::uint32_t i = 0; i < kItems; ++i) out_pre[i] = decode_pre_at(params, hidden, i);
    grad.idx.resize(kItems);
    grad.val.resize(kItems);
    for (std::uint32_t i = 0; i < kItems; ++i) grad.idx[i] = i;
    loss = multinomial_loss(p, out_pre, grad.val);
  } else {
    out_pre.resize(fx.targets.size());
    Vector preds(fx.targets.size());
    for (std::size_t k = 0; k < fx.targets.size(); ++k) {
      out_pre[k] = decode_pre_at(params, hidden, fx.targets[k]);
      preds[k] = activate(params.dec_act, out_pre[k]);
    }
    loss = batch_point_loss(config.loss, fx.targets, preds, fx.labels, grad);
  }

  if (grads) {
    UserGradContrib c = backward_contrib_at(params, fx.input, hidden_pre, hidden, grad, out_pre);
    apply_contrib(c, 1.0 / static_cast<double>(kUsers), *grads);
  }
  return loss;
}

double total_loss(const TrainConfig& config, const ModelParams& params,
                  const std::vector<UserFixture>& fixtures, GradBuffers* grads) {
  double sum = 0.0;
  for (const UserFixture& fx : fixtures) sum += fixture_loss(config, params, fx, grads);
  sum /= static_cast<double>(kUsers);
  Matrix* gW = grads ? &grads->W : nullptr;
  Matrix* gWp = grads ? &grads->Wp : nullptr;
  if (config.reg.decay_mode == DecayMode::plain)
    sum += weight_decay(params.W, params.Wp, config.reg.lambda, gW, gWp);
  else
    sum += scaled_weight_decay(params.W, params.Wp, config.reg.lambda, kDim, kUsers, kItems, gW,
                               gWp);
  return sum;
}

TrainConfig combo_config(LossKind loss, ModelKind kind) {
  TrainConfig c;
  c.kind = kind;
  c.latent_dim = kDim;
  c.loss.kind = loss;
  c.loss.a = 1.0;
  c.loss.eps = 1e-5;
  // Moderate barrier exponents: with gamma_mi = 10 the barrier derivative
  // underflows over most of the domain and central differences measure only
  // round-off there.
  c.loss.A_mi = 50.0;
  c.loss.gamma_mi = 2;
  c.loss.gamma_pos = 2;
  c.loss.gamma_neg = 3;
  c.reg.lambda = 0.01;
  c.reg.decay_mode = kind == ModelKind::mf ? DecayMode::scaled : DecayMode::plain;
  c.reg.dropout_q = 0.0;  // corruption off: the check needs a smooth function
  c.reg.normalize_input = kind == ModelKind::dae;
  c.sampling_ratio = 2;
  switch (loss) {
    case LossKind::square_conf:
      c.enc_act = Activation::linear;
      c.dec_act = Activation::linear;
      break;
    case LossKind::multinomial:
      c.enc_act = Activation::tanh;
      c.dec_act = Activation::linear;
      c.full_catalogue = true;
      break;
    default:
      c.enc_act = Activation::linear;
      c.dec_act = Activation::sigmoid;
      break;
  }
  return c;
}

}  // namespace

GradCheckReport grad_check(double tolerance, std::optional<LossKind> only_loss,
                           std::optional<ModelKind> only_model) {
  if (!(tolerance > 0.0)) throw InvalidArgument("grad_check: tolerance must be > 0");
  GradCheckReport report;
  report.tolerance = tolerance;

  const Interactions train = tiny_interactions();
  const std::size_t median = median_items_per_user(train);

  for (LossKind loss : {LossKind::square_conf, LossKind::ce_point, LossKind::ce_pair,
                        LossKind::multinomial, LossKind::mil}) {
    if (only_loss && *only_loss != loss) continue;
    for (ModelKind kind : {ModelKind::dae, ModelKind::mf}) {
      if (only_model && *only_model != kind) continue;
      TrainConfig config = combo_config(loss, kind);

      // Wide-ish random parameters keep the decoder away from the flat
      // regions of sigmoid/tanh.
      ModelParams params;
      params.kind = kind;
      params.enc_act = config.enc_act;
      params.dec_act = config.dec_act;
      Rng prng(Rng::mix(0xC0FFEE, static_cast<std::uint64_t>(loss) * 16 +
                                      static_cast<std::uint64_t>(kind)));
      const std::size_t in_cols = kind == ModelKind::dae ? kItems : kUsers;
      params.W = Matrix(kDim, in_cols);
      for (double& v : params.W.data) v = prng.next_uniform_sym(0.8);
      params.b.resize(kDim);
      for (double& v : params.b) v = prng.next_uniform_sym(0.5);
      params.Wp = Matrix(kItems, kDim);
      for (double& v : params.Wp.data) v = prng.next_uniform_sym(0.8);
      params.bp.resize(kItems);
      for (double& v : params.bp) v = prng.next_uniform_sym(0.5);

      std::vector<UserFixture> fixtures(kUsers);
      SamplingSpec sampling{config.sampling_ratio, median};
      for (std::size_t u = 0; u < kUsers; ++u) {
        UserFixture& fx = fixtures[u];
        Rng srng(Rng::mix(0xF17, u));
        if (kind == ModelKind::dae) {
          fx.input = user_vector(train, u, false);
          normalize_unit(fx.input);
        } else {
          fx.input.idx.push_back(static_cast<std::uint32_t>(u));
          fx.input.val.push_back(1.0);
        }
        const auto& observed = train.items[u];
        if (loss == LossKind::ce_pair) {
          fx.pairs = sample_pairs(observed, kItems, sampling, srng);
        } else if (loss == LossKind::multinomial) {
          fx.targets.resize(kItems);
          fx.labels.assign(kItems, 0);
          for (std::uint32_t i = 0; i < kItems; ++i) fx.targets[i] = i;
          for (std::uint32_t i : observed) fx.labels[i] = 1;
        } else {
          fx.targets = sample_targets(observed, kItems, sampling, srng);
          fx.labels.assign(fx.targets.size(), 0);
          std::fill(fx.labels.begin(),
                    fx.labels.begin() + static_cast<std::ptrdiff_t>(observed.size()), 1);
          // the first sampled negative exercises the negative-feedback term
          if (loss == LossKind::mil && fx.targets.size() > observed.size())
            fx.labels[observed.size()] = -1;
        }
      }

      GradBuffers grads;
      grads.init_like(params);
      total_loss(config, params, fixtures, &grads);
      Vector analytic = flatten(grads);

      ModelParams probe = params;
      auto f = [&](std::span<const double> x) {
        unflatten(x, probe);
        return total_loss(config, probe, fixtures, nullptr);
      };
      Vector x0 = flatten(params);
      Vector fd = finite_diff_gradient(f, x0, 1e-6);

      double err = max_rel_err(analytic, fd);
      std::string name = std::string(to_string(loss)) + "/" + to_string(kind);
      report.entries.push_back({std::move(name), err, err < tolerance});
    }
  }
  return report;
}

}  // namespace milrec
