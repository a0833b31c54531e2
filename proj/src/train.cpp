#include "milrec/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "milrec/error.hpp"
#include "milrec/eval.hpp"

namespace milrec {

namespace {

// rng stream tags; every draw in a run derives from (seed, tag path)
constexpr std::uint64_t kStreamInit = 0x01;
constexpr std::uint64_t kStreamIter = 0x02;
constexpr std::uint64_t kStreamSlot = 0x1000;

constexpr double kBiasStd = 1e-3;

}  // namespace

void TrainConfig::validate() const {
  if (latent_dim == 0) throw InvalidArgument("config: latent_dim must be >= 1");
  if (batch_size == 0) throw InvalidArgument("config: batch_size must be >= 1");
  // iterations == 0 is a valid degenerate run: the checkpoint is the init
  if (!(learning_rate > 0.0)) throw InvalidArgument("config: learning_rate must be > 0");
  if (threads == 0) throw InvalidArgument("config: threads must be >= 1");
  loss.validate();
  reg.validate();
  if (loss.kind == LossKind::multinomial) {
    if (dec_act != Activation::linear)
      throw InvalidArgument("config: the multinomial loss reads linear decoder outputs as logits");
    if (!full_catalogue)
      throw InvalidArgument("config: the multinomial loss scores the full catalogue");
  }
}

TrainConfig preset_config(std::string_view name) {
  TrainConfig c;
  c.preset = std::string(name);

  auto dae_base = [&c] {
    c.kind = ModelKind::dae;
    c.latent_dim = 200;
    c.iterations = 120000;
    c.reg.dropout_q = 0.5;
    c.reg.normalize_input = true;
  };
  auto mf_base = [&c] {
    c.kind = ModelKind::mf;
    c.latent_dim = 200;
    c.iterations = 180000;
    c.enc_act = Activation::linear;
    c.reg.dropout_q = 0.0;
    c.reg.normalize_input = false;
    c.reg.decay_mode = DecayMode::scaled;
    c.sampling_ratio = 100;
  };

  if (name == "mf-square") {
    mf_base();
    c.dec_act = Activation::linear;
    c.loss.kind = LossKind::square_conf;
    c.loss.a = 1.0;
    c.reg.lambda = 5.0;
  } else if (name == "mf-ce") {
    mf_base();
    c.dec_act = Activation::sigmoid;
    c.loss.kind = LossKind::ce_point;
    c.loss.a = 1.0;
    c.reg.lambda = 50.0;
  } else if (name == "mf-mil") {
    mf_base();
    c.dec_act = Activation::sigmoid;
    c.loss.kind = LossKind::mil;
    c.loss.A_mi = 1e6;
    c.loss.gamma_mi = 10;
    c.loss.gamma_pos = 1;
    c.reg.lambda = 50.0;
  } else if (name == "ce-point-lin-sig" || name == "ce-point-sig-sig") {
    dae_base();
    c.enc_act = name == "ce-point-sig-sig" ? Activation::sigmoid : Activation::linear;
    c.dec_act = Activation::sigmoid;
    c.loss.kind = LossKind::ce_point;
    c.loss.a = 1.0;
    c.reg.lambda = 2e-5;
    c.sampling_ratio = 50;
  } else if (name == "ce-pair-lin-sig" || name == "ce-pair-sig-sig") {
    dae_base();
    c.enc_act = name == "ce-pair-sig-sig" ? Activation::sigmoid : Activation::linear;
    c.dec_act = Activation::sigmoid;
    c.loss.kind = LossKind::ce_pair;
    c.reg.lambda = 2e-5;
    c.sampling_ratio = 100;
  } else if (name == "multi-tanh-lin") {
    dae_base();
    c.enc_act = Activation::tanh;
    c.dec_act = Activation::linear;
    c.loss.kind = LossKind::multinomial;
    c.reg.lambda = 2e-5;
    c.full_catalogue = true;
    c.sampling_ratio = 0;
  } else if (name == "mil-lin-sig" || name == "mil-sig-sig") {
    dae_base();
    c.enc_act = name == "mil-sig-sig" ? Activation::sigmoid : Activation::linear;
    c.dec_act = Activation::sigmoid;
    c.loss.kind = LossKind::mil;
    c.loss.A_mi = 1e6;
    c.loss.gamma_mi = 10;
    c.loss.gamma_pos = 1;
    c.reg.lambda = 5e-6;
    c.sampling_ratio = 50;
  } else {
    throw InvalidArgument("unknown preset '" + std::string(name) + "'");
  }
  return c;
}

std::vector<std::string> preset_names() {
  return {"mf-square",        "mf-ce",           "mf-mil",
          "ce-point-lin-sig", "ce-point-sig-sig", "ce-pair-lin-sig",
          "ce-pair-sig-sig",  "multi-tanh-lin",   "mil-lin-sig",
          "mil-sig-sig"};
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

double to_double(std::string_view key, std::string_view value) {
  try {
    return std::stod(std::string(value));
  } catch (const std::exception&) {
    throw InvalidArgument("config: bad numeric value for '" + std::string(key) + "'");
  }
}

std::int64_t to_int(std::string_view key, std::string_view value) {
  try {
    return std::stoll(std::string(value));
  } catch (const std::exception&) {
    throw InvalidArgument("config: bad integer value for '" + std::string(key) + "'");
  }
}

std::uint64_t to_uint(std::string_view key, std::string_view value) {
  try {
    return std::stoull(std::string(value));
  } catch (const std::exception&) {
    throw InvalidArgument("config: bad integer value for '" + std::string(key) + "'");
  }
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InvalidArgument("config: bad boolean value for '" + std::string(key) + "'");
}

}  // namespace

bool apply_config_entry(TrainConfig& c, std::string_view key, std::string_view value) {
  if (key == "preset") {
    std::string keep_preset(value);
    c = preset_config(keep_preset);
    return true;
  }
  if (key == "model") {
    auto k = model_kind_from_string(value);
    if (!k) throw InvalidArgument("config: unknown model '" + std::string(value) + "'");
    c.kind = *k;
    return true;
  }
  if (key == "latent_dim") { c.latent_dim = static_cast<std::size_t>(to_uint(key, value)); return true; }
  if (key == "encoder_activation") {
    auto a = activation_from_string(value);
    if (!a) throw InvalidArgument("config: unknown activation '" + std::string(value) + "'");
    c.enc_act = *a;
    return true;
  }
  if (key == "decoder_activation") {
    auto a = activation_from_string(value);
    if (!a) throw InvalidArgument("config: unknown activation '" + std::string(value) + "'");
    c.dec_act = *a;
    return true;
  }
  if (key == "loss") {
    auto l = loss_kind_from_string(value);
    if (!l) throw InvalidArgument("config: unknown loss '" + std::string(value) + "'");
    c.loss.kind = *l;
    return true;
  }
  if (key == "a") { c.loss.a = to_double(key, value); return true; }
  if (key == "A_mi") { c.loss.A_mi = to_double(key, value); return true; }
  if (key == "gamma_mi") { c.loss.gamma_mi = static_cast<int>(to_int(key, value)); return true; }
  if (key == "gamma_pos") { c.loss.gamma_pos = static_cast<int>(to_int(key, value)); return true; }
  if (key == "gamma_neg") { c.loss.gamma_neg = static_cast<int>(to_int(key, value)); return true; }
  if (key == "eps") { c.loss.eps = to_double(key, value); return true; }
  if (key == "paper_negative_sign") { c.loss.paper_negative_sign = to_bool(key, value); return true; }
  if (key == "lambda") { c.reg.lambda = to_double(key, value); return true; }
  if (key == "decay_mode") {
    if (value == "plain") c.reg.decay_mode = DecayMode::plain;
    else if (value == "scaled") c.reg.decay_mode = DecayMode::scaled;
    else throw InvalidArgument("config: unknown decay_mode '" + std::string(value) + "'");
    return true;
  }
  if (key == "alpha_enc") { c.reg.alpha_enc = to_double(key, value); return true; }
  if (key == "alpha_dec") { c.reg.alpha_dec = to_double(key, value); return true; }
  if (key == "dropout_q") { c.reg.dropout_q = to_double(key, value); return true; }
  if (key == "normalize_input") { c.reg.normalize_input = to_bool(key, value); return true; }
  if (key == "normalize_before_dropout") { c.reg.normalize_before_dropout = to_bool(key, value); return true; }
  if (key == "inverted_dropout") { c.reg.inverted_dropout = to_bool(key, value); return true; }
  if (key == "sampling_ratio") { c.sampling_ratio = static_cast<std::size_t>(to_uint(key, value)); return true; }
  if (key == "full_catalogue") { c.full_catalogue = to_bool(key, value); return true; }
  if (key == "batch_size") { c.batch_size = static_cast<std::size_t>(to_uint(key, value)); return true; }
  if (key == "iterations") { c.iterations = static_cast<std::size_t>(to_uint(key, value)); return true; }
  if (key == "learning_rate") { c.learning_rate = to_double(key, value); return true; }
  if (key == "adam_beta1") { c.adam_beta1 = to_double(key, value); return true; }
  if (key == "adam_beta2") { c.adam_beta2 = to_double(key, value); return true; }
  if (key == "adam_eps") { c.adam_eps = to_double(key, value); return true; }
  if (key == "seed") { c.seed = to_uint(key, value); return true; }
  if (key == "eval_every") { c.eval_every = static_cast<std::size_t>(to_uint(key, value)); return true; }
  if (key == "threads") { c.threads = static_cast<std::size_t>(to_uint(key, value)); return true; }
  return false;
}

TrainConfig parse_config_text(std::string_view text) {
  // collect entries first so a preset key anywhere applies before overrides
  std::vector<std::pair<std::string, std::string>> entries;
  std::string preset_value;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    std::string_view line =
        text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
    if (key == "preset")
      preset_value = value;
    else
      entries.emplace_back(std::move(key), std::move(value));
  }
  TrainConfig c;
  if (!preset_value.empty()) c = preset_config(preset_value);
  for (const auto& [key, value] : entries) {
    if (!apply_config_entry(c, key, value))
      throw InvalidArgument("config: unknown key '" + key + "'");
  }
  return c;
}

TrainConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_text(const TrainConfig& c) {
  std::ostringstream out;
  out.precision(17);
  if (!c.preset.empty()) out << "preset = " << c.preset << '\n';
  out << "model = " << to_string(c.kind) << '\n';
  out << "latent_dim = " << c.latent_dim << '\n';
  out << "encoder_activation = " << to_string(c.enc_act) << '\n';
  out << "decoder_activation = " << to_string(c.dec_act) << '\n';
  out << "loss = " << to_string(c.loss.kind) << '\n';
  out << "a = " << c.loss.a << '\n';
  out << "A_mi = " << c.loss.A_mi << '\n';
  out << "gamma_mi = " << c.loss.gamma_mi << '\n';
  out << "gamma_pos = " << c.loss.gamma_pos << '\n';
  out << "gamma_neg = " << c.loss.gamma_neg << '\n';
  out << "eps = " << c.loss.eps << '\n';
  out << "paper_negative_sign = " << (c.loss.paper_negative_sign ? "true" : "false") << '\n';
  out << "lambda = " << c.reg.lambda << '\n';
  out << "decay_mode = " << (c.reg.decay_mode == DecayMode::plain ? "plain" : "scaled") << '\n';
  if (c.reg.alpha_enc) out << "alpha_enc = " << *c.reg.alpha_enc << '\n';
  if (c.reg.alpha_dec) out << "alpha_dec = " << *c.reg.alpha_dec << '\n';
  out << "dropout_q = " << c.reg.dropout_q << '\n';
  out << "normalize_input = " << (c.reg.normalize_input ? "true" : "false") << '\n';
  out << "normalize_before_dropout = " << (c.reg.normalize_before_dropout ? "true" : "false")
      << '\n';
  out << "inverted_dropout = " << (c.reg.inverted_dropout ? "true" : "false") << '\n';
  out << "sampling_ratio = " << c.sampling_ratio << '\n';
  out << "full_catalogue = " << (c.full_catalogue ? "true" : "false") << '\n';
  out << "batch_size = " << c.batch_size << '\n';
  out << "iterations = " << c.iterations << '\n';
  out << "learning_rate = " << c.learning_rate << '\n';
  out << "adam_beta1 = " << c.adam_beta1 << '\n';
  out << "adam_beta2 = " << c.adam_beta2 << '\n';
  out << "adam_eps = " << c.adam_eps << '\n';
  out << "seed = " << c.seed << '\n';
  out << "eval_every = " << c.eval_every << '\n';
  out << "threads = " << c.threads << '\n';
  return out.str();
}

void write_train_log(const TrainLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write train log: " + path);
  out << "iteration\tmean_loss\tvalid_ndcg100\twall_ms\n";
  out.precision(17);
  for (const auto& e : log.entries)
    out << e.iteration << '\t' << e.mean_loss << '\t' << e.valid_ndcg100 << '\t' << e.wall_ms
        << '\n';
}

ModelParams init_params(const TrainConfig& config, std::size_t n_users, std::size_t n_items,
                        Rng& rng) {
  ModelParams p;
  p.kind = config.kind;
  p.enc_act = config.enc_act;
  p.dec_act = config.dec_act;
  const std::size_t in_cols = config.kind == ModelKind::dae ? n_items : n_users;
  p.W = glorot_uniform(config.latent_dim, in_cols, rng);
  p.b = truncated_normal(config.latent_dim, kBiasStd, rng);
  p.Wp = glorot_uniform(n_items, config.latent_dim, rng);
  p.bp = truncated_normal(n_items, kBiasStd, rng);
  p.validate();
  return p;
}

namespace {

struct SlotResult {
  UserGradContrib contrib;
  bool active = false;
  std::string error;
};

// One user's forward pass, loss and backward deltas. Decoding is restricted
// to the items the loss touches.
void compute_slot(const TrainConfig& config, const ModelParams& params, const Interactions& train,
                  const SamplingSpec& sampling, std::size_t user, Rng rng, SlotResult& out) {
  out.active = false;
  const auto& observed = train.items[user];
  const std::size_t n_items = train.n_items;

  // A user whose whole history fell into valid/test has nothing to learn
  // from this round; the slot contributes zero.
  if (observed.empty()) return;

  SparseVec input;
  Vector hidden_pre, hidden;
  if (config.kind == ModelKind::dae) {
    input = user_vector(train, user, false);
    if (config.reg.normalize_input && config.reg.normalize_before_dropout) normalize_unit(input);
    dropout_corrupt(input, config.reg.dropout_q, rng, config.reg.inverted_dropout);
    if (config.reg.normalize_input && !config.reg.normalize_before_dropout) normalize_unit(input);
  } else {
    input.idx.push_back(static_cast<std::uint32_t>(user));
    input.val.push_back(1.0);
  }
  encode_sparse(params, input, hidden_pre, hidden);

  SparseGrad grad;
  Vector out_pre;
  double loss_sum = 0.0;

  switch (config.loss.kind) {
    case LossKind::square_conf:
    case LossKind::ce_point:
    case LossKind::mil: {
      std::vector<std::uint32_t> targets;
      std::size_t n_pos;
      if (config.full_catalogue) {
        targets.resize(n_items);
        for (std::uint32_t i = 0; i < n_items; ++i) targets[i] = i;
        n_pos = 0;  // labels assigned via membership below
      } else {
        targets = sample_targets(observed, n_items, sampling, rng);
        n_pos = observed.size();
      }
      std::vector<std::int8_t> labels(targets.size(), 0);
      if (config.full_catalogue) {
        for (std::size_t k = 0; k < targets.size(); ++k)
          labels[k] = std::binary_search(observed.begin(), observed.end(), targets[k]) ? 1 : 0;
      } else {
        std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_pos), 1);
      }
      out_pre.resize(targets.size());
      Vector preds(targets.size());
      for (std::size_t k = 0; k < targets.size(); ++k) {
        out_pre[k] = decode_pre_at(params, hidden, targets[k]);
        preds[k] = activate(params.dec_act, out_pre[k]);
      }
      loss_sum = batch_point_loss(config.loss, targets, preds, labels, grad);
      break;
    }
    case LossKind::ce_pair: {
      if (observed.size() >= n_items) return;  // nothing unobserved to rank against
      std::vector<ItemPair> pairs = sample_pairs(observed, n_items, sampling, rng);
      // remap onto the distinct touched items
      std::vector<std::uint32_t> touched;
      touched.reserve(pairs.size() * 2);
      for (const ItemPair& pr : pairs) {
        touched.push_back(pr.pos);
        touched.push_back(pr.neg);
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      auto local_of = [&touched](std::uint32_t item) {
        return static_cast<std::uint32_t>(
            std::lower_bound(touched.begin(), touched.end(), item) - touched.begin());
      };
      out_pre.resize(touched.size());
      Vector preds(touched.size());
      for (std::size_t k = 0; k < touched.size(); ++k) {
        out_pre[k] = decode_pre_at(params, hidden, touched[k]);
        preds[k] = activate(params.dec_act, out_pre[k]);
      }
      std::vector<ItemPair> local_pairs(pairs.size());
      for (std::size_t k = 0; k < pairs.size(); ++k)
        local_pairs[k] = {local_of(pairs[k].pos), local_of(pairs[k].neg)};
      SparseGrad local_grad;
      loss_sum = batch_pair_loss(config.loss, local_pairs, preds, local_grad);
      grad.idx.resize(local_grad.idx.size());
      grad.val = std::move(local_grad.val);
      Vector out_pre_packed(local_grad.idx.size());
      for (std::size_t k = 0; k < local_grad.idx.size(); ++k) {
        grad.idx[k] = touched[local_grad.idx[k]];
        out_pre_packed[k] = out_pre[local_grad.idx[k]];
      }
      out_pre = std::move(out_pre_packed);
      break;
    }
    case LossKind::multinomial: {
      Vector p(n_items, 0.0);
      for (std::uint32_t i : observed) p[i] = 1.0;
      out_pre.resize(n_items);
      for (std::uint32_t i = 0; i < n_items; ++i) out_pre[i] = decode_pre_at(params, hidden, i);
      // linear decoder: pre-activations are the logits
      grad.idx.resize(n_items);
      grad.val.resize(n_items);
      for (std::uint32_t i = 0; i < n_items; ++i) grad.idx[i] = i;
      loss_sum = multinomial_loss(p, out_pre, grad.val);
      break;
    }
  }

  out.contrib = backward_contrib_at(params, input, hidden_pre, hidden, grad, out_pre);
  out.contrib.loss = loss_sum;
  out.active = true;
}

double decay_penalty(const TrainConfig& config, const ModelParams& params, std::size_t n_users,
                     std::size_t n_items, GradBuffers* grads) {
  if (config.reg.lambda == 0.0) return 0.0;
  Matrix* gW = grads ? &grads->W : nullptr;
  Matrix* gWp = grads ? &grads->Wp : nullptr;
  if (config.reg.decay_mode == DecayMode::plain)
    return weight_decay(params.W, params.Wp, config.reg.lambda, gW, gWp);
  return scaled_weight_decay(params.W, params.Wp, config.reg.lambda, config.latent_dim, n_users,
                             n_items, gW, gWp);
}

}  // namespace

std::pair<Checkpoint, TrainLog> train(const TrainConfig& config, const SplitDataset& data) {
  config.validate();
  if (data.train.pair_count() == 0) throw InputError("train: empty training split");
  const std::size_t n_users = data.train.n_users;
  const std::size_t n_items = data.train.n_items;

  SamplingSpec sampling{config.sampling_ratio, median_items_per_user(data.train)};
  Rng init_rng(Rng::mix(config.seed, kStreamInit));
  ModelParams params = init_params(config, n_users, n_items, init_rng);

  AdamConfig adam_cfg{config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps};
  AdamState st_W(params.W.size()), st_b(params.b.size()), st_Wp(params.Wp.size()),
      st_bp(params.bp.size());
  GradBuffers grads;
  grads.init_like(params);

  const std::size_t eval_every =
      config.eval_every > 0 ? config.eval_every : std::max<std::size_t>(1, config.iterations / 20);

  std::vector<SlotResult> slots(config.batch_size);
  std::vector<std::size_t> batch_users(config.batch_size);

  TrainLog log;
  double loss_accum = 0.0;
  std::size_t loss_count = 0;
  auto t0 = std::chrono::steady_clock::now();

  for (std::size_t it = 0; it < config.iterations; ++it) {
    const std::uint64_t it_seed = Rng::mix(Rng::mix(config.seed, kStreamIter), it);
    Rng batch_rng(it_seed);
    for (std::size_t s = 0; s < config.batch_size; ++s)
      batch_users[s] = static_cast<std::size_t>(batch_rng.next_below(n_users));

    const std::ptrdiff_t nslots = static_cast<std::ptrdiff_t>(config.batch_size);
    if (config.threads > 1) {
#pragma omp parallel for schedule(static) num_threads(static_cast<int>(config.threads))
      for (std::ptrdiff_t s = 0; s < nslots; ++s) {
        try {
          compute_slot(config, params, data.train, sampling, batch_users[s],
                       Rng(Rng::mix(it_seed, kStreamSlot + static_cast<std::uint64_t>(s))),
                       slots[s]);
        } catch (const std::exception& e) {
          slots[s].active = false;
          slots[s].error = e.what();
        }
      }
    } else {
      for (std::ptrdiff_t s = 0; s < nslots; ++s) {
        try {
          compute_slot(config, params, data.train, sampling, batch_users[s],
                       Rng(Rng::mix(it_seed, kStreamSlot + static_cast<std::uint64_t>(s))),
                       slots[s]);
        } catch (const std::exception& e) {
          slots[s].active = false;
          slots[s].error = e.what();
        }
      }
    }
    for (const SlotResult& r : slots)
      if (!r.error.empty())
        throw NumericError("train: iteration " + std::to_string(it) + ": " + r.error);

    grads.zero();
    const double scale = 1.0 / static_cast<double>(config.batch_size);
    double batch_loss = 0.0;
    for (std::size_t s = 0; s < config.batch_size; ++s) {
      if (!slots[s].active) continue;
      apply_contrib(slots[s].contrib, scale, grads);
      batch_loss += slots[s].contrib.loss;
    }
    batch_loss *= scale;
    batch_loss += decay_penalty(config, params, n_users, n_items, &grads);

    if (!std::isfinite(batch_loss)) {
      std::size_t offender = 0;
      for (std::size_t s = 0; s < config.batch_size; ++s)
        if (slots[s].active && !std::isfinite(slots[s].contrib.loss)) {
          offender = batch_users[s];
          break;
        }
      throw NumericError("train: non-finite loss at iteration " + std::to_string(it) + " (user " +
                         std::to_string(offender) + ")");
    }

    adam_step(params.W, grads.W, st_W, adam_cfg);
    adam_step(std::span<double>(params.b), std::span<const double>(grads.b), st_b, adam_cfg);
    adam_step(params.Wp, grads.Wp, st_Wp, adam_cfg);
    adam_step(std::span<double>(params.bp), std::span<const double>(grads.bp), st_bp, adam_cfg);
    apply_max_norm(params, config.reg.alpha_enc, config.reg.alpha_dec);

    loss_accum += batch_loss;
    ++loss_count;

    if ((it + 1) % eval_every == 0 || it + 1 == config.iterations) {
      double ndcg100 = 0.0;
      if (data.valid.pair_count() > 0)
        ndcg100 = validation_ndcg(params, data, 100, config.reg.normalize_input, config.threads);
      double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
      log.entries.push_back({it + 1, loss_accum / static_cast<double>(loss_count), ndcg100, ms});
      loss_accum = 0.0;
      loss_count = 0;
      if (it + 1 == config.iterations) break;
    }
  }

  Checkpoint ckpt;
  ckpt.params = std::move(params);
  ckpt.config = config;
  ckpt.vocab_hash = data.vocab.hash();
  ckpt.iteration = config.iterations;
  ckpt.n_users = n_users;
  return {std::move(ckpt), std::move(log)};
}

bool GradCheckReport::all_pass() const {
  for (const auto& e : entries)
    if (!e.pass) return false;
  return true;
}

double max_rel_err(std::span<const double> analytic, std::span<const double> reference) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    double denom = std::max({std::abs(analytic[i]), std::abs(reference[i]), 0.01});
    worst = std::max(worst, std::abs(analytic[i] - reference[i]) / denom);
  }
  return worst;
}

}  // namespace milrec
