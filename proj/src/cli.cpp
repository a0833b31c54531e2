#include "milrec/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "milrec/error.hpp"

namespace milrec {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kStreamSplit = 0x05;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  out << text;
  if (!out) throw InputError("write failure: " + path);
}

}  // namespace

PrepSummary run_prep(const PrepOptions& opt) {
  if (!(opt.valid_frac >= 0.0 && opt.test_frac >= 0.0 &&
        opt.valid_frac + opt.test_frac < 1.0))
    throw InvalidArgument("prep: split fractions must be non-negative and sum below 1");

  RawRatings raw = ingest_ratings(opt.input, opt.format);
  Dataset data = binarize(raw, opt.threshold);
  if (data.inter.pair_count() == 0)
    throw InputError("prep: no pairs at or above the rating threshold");
  data = filter_activity(data, opt.min_user_items, opt.min_item_users);
  Rng rng(Rng::mix(opt.seed, kStreamSplit));
  SplitDataset parts = split(data, opt.valid_frac, opt.test_frac, rng);

  fs::create_directories(opt.out_dir);
  write_vocab(parts.vocab.users, (fs::path(opt.out_dir) / "users.txt").string());
  write_vocab(parts.vocab.items, (fs::path(opt.out_dir) / "items.txt").string());
  write_split_manifest(parts, (fs::path(opt.out_dir) / "split_manifest.tsv").string());

  PrepSummary s;
  s.users = parts.vocab.users.size();
  s.items = parts.vocab.items.size();
  s.pairs_train = parts.train.pair_count();
  s.pairs_valid = parts.valid.pair_count();
  s.pairs_test = parts.test.pair_count();
  s.pairs_total = s.pairs_train + s.pairs_valid + s.pairs_test;

  std::ostringstream stats;
  stats << "users = " << s.users << '\n'
        << "items = " << s.items << '\n'
        << "pairs_total = " << s.pairs_total << '\n'
        << "pairs_train = " << s.pairs_train << '\n'
        << "pairs_valid = " << s.pairs_valid << '\n'
        << "pairs_test = " << s.pairs_test << '\n';
  write_text((fs::path(opt.out_dir) / "stats.txt").string(), stats.str());
  return s;
}

SplitDataset load_data_dir(const std::string& dir) {
  Vocab vocab;
  vocab.users = read_vocab((fs::path(dir) / "users.txt").string());
  vocab.items = read_vocab((fs::path(dir) / "items.txt").string());
  if (vocab.users.empty() || vocab.items.empty())
    throw InputError("data dir " + dir + ": empty vocabulary");
  return read_split_manifest((fs::path(dir) / "split_manifest.tsv").string(), std::move(vocab));
}

void run_train(const TrainOptions& opt) {
  TrainConfig config;
  if (!opt.preset.empty()) config = preset_config(opt.preset);
  if (!opt.config_path.empty()) {
    if (opt.preset.empty()) {
      config = parse_config_file(opt.config_path);
    } else {
      // preset flag first, file keys layered on top
      std::ifstream in(opt.config_path, std::ios::binary);
      if (!in) throw InputError("cannot open config file: " + opt.config_path);
      std::ostringstream buf;
      buf << "preset = " << opt.preset << '\n';
      buf << in.rdbuf();
      config = parse_config_text(buf.str());
    }
  }
  if (opt.preset.empty() && opt.config_path.empty())
    throw InvalidArgument("train: need --preset or --config");
  if (opt.seed) config.seed = *opt.seed;
  if (opt.iterations) config.iterations = *opt.iterations;

  SplitDataset data = load_data_dir(opt.data_dir);
  auto [ckpt, log] = train(config, data);
  save_checkpoint(ckpt, opt.out_path);
  write_train_log(log, opt.out_path + ".log.tsv");
}

namespace {

nlohmann::json metrics_json(const MetricsReport& report) {
  nlohmann::json j;
  for (int k : report.ks) {
    j["recall@" + std::to_string(k)] = report.recall.at(k);
    j["ndcg@" + std::to_string(k)] = report.ndcg.at(k);
    j["nov_ndcg@" + std::to_string(k)] = report.nov_ndcg.at(k);
  }
  j["users_evaluated"] = report.users_evaluated;
  return j;
}

}  // namespace

std::string metrics_to_json(const MetricsReport& report) {
  return metrics_json(report).dump(2) + "\n";
}

std::string analysis_to_json(const std::optional<PreferenceHistogram>& hist,
                             const TailReport& tail) {
  nlohmann::json j;
  if (hist) {
    nlohmann::json buckets = nlohmann::json::array();
    for (std::size_t b = 0; b + 1 < hist->edges.size(); ++b) {
      buckets.push_back({{"hi", hist->edges[b]},
                         {"lo", hist->edges[b + 1]},
                         {"percent", hist->percent[b]}});
    }
    j["pref_hist"] = buckets;
  }
  j["k"] = tail.k;
  j["tail_shares"] = {{"short", tail.shares[0]},
                      {"medium", tail.shares[1]},
                      {"long", tail.shares[2]}};
  nlohmann::json profile;
  for (int iv = 0; iv < 3; ++iv) {
    nlohmann::json col = nlohmann::json::array();
    for (const auto& row : tail.cumulative) col.push_back(row[iv]);
    profile[iv == 0 ? "short" : iv == 1 ? "medium" : "long"] = std::move(col);
  }
  j["tail_rank_profile"] = std::move(profile);
  return j.dump(2) + "\n";
}

std::string tail_profile_tsv(const TailReport& tail) {
  std::ostringstream out;
  out << "rank\tshort\tmedium\tlong\n";
  for (std::size_t s = 0; s < tail.cumulative.size(); ++s)
    out << (s + 1) << '\t' << tail.cumulative[s][0] << '\t' << tail.cumulative[s][1] << '\t'
        << tail.cumulative[s][2] << '\n';
  return out.str();
}

void run_eval(const EvalOptions& opt, std::ostream& console) {
  Checkpoint ckpt = load_checkpoint(opt.checkpoint);
  SplitDataset data = load_data_dir(opt.data_dir);
  MetricsReport report = evaluate(ckpt, data, opt.ks, opt.threads);
  std::string json = metrics_to_json(report);
  if (opt.out_path.empty())
    console << json;
  else
    write_text(opt.out_path, json);
}

void run_analyze(const AnalyzeOptions& opt, std::ostream& console, std::ostream& notices) {
  Checkpoint ckpt = load_checkpoint(opt.checkpoint);
  SplitDataset data = load_data_dir(opt.data_dir);

  std::optional<PreferenceHistogram> hist;
  if (ckpt.params.dec_act == Activation::sigmoid) {
    hist = preference_histogram(ckpt, data, kDefaultPrefEdges, opt.threads);
  } else {
    notices << "note: preference histogram skipped (decoder is "
            << to_string(ckpt.params.dec_act) << ", not sigmoid)\n";
  }
  TailIntervals intervals = tail_intervals(popularity(data.train));
  TailReport tail = tail_distribution(ckpt, data, intervals, opt.k, opt.threads);

  std::string json = analysis_to_json(hist, tail);
  if (opt.out_path.empty()) {
    console << json;
  } else {
    write_text(opt.out_path, json);
    write_text(opt.out_path + ".tsv", tail_profile_tsv(tail));
  }
}

std::size_t run_gradcheck(const GradcheckOptions& opt, std::ostream& console) {
  GradCheckReport report = grad_check(opt.tolerance, opt.loss, opt.model);
  std::size_t failures = 0;
  for (const auto& e : report.entries) {
    console << (e.pass ? "PASS" : "FAIL") << "  " << e.name << "  max_rel_err="
            << std::scientific << std::setprecision(3) << e.max_rel_err << std::defaultfloat
            << "\n";
    if (!e.pass) ++failures;
  }
  console << report.entries.size() << " configurations, " << failures << " failed (tolerance "
          << report.tolerance << ")\n";
  return failures;
}

}  // namespace milrec
