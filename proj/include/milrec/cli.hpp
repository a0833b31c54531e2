#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "milrec/data.hpp"
#include "milrec/eval.hpp"
#include "milrec/train.hpp"

namespace milrec {

// Subcommand drivers shared by the command-line binary and the tests. Every
// driver is deterministic: identical inputs and seeds give byte-identical
// output files.

struct PrepOptions {
  std::string input;
  RatingsFormat format = RatingsFormat::tsv;
  double threshold = 4.0;
  std::size_t min_user_items = 5;
  std::size_t min_item_users = 0;
  double valid_frac = 0.1;
  double test_frac = 0.1;
  std::uint64_t seed = 1;
  std::string out_dir;
};

struct PrepSummary {
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t pairs_total = 0;
  std::size_t pairs_train = 0;
  std::size_t pairs_valid = 0;
  std::size_t pairs_test = 0;
};

// Ingest -> binarize -> filter -> split; writes users.txt, items.txt,
// split_manifest.tsv and stats.txt into out_dir.
PrepSummary run_prep(const PrepOptions& opt);

// Reads a run_prep output directory back into memory.
SplitDataset load_data_dir(const std::string& dir);

struct TrainOptions {
  std::string config_path;  // optional when preset is given
  std::string preset;
  std::string data_dir;
  std::string out_path;  // checkpoint; the log goes to out_path + ".log.tsv"
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
};

void run_train(const TrainOptions& opt);

struct EvalOptions {
  std::string checkpoint;
  std::string data_dir;
  std::vector<int> ks = {1, 20, 50, 100};
  std::string out_path;  // empty -> stdout
  std::size_t threads = 1;
};

void run_eval(const EvalOptions& opt, std::ostream& console);

struct AnalyzeOptions {
  std::string checkpoint;
  std::string data_dir;
  std::size_t k = 200;
  std::string out_path;  // empty -> stdout; when set, rank profile TSV goes
                         // to out_path + ".tsv"
  std::size_t threads = 1;
};

void run_analyze(const AnalyzeOptions& opt, std::ostream& console, std::ostream& notices);

struct GradcheckOptions {
  double tolerance = 1e-5;
  std::optional<LossKind> loss;
  std::optional<ModelKind> model;
};

// Prints one line per configuration; returns the number of failures.
std::size_t run_gradcheck(const GradcheckOptions& opt, std::ostream& console);

// Report serialization (fixed key names, machine-diffable).
std::string metrics_to_json(const MetricsReport& report);
std::string analysis_to_json(const std::optional<PreferenceHistogram>& hist,
                             const TailReport& tail);
std::string tail_profile_tsv(const TailReport& tail);

}  // namespace milrec
