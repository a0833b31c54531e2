#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "milrec/cli.hpp"
#include "milrec/error.hpp"

using namespace milrec;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("milrec_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) const {
    std::string p = (path / name).string();
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p;
  }
  std::string sub(const std::string& name) const { return (path / name).string(); }
};

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// 30 hand-written ratings: 6 users x 5 ratings. Per user one rating of 3
// (dropped at threshold 4), so 24 positive pairs over items a..f.
const char* kFixture =
    "u1\ta\t5\t1\nu1\tb\t4\t2\nu1\tc\t3\t3\nu1\td\t4\t4\nu1\te\t5\t5\n"
    "u2\ta\t4\t1\nu2\tb\t3\t2\nu2\tc\t4\t3\nu2\td\t5\t4\nu2\tf\t4\t5\n"
    "u3\ta\t5\t1\nu3\tc\t3\t2\nu3\td\t4\t3\nu3\te\t4\t4\nu3\tf\t5\t5\n"
    "u4\tb\t4\t1\nu4\tc\t4\t2\nu4\td\t3\t3\nu4\te\t4\t4\nu4\tf\t4\t5\n"
    "u5\ta\t4\t1\nu5\tb\t5\t2\nu5\tc\t4\t3\nu5\te\t3\t4\nu5\tf\t4\t5\n"
    "u6\ta\t3\t1\nu6\tb\t4\t2\nu6\tc\t5\t3\nu6\td\t4\t4\nu6\tf\t4\t5\n";

PrepOptions fixture_prep(const TempDir& tmp, const std::string& out_name,
                         double valid_frac = 0.0, double test_frac = 0.0) {
  PrepOptions opt;
  opt.input = tmp.file("ratings.tsv", kFixture);
  opt.threshold = 4.0;
  opt.min_user_items = 1;
  opt.min_item_users = 0;
  opt.valid_frac = valid_frac;
  opt.test_frac = test_frac;
  opt.seed = 42;
  opt.out_dir = tmp.sub(out_name);
  return opt;
}

}  // namespace

TEST_CASE("run_prep: hand-counted fixture statistics") {
  TempDir tmp;
  PrepSummary s = run_prep(fixture_prep(tmp, "data"));
  // 30 ratings, one 3-star per user dropped: 24 pairs, 6 users, 6 items
  CHECK(s.users == 6);
  CHECK(s.items == 6);
  CHECK(s.pairs_total == 24);
  CHECK(s.pairs_train == 24);  // fractions zero: everything in train
  CHECK(s.pairs_valid == 0);
  CHECK(s.pairs_test == 0);

  // the rating-3 pair (u1, c) is not in the manifest
  SplitDataset data = load_data_dir(tmp.sub("data"));
  CHECK(data.vocab.users[0] == "u1");
  auto c_pos = std::find(data.vocab.items.begin(), data.vocab.items.end(), "c");
  REQUIRE(c_pos != data.vocab.items.end());
  std::uint32_t c_idx = static_cast<std::uint32_t>(c_pos - data.vocab.items.begin());
  CHECK(!std::binary_search(data.train.items[0].begin(), data.train.items[0].end(), c_idx));

  std::string stats = read_bytes(tmp.sub("data") + "/stats.txt");
  CHECK(stats.find("users = 6") != std::string::npos);
  CHECK(stats.find("pairs_train = 24") != std::string::npos);
}

TEST_CASE("run_prep: byte-identical outputs under the same seed") {
  TempDir tmp;
  run_prep(fixture_prep(tmp, "d1", 0.2, 0.2));
  run_prep(fixture_prep(tmp, "d2", 0.2, 0.2));
  CHECK(read_bytes(tmp.sub("d1") + "/split_manifest.tsv") ==
        read_bytes(tmp.sub("d2") + "/split_manifest.tsv"));
  CHECK(read_bytes(tmp.sub("d1") + "/users.txt") == read_bytes(tmp.sub("d2") + "/users.txt"));
  CHECK(read_bytes(tmp.sub("d1") + "/stats.txt") == read_bytes(tmp.sub("d2") + "/stats.txt"));

  PrepSummary split_summary = run_prep(fixture_prep(tmp, "d3", 0.2, 0.2));
  CHECK(split_summary.pairs_train + split_summary.pairs_valid + split_summary.pairs_test == 24);
}

TEST_CASE("run_prep: bad fractions are invalid arguments") {
  TempDir tmp;
  PrepOptions opt = fixture_prep(tmp, "d");
  opt.valid_frac = 0.7;
  opt.test_frac = 0.5;
  CHECK_THROWS_AS(run_prep(opt), InvalidArgument);
}

TEST_CASE("run_train: preset smoke run writes checkpoint and log") {
  TempDir tmp;
  run_prep(fixture_prep(tmp, "data", 0.15, 0.15));
  TrainOptions opt;
  opt.preset = "mil-lin-sig";
  opt.data_dir = tmp.sub("data");
  opt.out_path = tmp.sub("ck.bin");
  opt.iterations = 50;
  opt.seed = 3;
  run_train(opt);
  CHECK(fs::exists(tmp.sub("ck.bin")));
  CHECK(fs::exists(tmp.sub("ck.bin") + ".meta"));
  CHECK(fs::exists(tmp.sub("ck.bin") + ".log.tsv"));

  Checkpoint ckpt = load_checkpoint(tmp.sub("ck.bin"));
  CHECK(ckpt.iteration == 50);
  CHECK(ckpt.config.preset == "mil-lin-sig");
  CHECK(ckpt.config.seed == 3);
}

TEST_CASE("run_train: config file with unknown key names the key") {
  TempDir tmp;
  run_prep(fixture_prep(tmp, "data"));
  TrainOptions opt;
  opt.config_path = tmp.file("bad.conf", "preset = mil-lin-sig\nitterations = 5\n");
  opt.data_dir = tmp.sub("data");
  opt.out_path = tmp.sub("ck.bin");
  try {
    run_train(opt);
    FAIL("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("itterations") != std::string::npos);
  }

  TrainOptions none;
  none.data_dir = tmp.sub("data");
  none.out_path = tmp.sub("ck.bin");
  CHECK_THROWS_AS(run_train(none), InvalidArgument);
}

TEST_CASE("run_train: preset flag layered under config file keys") {
  TempDir tmp;
  run_prep(fixture_prep(tmp, "data"));
  TrainOptions opt;
  opt.preset = "ce-point-lin-sig";
  opt.config_path = tmp.file("over.conf", "latent_dim = 4\niterations = 7\n");
  opt.data_dir = tmp.sub("data");
  opt.out_path = tmp.sub("ck.bin");
  run_train(opt);
  Checkpoint ckpt = load_checkpoint(tmp.sub("ck.bin"));
  CHECK(ckpt.config.loss.kind == LossKind::ce_point);
  CHECK(ckpt.config.latent_dim == 4);
  CHECK(ckpt.iteration == 7);
}

TEST_CASE("run_eval: oracle fixture, requested ks only, byte-stable output") {
  TempDir tmp;
  // one user with a test item, scores driven by the decoder bias
  std::string data_dir = tmp.sub("data");
  fs::create_directories(data_dir);
  write_vocab({"u1", "u2"}, data_dir + "/users.txt");
  write_vocab({"a", "b", "c", "d"}, data_dir + "/items.txt");
  {
    std::ofstream m(data_dir + "/split_manifest.tsv", std::ios::binary);
    m << "0\t0\ttrain\n1\t1\ttrain\n1\t2\ttrain\n0\t1\ttest\n";
  }

  SplitDataset data = load_data_dir(data_dir);
  Checkpoint ckpt;
  ckpt.params.kind = ModelKind::dae;
  ckpt.params.enc_act = Activation::linear;
  ckpt.params.dec_act = Activation::sigmoid;
  ckpt.params.W = Matrix(1, 4);
  ckpt.params.b = {0.0};
  ckpt.params.Wp = Matrix(4, 1);
  ckpt.params.bp = {0.0, 3.0, 1.0, -1.0};  // item b on top once a is excluded
  ckpt.n_users = 2;
  ckpt.vocab_hash = data.vocab.hash();
  save_checkpoint(ckpt, tmp.sub("oracle.bin"));

  EvalOptions opt;
  opt.checkpoint = tmp.sub("oracle.bin");
  opt.data_dir = data_dir;
  opt.ks = {1, 20, 100};
  opt.out_path = tmp.sub("metrics.json");
  std::ostringstream unused;
  run_eval(opt, unused);

  nlohmann::json j = nlohmann::json::parse(read_bytes(tmp.sub("metrics.json")));
  CHECK(j["recall@1"] == 1.0);
  CHECK(j["users_evaluated"] == 1);
  CHECK(j.contains("ndcg@20"));
  CHECK(j.contains("nov_ndcg@100"));
  CHECK(!j.contains("recall@50"));

  run_eval(opt, unused);
  std::string bytes1 = read_bytes(tmp.sub("metrics.json"));
  run_eval(opt, unused);
  CHECK(read_bytes(tmp.sub("metrics.json")) == bytes1);

  // stdout path produces the same document
  std::ostringstream console;
  EvalOptions to_console = opt;
  to_console.out_path.clear();
  run_eval(to_console, console);
  CHECK(console.str() == bytes1);
}

TEST_CASE("run_analyze: json document and rank-profile tsv") {
  TempDir tmp;
  run_prep(fixture_prep(tmp, "data", 0.15, 0.15));
  TrainOptions topt;
  topt.preset = "mil-lin-sig";
  topt.data_dir = tmp.sub("data");
  topt.out_path = tmp.sub("ck.bin");
  topt.iterations = 30;
  run_train(topt);

  AnalyzeOptions opt;
  opt.checkpoint = tmp.sub("ck.bin");
  opt.data_dir = tmp.sub("data");
  opt.k = 3;
  opt.out_path = tmp.sub("analysis.json");
  std::ostringstream console, notices;
  run_analyze(opt, console, notices);
  CHECK(notices.str().empty());  // sigmoid decoder: histogram present

  nlohmann::json j = nlohmann::json::parse(read_bytes(tmp.sub("analysis.json")));
  REQUIRE(j.contains("pref_hist"));
  REQUIRE(j.contains("tail_shares"));
  REQUIRE(j.contains("tail_rank_profile"));
  double total = double(j["tail_shares"]["short"]) + double(j["tail_shares"]["medium"]) +
                 double(j["tail_shares"]["long"]);
  CHECK(total == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(j["tail_rank_profile"]["short"].size() == 3);

  std::string tsv = read_bytes(tmp.sub("analysis.json") + ".tsv");
  int rows = 0;
  for (char c : tsv) rows += c == '\n';
  CHECK(rows == 4);  // header + k

  // a linear-decoder model drops the histogram section with a notice
  TrainOptions multi;
  multi.preset = "multi-tanh-lin";
  multi.data_dir = tmp.sub("data");
  multi.out_path = tmp.sub("ck2.bin");
  multi.iterations = 10;
  run_train(multi);
  AnalyzeOptions opt2 = opt;
  opt2.checkpoint = tmp.sub("ck2.bin");
  opt2.out_path = tmp.sub("analysis2.json");
  std::ostringstream console2, notices2;
  run_analyze(opt2, console2, notices2);
  CHECK(notices2.str().find("histogram skipped") != std::string::npos);
  nlohmann::json j2 = nlohmann::json::parse(read_bytes(tmp.sub("analysis2.json")));
  CHECK(!j2.contains("pref_hist"));
  CHECK(j2.contains("tail_shares"));
}

TEST_CASE("run_gradcheck: report stream and failure count") {
  std::ostringstream out;
  CHECK(run_gradcheck({1e-5, {}, {}}, out) == 0);
  CHECK(out.str().find("PASS") != std::string::npos);
  CHECK(out.str().find("FAIL") == std::string::npos);

  std::ostringstream out2;
  GradcheckOptions tight{1e-12, {}, {}};
  CHECK(run_gradcheck(tight, out2) > 0);
  CHECK(out2.str().find("FAIL") != std::string::npos);

  std::ostringstream out3;
  GradcheckOptions only{1e-5, LossKind::mil, ModelKind::dae};
  CHECK(run_gradcheck(only, out3) == 0);
  CHECK(out3.str().find("mil/dae") != std::string::npos);
  CHECK(out3.str().find("ce-point") == std::string::npos);
}

#ifdef MILREC_CLI_PATH
TEST_CASE("binary: exit codes") {
  auto run = [](const std::string& args) {
    std::string cmd = std::string(MILREC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };
  CHECK(run("gradcheck") == 0);
  CHECK(run("gradcheck --tolerance 1e-12") == 3);   // numeric failure
  CHECK(run("nonsense-subcommand") == 1);           // usage
  CHECK(run("eval --checkpoint /nonexistent.bin --data /nonexistent") == 2);
  CHECK(run("train --data /nonexistent --out /tmp/x.bin") == 1);  // no preset/config
  CHECK(run("prep --input /nonexistent.tsv --out /tmp/prep_out") == 2);
}
#endif
