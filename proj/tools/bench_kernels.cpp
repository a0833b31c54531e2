// Compares the serial and OpenMP paths of the two data-parallel kernels
// (batch gradient computation inside train, per-user ranking inside eval)
// and verifies they agree bit for bit.

#include <chrono>
#include <cstring>
#include <iostream>

#include <omp.h>

#include "milrec/eval.hpp"
#include "milrec/synthetic.hpp"
#include "milrec/train.hpp"

using namespace milrec;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool same_params(const ModelParams& a, const ModelParams& b) {
  return a.W.data == b.W.data && a.b == b.b && a.Wp.data == b.Wp.data && a.bp == b.bp;
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n_users = 2000, n_items = 1000, iterations = 200;
  if (argc > 1) n_users = static_cast<std::size_t>(std::stoul(argv[1]));
  if (argc > 2) n_items = static_cast<std::size_t>(std::stoul(argv[2]));
  if (argc > 3) iterations = static_cast<std::size_t>(std::stoul(argv[3]));
  const std::size_t hw = static_cast<std::size_t>(omp_get_max_threads());

  Dataset data = make_synthetic_lowrank(n_users, n_items, 4, 0.03, 99);
  Rng rng(7);
  SplitDataset parts = split(data, 0.1, 0.1, rng);

  TrainConfig config = preset_config("mil-lin-sig");
  config.latent_dim = 64;
  config.iterations = iterations;
  config.eval_every = iterations;  // skip mid-run validation
  config.seed = 123;

  std::cout << "dataset: " << n_users << " users x " << n_items << " items, "
            << parts.train.pair_count() << " train pairs; D=" << config.latent_dim << ", "
            << iterations << " iterations\n\n";

  std::cout << "batch-gradient kernel (train loop)\n";
  config.threads = 1;
  auto t0 = std::chrono::steady_clock::now();
  auto [ckpt_serial, log_serial] = train(config, parts);
  double serial_s = seconds_since(t0);
  std::cout << "  serial:            " << serial_s << " s\n";

  double parallel_s = 0.0;
  for (std::size_t threads : {2ul, 4ul, hw}) {
    if (threads <= 1 || (threads != hw && threads >= hw)) continue;
    config.threads = threads;
    t0 = std::chrono::steady_clock::now();
    auto [ckpt_par, log_par] = train(config, parts);
    parallel_s = seconds_since(t0);
    bool same = same_params(ckpt_serial.params, ckpt_par.params);
    std::cout << "  " << threads << " threads:         " << parallel_s << " s  (speedup "
              << serial_s / parallel_s << "x, bit-identical: " << (same ? "yes" : "NO") << ")\n";
    if (!same) return 1;
  }

  std::cout << "\nranking kernel (evaluation)\n";
  t0 = std::chrono::steady_clock::now();
  MetricsReport serial_report =
      evaluate_params(ckpt_serial.params, parts, kDefaultKs, EvalTarget::test, true, 1);
  double eval_serial_s = seconds_since(t0);
  std::cout << "  serial:            " << eval_serial_s << " s\n";

  t0 = std::chrono::steady_clock::now();
  MetricsReport par_report =
      evaluate_params(ckpt_serial.params, parts, kDefaultKs, EvalTarget::test, true, hw);
  double eval_par_s = seconds_since(t0);
  bool same = serial_report.recall == par_report.recall && serial_report.ndcg == par_report.ndcg &&
              serial_report.nov_ndcg == par_report.nov_ndcg;
  std::cout << "  " << hw << " threads:         " << eval_par_s << " s  (speedup "
            << eval_serial_s / eval_par_s << "x, bit-identical: " << (same ? "yes" : "NO")
            << ")\n";
  return same ? 0 : 1;
}
