#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "milrec/cli.hpp"
#include "milrec/error.hpp"

namespace {

int dispatch(const std::function<int()>& body) {
  try {
    return body();
  } catch (const milrec::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const milrec::NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const milrec::Error& e) {  // input / format / evaluation
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"milrec: implicit-feedback recommender training and evaluation"};
  app.require_subcommand(1);

  milrec::PrepOptions prep;
  std::string prep_format = "tsv";
  auto* prep_cmd = app.add_subcommand("prep", "ingest, binarize, filter and split ratings");
  prep_cmd->add_option("--input", prep.input, "ratings file")->required();
  prep_cmd->add_option("--format", prep_format, "tsv or csv")
      ->check(CLI::IsMember({"tsv", "csv"}));
  prep_cmd->add_option("--threshold", prep.threshold, "keep ratings >= threshold (default 4)");
  prep_cmd->add_option("--min-user-items", prep.min_user_items,
                       "drop users with fewer items (default 5)");
  prep_cmd->add_option("--min-item-users", prep.min_item_users,
                       "drop items with fewer users (default 0)");
  prep_cmd->add_option("--valid-frac", prep.valid_frac, "validation fraction (default 0.1)");
  prep_cmd->add_option("--test-frac", prep.test_frac, "test fraction (default 0.1)");
  prep_cmd->add_option("--seed", prep.seed, "split seed");
  prep_cmd->add_option("--out", prep.out_dir, "output directory")->required();

  milrec::TrainOptions tr;
  std::uint64_t tr_seed = 0;
  std::size_t tr_iters = 0;
  auto* train_cmd = app.add_subcommand("train", "train a model on a prepared dataset");
  train_cmd->add_option("--config", tr.config_path, "key = value config file");
  train_cmd->add_option("--preset", tr.preset, "named baseline configuration");
  train_cmd->add_option("--data", tr.data_dir, "prep output directory")->required();
  train_cmd->add_option("--out", tr.out_path, "checkpoint path")->required();
  auto* tr_seed_opt = train_cmd->add_option("--seed", tr_seed, "training seed override");
  auto* tr_iter_opt =
      train_cmd->add_option("--iterations", tr_iters, "iteration count override");

  milrec::EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "ranking metrics on the test split");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "checkpoint path")->required();
  eval_cmd->add_option("--data", ev.data_dir, "prep output directory")->required();
  eval_cmd->add_option("--ks", ev.ks, "cutoffs (default 1,20,50,100)")->delimiter(',');
  eval_cmd->add_option("--out", ev.out_path, "metrics JSON path (default stdout)");
  eval_cmd->add_option("--threads", ev.threads, "evaluation workers (default 1)");

  milrec::AnalyzeOptions an;
  auto* an_cmd =
      app.add_subcommand("analyze", "preference distribution and popularity-tail analysis");
  an_cmd->add_option("--checkpoint", an.checkpoint, "checkpoint path")->required();
  an_cmd->add_option("--data", an.data_dir, "prep output directory")->required();
  an_cmd->add_option("--k", an.k, "recommendation list length (default 200)");
  an_cmd->add_option("--out", an.out_path,
                     "analysis JSON path (default stdout); rank profile TSV goes to <out>.tsv");
  an_cmd->add_option("--threads", an.threads, "evaluation workers (default 1)");

  milrec::GradcheckOptions gc;
  std::string gc_loss, gc_model;
  auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference audit of analytic gradients");
  gc_cmd->add_option("--tolerance", gc.tolerance, "max relative error (default 1e-5)");
  gc_cmd->add_option("--loss", gc_loss,
                     "restrict to one loss (square, ce-point, ce-pair, multinomial, mil)");
  gc_cmd->add_option("--model", gc_model, "restrict to one model kind (dae, mf)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (prep_cmd->parsed()) {
    prep.format = prep_format == "csv" ? milrec::RatingsFormat::csv : milrec::RatingsFormat::tsv;
    return dispatch([&] {
      milrec::PrepSummary s = milrec::run_prep(prep);
      std::cout << "users = " << s.users << "\nitems = " << s.items
                << "\npairs_total = " << s.pairs_total << "\npairs_train = " << s.pairs_train
                << "\npairs_valid = " << s.pairs_valid << "\npairs_test = " << s.pairs_test
                << "\n";
      return 0;
    });
  }
  if (train_cmd->parsed()) {
    if (tr_seed_opt->count() > 0) tr.seed = tr_seed;
    if (tr_iter_opt->count() > 0) tr.iterations = tr_iters;
    return dispatch([&] {
      milrec::run_train(tr);
      return 0;
    });
  }
  if (eval_cmd->parsed()) {
    return dispatch([&] {
      milrec::run_eval(ev, std::cout);
      return 0;
    });
  }
  if (an_cmd->parsed()) {
    return dispatch([&] {
      milrec::run_analyze(an, std::cout, std::cerr);
      return 0;
    });
  }
  if (gc_cmd->parsed()) {
    if (!gc_loss.empty()) {
      gc.loss = milrec::loss_kind_from_string(gc_loss);
      if (!gc.loss) {
        std::cerr << "error: unknown loss '" << gc_loss << "'\n";
        return 1;
      }
    }
    if (!gc_model.empty()) {
      gc.model = milrec::model_kind_from_string(gc_model);
      if (!gc.model) {
        std::cerr << "error: unknown model '" << gc_model << "'\n";
        return 1;
      }
    }
    return dispatch([&] {
      std::size_t failures = milrec::run_gradcheck(gc, std::cout);
      return failures == 0 ? 0 : 3;
    });
  }
  return 1;
}
