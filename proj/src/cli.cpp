#include "gppl/cli.hpp"

#include "gppl/active.hpp"
#include "gppl/errors.hpp"
#include "gppl/inference.hpp"
#include "gppl/io.hpp"
#include "gppl/mlii.hpp"
#include "gppl/predict.hpp"
#include "gppl/svi.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <ostream>
#include <random>

namespace gppl {
namespace {

struct TrainArgs {
  std::string items, pairs, out_model, out_history;
  Index inducing = 500;
  Index batch_pairs = 200;
  double forgetting = 0.9;
  double a0 = 2.0, b0 = 200.0;
  int max_steps = 200;
  bool full_vb = false;
  bool optimize = false;
  int max_mlii_iters = 25;
  std::uint64_t seed = 0;
};

struct RankArgs {
  std::string model, items, out;
};

struct ClassifyArgs {
  std::string model, items, pairs, out;
};

struct ActiveArgs {
  std::string items, pairs, out_curve, strategy = "uncertainty";
  Index budget = 400, batch = 2, init_labels = 2;
  double holdout = 0.2;
  double a0 = 2.0, b0 = 200.0;
  std::uint64_t seed = 0;
};

struct ToyArgs {
  std::string scenario, out_pairs, out_items, features;
  Index dim = 10;
  std::uint64_t seed = 0;
};

void write_or_print(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_atomic(path, text);
  }
}

void run_train(const TrainArgs& a, std::ostream& err) {
  const ItemSet items = load_items(a.items);
  const auto pairs = load_pairs(a.pairs, items);
  if (items.size() < 2) throw DataError("training needs at least 2 items");
  if (pairs.empty()) throw DataError("no preference pairs in '" + a.pairs + "'");

  KernelConfig kernel;
  kernel.lengthscales = median_heuristic(items.features);
  if (a.optimize) {
    MliiOptions opts;
    opts.max_iter = a.max_mlii_iters;
    opts.vb.a0 = a.a0;
    opts.vb.b0 = a.b0;
    const MliiResult res = optimize_lengthscales(items.features, pairs, kernel, opts);
    err << "length-scale optimization: " << res.status << " (objective " << format_real(res.initial_objective)
        << " -> " << format_real(res.best_objective) << ")\n";
    kernel = res.kernel;
    if (!a.out_history.empty()) write_text_atomic(a.out_history, format_history(res));
  }

  ModelState model;
  if (a.full_vb) {
    FullVbOptions opts;
    opts.a0 = a.a0;
    opts.b0 = a.b0;
    const FullVbResult fit = fit_full_vb(items.features, pairs, kernel, opts);
    if (!fit.converged) err << "warning: full VB stopped at the iteration cap\n";
    model = model_from_full_vb(items.features, fit, kernel, a.a0, a.b0);
  } else {
    SviConfig svi;
    svi.inducing = a.inducing;
    svi.batch_pairs = a.batch_pairs;
    svi.forgetting = a.forgetting;
    svi.max_steps = a.max_steps;
    svi.seed = a.seed;
    model = fit_svi(items.features, pairs, kernel, a.a0, a.b0, svi);
  }
  model.vocab_hash = vocabulary_hash(items.ids);
  save_model(model, a.out_model);
}

void run_rank(const RankArgs& a, std::ostream& out) {
  const ModelState model = load_model(a.model);
  const ItemSet items = load_items(a.items);
  if (items.dim() != model.dim) throw DataError("items have a different feature dimension than the model");
  write_or_print(a.out, format_ranking(rank(model, items)), out);
}

void run_classify(const ClassifyArgs& a, std::ostream& out) {
  const ModelState model = load_model(a.model);
  const ItemSet items = load_items(a.items);
  if (items.dim() != model.dim) throw DataError("items have a different feature dimension than the model");
  const auto pairs = load_pairs(a.pairs, items, false);
  const Predictor predictor(model);
  const std::vector<double> probs = predictor.classify(items.features, pairs);
  write_or_print(a.out, format_classifications(pairs, probs, items), out);
}

void run_active(const ActiveArgs& a, std::ostream& out) {
  const ItemSet items = load_items(a.items);
  auto pairs = load_pairs(a.pairs, items);
  if (pairs.size() < 2) throw DataError("active-sim needs at least 2 oracle pairs");
  std::mt19937_64 rng(a.seed);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const auto held = static_cast<std::size_t>(std::clamp(a.holdout, 0.0, 1.0) * static_cast<double>(pairs.size()));
  const std::size_t n_eval = std::clamp<std::size_t>(held, 1, pairs.size() - 1);

  ActiveConfig cfg;
  cfg.eval_pairs.assign(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(n_eval));
  const std::vector<PreferencePair> pool(pairs.begin() + static_cast<std::ptrdiff_t>(n_eval), pairs.end());
  cfg.strategy = a.strategy == "random" ? Strategy::Random : Strategy::Uncertainty;
  cfg.budget = a.budget;
  cfg.batch = a.batch;
  cfg.init_labels = a.init_labels;
  cfg.seed = a.seed;
  cfg.a0 = a.a0;
  cfg.b0 = a.b0;
  KernelConfig kernel;
  kernel.lengthscales = median_heuristic(items.features);
  write_or_print(a.out_curve, format_curve(simulate(items.features, pool, kernel, cfg)), out);
}

void run_toy(const ToyArgs& a, std::ostream& out) {
  const auto pairs = toy_scenario(a.scenario);
  ItemSet items;
  items.ids = toy_item_ids();
  std::mt19937_64 rng(a.seed);
  if (!a.features.empty()) {
    const ItemSet source = load_items(a.features);
    if (source.size() < 5) throw DataError("--features needs at least 5 items");
    std::vector<Index> idx(static_cast<std::size_t>(source.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<Index>(k);
    std::vector<Index> picked;
    std::sample(idx.begin(), idx.end(), std::back_inserter(picked), 5, rng);
    std::shuffle(picked.begin(), picked.end(), rng);
    items.features.resize(5, source.dim());
    for (Index r = 0; r < 5; ++r) items.features.row(r) = source.features.row(picked[static_cast<std::size_t>(r)]);
  } else {
    std::normal_distribution<double> normal;
    items.features.resize(5, a.dim);
    for (Index r = 0; r < 5; ++r) {
      for (Index c = 0; c < a.dim; ++c) items.features(r, c) = normal(rng);
    }
  }
  write_or_print(a.out_pairs, format_pairs(pairs, items), out);
  if (!a.out_items.empty()) write_text_atomic(a.out_items, format_items(items));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian process preference learning from pairwise labels"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* cmd_train = app.add_subcommand("train", "Fit a model to items and pairwise labels");
  cmd_train->add_option("--items", train.items, "Items file (id,features...)")->required();
  cmd_train->add_option("--pairs", train.pairs, "Pairs file (id_i,id_j,label)")->required();
  cmd_train->add_option("--out-model", train.out_model, "Where to write the model")->required();
  cmd_train->add_option("--m-inducing", train.inducing, "Number of inducing points")->capture_default_str();
  cmd_train->add_option("--batch-pairs", train.batch_pairs, "Pairs per SVI minibatch")->capture_default_str();
  cmd_train->add_option("--forgetting", train.forgetting, "Forgetting rate u")->capture_default_str();
  cmd_train->add_option("--max-steps", train.max_steps, "SVI steps")->capture_default_str();
  cmd_train->add_option("--a0", train.a0, "Gamma prior shape")->capture_default_str();
  cmd_train->add_option("--b0", train.b0, "Gamma prior rate")->capture_default_str();
  cmd_train->add_flag("--full-vb", train.full_vb, "Exact variational inference without inducing points");
  cmd_train->add_flag("--optimize-lengthscales", train.optimize, "MLII length-scale optimization");
  cmd_train->add_option("--max-mlii-iters", train.max_mlii_iters, "MLII iteration cap")->capture_default_str();
  cmd_train->add_option("--out-history", train.out_history, "MLII history table");
  cmd_train->add_option("--seed", train.seed, "Random seed")->capture_default_str();

  RankArgs rank_args;
  auto* cmd_rank = app.add_subcommand("rank", "Rank items by expected score");
  cmd_rank->add_option("--model", rank_args.model)->required();
  cmd_rank->add_option("--items", rank_args.items)->required();
  cmd_rank->add_option("--out", rank_args.out, "Output table (stdout when omitted)");

  ClassifyArgs cls;
  auto* cmd_cls = app.add_subcommand("classify", "Predict pairwise preference probabilities");
  cmd_cls->add_option("--model", cls.model)->required();
  cmd_cls->add_option("--items", cls.items)->required();
  cmd_cls->add_option("--pairs", cls.pairs, "Pairs to classify (label column optional)")->required();
  cmd_cls->add_option("--out", cls.out, "Output table (stdout when omitted)");

  ActiveArgs act;
  auto* cmd_act = app.add_subcommand("active-sim", "Simulate active learning against oracle labels");
  cmd_act->add_option("--items", act.items)->required();
  cmd_act->add_option("--pairs", act.pairs, "Oracle pairs")->required();
  cmd_act->add_option("--strategy", act.strategy)->check(CLI::IsMember({"uncertainty", "random"}))->capture_default_str();
  cmd_act->add_option("--budget", act.budget)->capture_default_str();
  cmd_act->add_option("--batch", act.batch)->capture_default_str();
  cmd_act->add_option("--init-labels", act.init_labels)->capture_default_str();
  cmd_act->add_option("--holdout", act.holdout, "Fraction of oracle pairs held out for scoring")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd_act->add_option("--a0", act.a0)->capture_default_str();
  cmd_act->add_option("--b0", act.b0)->capture_default_str();
  cmd_act->add_option("--seed", act.seed)->capture_default_str();
  cmd_act->add_option("--out-curve", act.out_curve, "Learning curve table (stdout when omitted)");

  ToyArgs toy;
  auto* cmd_toy = app.add_subcommand("toy", "Emit one of the five-item toy preference graphs");
  cmd_toy->add_option("--scenario", toy.scenario)->required()->check(CLI::IsMember(toy_scenario_names()));
  cmd_toy->add_option("--out-pairs", toy.out_pairs, "Pairs file (stdout when omitted)");
  cmd_toy->add_option("--out-items", toy.out_items, "Items file for arg0..arg4");
  cmd_toy->add_option("--features", toy.features, "Draw the five feature rows from this items file");
  cmd_toy->add_option("--dim", toy.dim, "Random feature dimension without --features")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd_toy->add_option("--seed", toy.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (cmd_train->parsed()) run_train(train, err);
    else if (cmd_rank->parsed()) run_rank(rank_args, out);
    else if (cmd_cls->parsed()) run_classify(cls, out);
    else if (cmd_act->parsed()) run_active(act, out);
    else if (cmd_toy->parsed()) run_toy(toy, out);
  } catch (const SingularModelError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace gppl
