// strconf: structural confidence pipeline CLI.
//
// Exit codes: 0 success, 1 validation error, 2 computation error.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "strconf/strconf.hpp"

namespace {

struct Options {
  strconf::RunConfig run;
  std::string mode = "two_scale";
  std::string variant = "struct_only";
  std::size_t pca_k = 0;
};

void add_config(CLI::App* sub) {
  sub->add_option("--config", "flat key=value file; command-line flags take precedence");
}

bool given_on_command_line(const CLI::Option* opt, const std::vector<std::string>& args) {
  for (const auto& a : args) {
    for (const auto& n : opt->get_lnames())
      if (a == "--" + n || a.starts_with("--" + n + "=")) return true;
    for (const auto& n : opt->get_snames())
      if (a.starts_with("-" + n)) return true;
  }
  return false;
}

// CLI11 only reads config files attached to the root app, so subcommand
// config entries are spliced into the argument list as long options.
std::vector<std::string> expand_config(const CLI::App& app, std::vector<std::string> args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands({}))
      if (s->get_name() == args[i]) sub = s;
    if (!sub) continue;
    std::string path;
    for (std::size_t j = i + 1; j < args.size(); ++j) {
      if (args[j] == "--config" && j + 1 < args.size()) path = args[j + 1];
      if (args[j].starts_with("--config=")) path = args[j].substr(9);
    }
    if (path.empty()) break;
    const std::vector<std::string> user(args.begin() + static_cast<std::ptrdiff_t>(i) + 1, args.end());
    std::vector<std::string> extra;
    for (const auto& item : CLI::ConfigINI().from_file(path)) {
      if (item.name == "++" || item.name == "--") continue;  // section markers
      if (!item.parents.empty() && item.parents != std::vector<std::string>{"default"} &&
          item.parents != std::vector<std::string>{sub->get_name()}) {
        continue;
      }
      const auto* opt = sub->get_option_no_throw("--" + item.name);
      if (opt && given_on_command_line(opt, user)) continue;
      extra.push_back("--" + item.name);
      extra.insert(extra.end(), item.inputs.begin(), item.inputs.end());
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(i) + 1, extra.begin(), extra.end());
    break;
  }
  return args;
}

void add_granularity(CLI::App* sub, Options& o) {
  sub->add_option("--mode", o.mode, "granularity: global, local or two_scale")
      ->check(CLI::IsMember({"global", "local", "two_scale"}))
      ->capture_default_str();
  sub->add_option("--window", o.run.granularity.window, "local window length")->capture_default_str();
  sub->add_option("--stride", o.run.granularity.stride, "local window stride")->capture_default_str();
  sub->add_option("--max-tokens", o.run.max_tokens, "truncate trajectories to this many tokens")
      ->capture_default_str();
}

void add_variant(CLI::App* sub, Options& o) {
  sub->add_option("--variant", o.variant,
                  "struct_only, semantic_only, struct_plus_sent, fft_only, lap_only, local_only, shape_only")
      ->capture_default_str();
}

void print_validation(const strconf::ValidationSummary& s) {
  std::cout << "records=" << s.records << "\nhidden_dim=" << s.header.hidden_dim
            << "\nsemantic_dim=" << s.header.semantic_dim << "\nlabels=" << (s.header.has_labels() ? "yes" : "no")
            << "\nlabeled=" << s.labeled << "\ntokens_min=" << s.min_tokens << "\ntokens_max=" << s.max_tokens
            << "\nover_cap=" << s.over_cap << "\nstatus=ok\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structural confidence: trajectory descriptors, GBDT confidence, evaluation"};
  app.require_subcommand(1);
  Options o;
  auto& run = o.run;

  auto* validate = app.add_subcommand("validate", "check an STRJ trajectory file");
  validate->add_option("--input,-i", run.input, "STRJ file")->required();
  validate->add_option("--max-tokens", run.max_tokens, "length cap used for the over_cap count")
      ->capture_default_str();
  add_config(validate);

  auto* features = app.add_subcommand("features", "extract 70-d structural descriptors to CSV");
  features->add_option("--input,-i", run.input, "STRJ file")->required();
  features->add_option("--output,-o", run.output, "feature CSV to write")->required();
  features->add_option("--threads", run.threads, "worker threads")->capture_default_str();
  add_granularity(features, o);
  add_variant(features, o);
  add_config(features);

  auto* train = app.add_subcommand("train", "train the gradient-boosted confidence model");
  train->add_option("--features,-f", run.features, "labeled feature CSV")->required();
  train->add_option("--model,-m", run.model, "model file to write")->required();
  train->add_option("--trees", run.train.n_trees, "boosting rounds")->capture_default_str();
  train->add_option("--learning-rate", run.train.learning_rate)->capture_default_str();
  train->add_option("--max-leaves", run.train.max_leaves)->capture_default_str();
  train->add_option("--min-samples-leaf", run.train.min_samples_leaf)->capture_default_str();
  train->add_option("--l2-leaf", run.train.l2_leaf)->capture_default_str();
  train->add_option("--seed", run.train.seed)->capture_default_str();
  add_variant(train, o);
  add_config(train);

  auto* predict = app.add_subcommand("predict", "score a feature CSV");
  predict->add_option("--features,-f", run.features, "feature CSV")->required();
  predict->add_option("--model,-m", run.model, "trained model file");
  predict->add_option("--scores,-o", run.scores, "scores CSV to write (id,score)")->required();
  predict->add_option("--baseline", run.baseline, "use an untrained baseline instead of a model: kmeans")
      ->check(CLI::IsMember({"kmeans"}));
  predict->add_option("--train-features", run.train_features, "reference CSV for the kmeans baseline");
  predict->add_option("--kmeans-k", run.kmeans_k)->capture_default_str();
  predict->add_option("--seed", run.train.seed)->capture_default_str();
  add_variant(predict, o);
  add_config(predict);

  auto* eval = app.add_subcommand("eval", "AUROC, AUPR, Brier and ECE of scores against labels");
  eval->add_option("--scores,-s", run.scores, "scores CSV (id,score)")->required();
  eval->add_option("--labels,-l", run.labels, "labels: STRJ file or feature CSV")->required();
  eval->add_option("--bins", run.ece_bins, "ECE bins")->capture_default_str();
  eval->add_option("--output,-o", run.output, "also write the report here");
  eval->add_option("--export-csv", run.export_csv, "append variant,dataset,auroc,aupr,brier,ece");
  eval->add_option("--dataset", run.dataset, "dataset name for --export-csv")->capture_default_str();
  eval->add_option("--baseline", run.baseline, "variant name override for --export-csv");
  add_variant(eval, o);
  add_config(eval);

  auto* bench = app.add_subcommand("bench", "time I/O, descriptor and inference stages");
  bench->add_option("--input,-i", run.input, "STRJ file")->required();
  bench->add_option("--model,-m", run.model, "model to time inference with");
  bench->add_option("--repetitions,-r", run.repetitions, "timed repetitions (>= 3)")->capture_default_str();
  bench->add_option("--output,-o", run.output, "also write the report here");
  add_granularity(bench, o);
  add_config(bench);

  auto* pca = app.add_subcommand("pca", "fit or apply a PCA projection of the structural columns");
  pca->add_option("--features,-f", run.features, "feature CSV")->required();
  pca->add_option("--output,-o", run.output, "projected CSV to write")->required();
  pca->add_option("--pca-k", o.pca_k, "components to fit (omit to apply --projector)");
  pca->add_option("--projector", run.projector, "projector JSON (written when fitting, read otherwise)");
  add_variant(pca, o);
  add_config(pca);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(app, std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    run.granularity.mode = strconf::parse_granularity(o.mode);
    run.variant = strconf::parse_variant(o.variant);
    if (o.pca_k > 0) run.pca_k = o.pca_k;

    if (validate->parsed()) {
      print_validation(strconf::cmd_validate(run));
    } else if (features->parsed()) {
      const auto t = strconf::cmd_features(run);
      std::cerr << "wrote " << t.rows() << " rows x " << t.columns.size() << " features to " << run.output << "\n";
    } else if (train->parsed()) {
      const auto m = strconf::cmd_train(run);
      std::cerr << "trained " << m.trees.size() << " trees on " << m.n_features << " columns -> " << run.model << "\n";
    } else if (predict->parsed()) {
      if (run.baseline.empty() && run.model.empty()) throw strconf::ValidationError("predict: --model is required");
      if (run.baseline == "kmeans" && run.train_features.empty()) {
        throw strconf::ValidationError("predict: --baseline kmeans needs --train-features");
      }
      const auto s = strconf::cmd_predict(run);
      std::cerr << "scored " << s.ids.size() << " instances -> " << run.scores << "\n";
    } else if (eval->parsed()) {
      std::cout << strconf::format_report(strconf::cmd_eval(run));
    } else if (bench->parsed()) {
      const auto text = strconf::format_bench(strconf::cmd_bench(run), run.granularity);
      std::cout << text;
      if (!run.output.empty()) {
        std::ofstream out(run.output, std::ios::binary | std::ios::trunc);
        if (!out) throw strconf::ValidationError("cannot create " + run.output);
        out << text;
      }
    } else if (pca->parsed()) {
      const auto t = strconf::cmd_pca(run);
      std::cerr << "wrote " << t.rows() << " rows x " << t.columns.size() << " components to " << run.output << "\n";
    }
  } catch (const strconf::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
