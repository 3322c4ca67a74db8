#pragma once

// End-to-end commands behind the `strconf` CLI. Each command reads and
// writes only the paths named in its RunConfig.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "strconf/descriptors.hpp"
#include "strconf/error.hpp"
#include "strconf/feature_table.hpp"
#include "strconf/gbdt.hpp"
#include "strconf/kmeans.hpp"
#include "strconf/metrics.hpp"
#include "strconf/pca.hpp"
#include "strconf/trajectory_io.hpp"

namespace strconf {

struct RunConfig {
  std::string input;          // STRJ trajectories
  std::string features;       // feature CSV
  std::string model;          // model JSON
  std::string scores;         // id,score CSV
  std::string labels;         // eval labels: STRJ or feature CSV
  std::string output;         // command output (features/pca CSV, report)
  std::string projector;      // PCA projector JSON
  std::string train_features; // kmeans baseline reference set
  std::string export_csv;     // eval: append variant,dataset,... row
  std::string dataset = "dataset";
  std::string baseline;       // "" (trained model) or "kmeans"

  GranularityConfig granularity;
  TrainConfig train;
  Variant variant = Variant::struct_only;
  std::optional<std::size_t> pca_k;
  std::size_t ece_bins = 10;
  std::size_t kmeans_k = 8;
  std::size_t repetitions = 5;
  std::size_t threads = 1;
  std::size_t max_tokens = kMaxTokens;
};

// ---------------------------------------------------------------- validate

struct ValidationSummary {
  TrajectoryFileHeader header;
  std::size_t records = 0;
  std::size_t min_tokens = 0;
  std::size_t max_tokens = 0;
  std::size_t over_cap = 0;  // records longer than the cap (will be truncated)
  std::size_t labeled = 0;
};

inline ValidationSummary cmd_validate(const RunConfig& cfg) {
  std::ifstream in(cfg.input, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + cfg.input);
  ValidationSummary s;
  s.header = read_header(in);
  std::set<std::string> ids;
  std::vector<std::string> degenerate;
  for (std::uint64_t i = 0; i < s.header.record_count; ++i) {
    const auto r = read_record(in, s.header, i);
    if (!ids.insert(r.id).second) throw ValidationError("duplicate id '" + r.id + "'");
    const auto t = r.length();
    if (t < 2) degenerate.push_back(r.id);
    if (t > cfg.max_tokens) ++s.over_cap;
    if (r.label != Label::unknown) ++s.labeled;
    s.min_tokens = s.records == 0 ? t : std::min(s.min_tokens, t);
    s.max_tokens = std::max(s.max_tokens, t);
    ++s.records;
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ValidationError("STRJ: trailing bytes after record " + std::to_string(s.records));
  }
  if (!degenerate.empty()) {
    std::string list;
    for (const auto& id : degenerate) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError("degenerate trajectories with T < 2: " + list);
  }
  return s;
}

// ---------------------------------------------------------------- features

inline std::vector<std::string> structural_column_names() {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kDescriptorSize; ++i) out.push_back("f" + std::to_string(i));
  return out;
}

/// Descriptors for every record, in file order, using up to `threads` workers.
inline FeatureMatrix extract_descriptors(const std::vector<Trajectory>& records, const GranularityConfig& g,
                                         std::size_t threads, std::size_t max_tokens = kMaxTokens) {
  g.validate();
  FeatureMatrix out(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(kDescriptorSize));
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t error_index = records.size();
  std::exception_ptr error;

  auto work = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      try {
        const auto d = descriptor(normalize_length(records[i], max_tokens), g).flatten();
        for (std::size_t c = 0; c < kDescriptorSize; ++c) {
          out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = d[c];
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  const std::size_t n_workers = std::max<std::size_t>(1, std::min(threads, records.size()));
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
  return out;
}

inline FeatureTable cmd_features(const RunConfig& cfg) {
  std::ifstream in(cfg.input, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + cfg.input);
  const auto header = read_header(in);
  const bool with_semantic = needs_semantic(cfg.variant);
  if (with_semantic && !header.has_semantic()) {
    throw ValidationError("variant '" + std::string(to_string(cfg.variant)) +
                          "' requires semantic embeddings, but the STRJ flags bit1 (semantic) is clear");
  }
  std::vector<Trajectory> records;
  for (std::uint64_t i = 0; i < header.record_count; ++i) records.push_back(read_record(in, header, i));

  FeatureTable t;
  t.columns = structural_column_names();
  const FeatureMatrix desc = extract_descriptors(records, cfg.granularity, cfg.threads, cfg.max_tokens);
  Eigen::Index width = desc.cols();
  if (with_semantic) {
    for (std::size_t i = 0; i < header.semantic_dim; ++i) t.columns.push_back("s" + std::to_string(i));
    width += static_cast<Eigen::Index>(header.semantic_dim);
  }
  t.values.resize(desc.rows(), width);
  t.values.leftCols(desc.cols()) = desc;
  for (std::size_t r = 0; r < records.size(); ++r) {
    t.ids.push_back(records[r].id);
    t.labels.push_back(records[r].label == Label::unknown
                           ? std::nullopt
                           : std::optional<int>(static_cast<int>(records[r].label)));
    if (with_semantic) {
      const auto& s = *records[r].semantic;
      for (std::size_t c = 0; c < s.size(); ++c) {
        t.values(static_cast<Eigen::Index>(r), desc.cols() + static_cast<Eigen::Index>(c)) = s[c];
      }
    }
  }
  if (!cfg.output.empty()) write_feature_csv_file(t, cfg.output);
  return t;
}

// ---------------------------------------------------------------- train / predict

inline std::optional<std::vector<std::size_t>> subset_for(const FeatureTable& t, Variant v) {
  auto cols = variant_columns(t, v);
  if (cols.size() == t.columns.size()) return std::nullopt;
  return cols;
}

inline ConfidenceModel cmd_train(const RunConfig& cfg) {
  const auto table = read_feature_csv_file(cfg.features);
  const auto labels = table.require_labels("train");
  auto model = train(table.values, labels, cfg.train, subset_for(table, cfg.variant));
  if (!cfg.model.empty()) save_model(model, cfg.model);
  return model;
}

struct ScoredIds {
  std::vector<std::string> ids;
  std::vector<double> scores;
};

inline void write_scores_csv(const ScoredIds& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot create " + path);
  out << "id,score\n";
  std::string line;
  for (std::size_t i = 0; i < s.ids.size(); ++i) {
    line = s.ids[i];
    line += ',';
    detail::append_double(line, s.scores[i], 0);
    out << line << '\n';
  }
}

inline ScoredIds read_scores_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || detail::strip_cr(line) != "id,score") {
    throw ValidationError("scores csv: header must be id,score");
  }
  ScoredIds s;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::strip_cr(line);
    if (body.empty()) continue;
    const auto cells = detail::split_csv_line(body);
    if (cells.size() != 2) throw ValidationError("scores csv line " + std::to_string(line_no) + ": expected 2 fields");
    s.ids.emplace_back(cells[0]);
    s.scores.push_back(detail::parse_double(cells[1], line_no));
  }
  return s;
}

inline ScoredIds cmd_predict(const RunConfig& cfg) {
  const auto table = read_feature_csv_file(cfg.features);
  ScoredIds out;
  out.ids = table.ids;
  if (cfg.baseline == "kmeans") {
    const auto reference = read_feature_csv_file(cfg.train_features);
    const auto test_cols = variant_columns(table, cfg.variant);
    const auto train_cols = variant_columns(reference, cfg.variant);
    out.scores = kmeans_outlier_score(select_columns(reference, train_cols), select_columns(table, test_cols),
                                      cfg.kmeans_k, 100, cfg.train.seed);
  } else if (cfg.baseline.empty()) {
    const auto model = load_model(cfg.model);
    if (table.columns.size() != model.n_features) {
      throw ValidationError("predict: model expects " + std::to_string(model.n_features) +
                            " feature columns, file has " + std::to_string(table.columns.size()));
    }
    out.scores = predict_batch(model, table.values);
  } else {
    throw ValidationError("unknown baseline '" + cfg.baseline + "' (expected kmeans)");
  }
  if (!cfg.scores.empty()) write_scores_csv(out, cfg.scores);
  return out;
}

// ---------------------------------------------------------------- eval

inline std::vector<std::pair<std::string, int>> read_labels(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw ValidationError("cannot open " + path);
  char magic[4] = {};
  probe.read(magic, 4);
  const bool is_strj = probe.gcount() == 4 && std::string_view(magic, 4) == "STRJ";
  probe.close();

  std::vector<std::pair<std::string, int>> out;
  if (is_strj) {
    std::ifstream in(path, std::ios::binary);
    const auto header = read_header(in);
    if (!header.has_labels()) throw ValidationError("eval: unlabeled evaluation file (STRJ flags bit0 clear)");
    for (std::uint64_t i = 0; i < header.record_count; ++i) {
      const auto r = read_record(in, header, i);
      if (r.label == Label::unknown) throw ValidationError("eval: record '" + r.id + "' has unknown label");
      out.emplace_back(r.id, static_cast<int>(r.label));
    }
  } else {
    const auto table = read_feature_csv_file(path);
    const bool any = std::any_of(table.labels.begin(), table.labels.end(), [](auto& l) { return l.has_value(); });
    if (!any) throw ValidationError("eval: unlabeled evaluation file");
    const auto labels = table.require_labels("eval");
    for (std::size_t i = 0; i < table.rows(); ++i) out.emplace_back(table.ids[i], labels[i]);
  }
  return out;
}

inline std::string format_report(const metrics::EvalReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "auroc=" << r.auroc << "\naupr=" << r.aupr;
  if (r.calibration) {
    os << "\nbrier=" << r.brier << "\nece=" << r.ece;
  } else {
    os << "\nbrier=n/a\nece=n/a\n# scores outside [0, 1]: calibration metrics need probabilities";
  }
  os << "\nn_pos=" << r.n_pos << "\nn_neg=" << r.n_neg << "\nece_bins=" << r.ece_bins << "\n";
  return os.str();
}

inline void append_export_row(const std::string& path, std::string_view variant, std::string_view dataset,
                              const metrics::EvalReport& r) {
  bool fresh = true;
  {
    std::ifstream existing(path, std::ios::binary);
    fresh = !existing || existing.peek() == std::char_traits<char>::eof();
  }
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw ValidationError("cannot open " + path);
  if (fresh) out << "variant,dataset,auroc,aupr,brier,ece\n";
  std::string line{variant};
  line += ',';
  line += dataset;
  for (double v : {r.auroc, r.aupr, r.brier, r.ece}) {
    line += ',';
    if (!std::isnan(v)) detail::append_double(line, v, 9);
  }
  out << line << '\n';
}

inline metrics::EvalReport cmd_eval(const RunConfig& cfg) {
  const auto scored = read_scores_csv(cfg.scores);
  std::map<std::string, double> by_id;
  for (std::size_t i = 0; i < scored.ids.size(); ++i) {
    if (!by_id.emplace(scored.ids[i], scored.scores[i]).second) {
      throw ValidationError("eval: duplicate id '" + scored.ids[i] + "' in scores");
    }
  }
  const auto labeled = read_labels(cfg.labels);
  std::vector<double> scores;
  std::vector<int> labels;
  std::string missing;
  for (const auto& [id, y] : labeled) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      missing += (missing.empty() ? "" : ", ") + id;
      continue;
    }
    scores.push_back(it->second);
    labels.push_back(y);
  }
  if (!missing.empty()) throw ValidationError("eval: ids missing from scores: " + missing);

  auto report = metrics::evaluate(scores, labels, cfg.ece_bins);
  if (!cfg.output.empty()) {
    std::ofstream out(cfg.output, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot create " + cfg.output);
    out << format_report(report);
  }
  if (!cfg.export_csv.empty()) {
    append_export_row(cfg.export_csv, cfg.baseline.empty() ? to_string(cfg.variant) : cfg.baseline,
                      cfg.dataset, report);
  }
  return report;
}

// ---------------------------------------------------------------- pca

inline FeatureTable projected_table(const FeatureTable& src, const FeatureMatrix& z) {
  FeatureTable t;
  t.ids = src.ids;
  t.labels = src.labels;
  for (Eigen::Index i = 0; i < z.cols(); ++i) t.columns.push_back("p" + std::to_string(i));
  t.values = z;
  return t;
}

/// Fits a projector on `features` (or loads `projector` when no k is given)
/// and writes the projected CSV to `output`.
inline FeatureTable cmd_pca(const RunConfig& cfg) {
  const auto table = read_feature_csv_file(cfg.features);
  const auto cols = variant_columns(table, cfg.variant);
  const FeatureMatrix x = select_columns(table, cols);
  PcaProjector projector;
  if (cfg.pca_k) {
    projector = fit_pca(x, *cfg.pca_k);
    if (!cfg.projector.empty()) save_projector(projector, cfg.projector);
  } else if (!cfg.projector.empty()) {
    projector = load_projector(cfg.projector);
  } else {
    throw ValidationError("pca: give --pca-k to fit or --projector to apply");
  }
  auto out = projected_table(table, projector.project(x));
  if (!cfg.output.empty()) write_feature_csv_file(out, cfg.output, 0);
  return out;
}

// ---------------------------------------------------------------- bench

/// Analytic floating-point operation estimates (formulas, not counters).
struct StageFlops {
  double dft = 0.0;        // 5 * pad * log2(pad) per hidden dimension
  double laplacian = 0.0;  // 2 T^2 D similarity + 9 T^3 eigensolve bound
  double local = 0.0;      // 4 T D
  double shape = 0.0;      // T^2 D pairwise distances
  double trees = 0.0;      // n_trees * max_depth comparisons

  double descriptor_total() const { return dft + laplacian + local + shape; }
};

inline StageFlops estimate_flops(std::size_t rows, std::size_t dim, const GranularityConfig& g,
                                 std::size_t n_trees = 0, std::size_t max_depth = 0,
                                 std::size_t pad = kDftPad) {
  StageFlops f;
  const double d = static_cast<double>(dim);
  const double p = static_cast<double>(pad);
  auto add_window = [&](std::size_t len) {
    const double t = static_cast<double>(len);
    f.dft += 5.0 * p * std::log2(p) * d;
    f.laplacian += 2.0 * t * t * d + 9.0 * t * t * t;
    f.local += 4.0 * t * d;
    f.shape += t * t * d;
  };
  const bool global = g.mode != Granularity::local;
  const bool local = g.mode != Granularity::global;
  if (global) add_window(rows);
  if (local) {
    const auto len = window_length(rows, g);
    for (std::size_t i = 0, n = window_starts(rows, g).size(); i < n; ++i) add_window(len);
  }
  f.trees = static_cast<double>(n_trees) * static_cast<double>(max_depth);
  return f;
}

struct BenchReport {
  std::size_t instances = 0;
  std::size_t repetitions = 0;
  std::size_t min_tokens = 0;
  std::size_t max_tokens = 0;
  std::size_t hidden_dim = 0;
  bool has_model = false;
  // mean wall-clock per repetition, milliseconds
  double io_ms = 0.0;
  double descriptor_ms = 0.0;
  double inference_ms = 0.0;
  double total_ms = 0.0;
  // per-instance descriptor + inference latency over all repetitions
  double instance_mean_ms = 0.0;
  double instance_p95_ms = 0.0;
  double descriptor_instance_mean_ms = 0.0;
  StageFlops flops_per_instance;  // mean over instances
};

inline BenchReport cmd_bench(const RunConfig& cfg) {
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
  if (cfg.repetitions < 3) throw ValidationError("bench: repetitions must be >= 3");

  std::optional<ConfidenceModel> model;
  if (!cfg.model.empty()) {
    model = load_model(cfg.model);
    if (model->n_features != kDescriptorSize) {
      throw ValidationError("bench: model expects " + std::to_string(model->n_features) +
                            " features; only structural (70-column) models can be benchmarked");
    }
  }

  BenchReport r;
  r.repetitions = cfg.repetitions;
  r.has_model = model.has_value();
  std::vector<double> instance_ms;
  double descriptor_only_ms = 0.0;

  // One warm-up pass, then timed repetitions on a single contiguous timeline.
  for (std::size_t rep = 0; rep <= cfg.repetitions; ++rep) {
    const bool timed = rep > 0;
    const auto t0 = clock::now();
    std::vector<Trajectory> records;
    {
      auto raw = read_trajectories_file(cfg.input);
      if (raw.empty()) throw ValidationError("bench: input has no records");
      for (auto& t : raw) records.push_back(normalize_length(std::move(t), cfg.max_tokens));
    }
    const auto t1 = clock::now();
    std::vector<std::array<double, kDescriptorSize>> desc;
    std::vector<double> per_instance;
    for (const auto& t : records) {
      const auto a = clock::now();
      desc.push_back(descriptor(t, cfg.granularity).flatten());
      per_instance.push_back(ms(clock::now() - a));
    }
    const auto t2 = clock::now();
    if (model) {
      for (std::size_t i = 0; i < desc.size(); ++i) {
        const auto a = clock::now();
        volatile double p = predict(*model, desc[i]);
        (void)p;
        per_instance[i] += ms(clock::now() - a);
      }
    }
    const auto t3 = model ? clock::now() : t2;
    if (!timed) continue;

    r.io_ms += ms(t1 - t0);
    r.descriptor_ms += ms(t2 - t1);
    r.inference_ms += ms(t3 - t2);
    r.total_ms += ms(t3 - t0);
    instance_ms.insert(instance_ms.end(), per_instance.begin(), per_instance.end());
    descriptor_only_ms += ms(t2 - t1);

    if (rep == 1) {
      r.instances = records.size();
      r.hidden_dim = records.front().hidden_dim();
      r.min_tokens = r.max_tokens = records.front().length();
      for (const auto& t : records) {
        r.min_tokens = std::min(r.min_tokens, t.length());
        r.max_tokens = std::max(r.max_tokens, t.length());
        const auto f = estimate_flops(t.length(), t.hidden_dim(), cfg.granularity,
                                      model ? model->trees.size() : 0, model ? model->max_depth() : 0);
        r.flops_per_instance.dft += f.dft;
        r.flops_per_instance.laplacian += f.laplacian;
        r.flops_per_instance.local += f.local;
        r.flops_per_instance.shape += f.shape;
        r.flops_per_instance.trees += f.trees;
      }
      const double n = static_cast<double>(records.size());
      r.flops_per_instance.dft /= n;
      r.flops_per_instance.laplacian /= n;
      r.flops_per_instance.local /= n;
      r.flops_per_instance.shape /= n;
      r.flops_per_instance.trees /= n;
    }
  }
  const double reps = static_cast<double>(cfg.repetitions);
  r.io_ms /= reps;
  r.descriptor_ms /= reps;
  r.inference_ms /= reps;
  r.total_ms /= reps;
  r.descriptor_instance_mean_ms = descriptor_only_ms / (reps * static_cast<double>(r.instances));

  double sum = 0.0;
  for (double v : instance_ms) sum += v;
  r.instance_mean_ms = sum / static_cast<double>(instance_ms.size());
  std::sort(instance_ms.begin(), instance_ms.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(instance_ms.size())));
  r.instance_p95_ms = instance_ms[std::max<std::size_t>(rank, 1) - 1];
  return r;
}

inline std::string format_bench(const BenchReport& r, const GranularityConfig& g) {
  std::ostringstream os;
  os << "instances=" << r.instances << "\nrepetitions=" << r.repetitions << "\nmode=" << to_string(g.mode)
     << "\ntokens_min=" << r.min_tokens << "\ntokens_max=" << r.max_tokens << "\nhidden_dim=" << r.hidden_dim
     << "\nstage.io_ms=" << r.io_ms << "\nstage.descriptors_ms=" << r.descriptor_ms
     << "\nstage.inference_ms=" << r.inference_ms << (r.has_model ? "" : " (no model)")
     << "\ntotal_ms=" << r.total_ms << "\ninstance.mean_ms=" << r.instance_mean_ms
     << "\ninstance.p95_ms=" << r.instance_p95_ms
     << "\nflops_estimate.dft=" << r.flops_per_instance.dft
     << "\nflops_estimate.laplacian=" << r.flops_per_instance.laplacian
     << "\nflops_estimate.local=" << r.flops_per_instance.local
     << "\nflops_estimate.shape=" << r.flops_per_instance.shape
     << "\nflops_estimate.trees=" << r.flops_per_instance.trees
     << "\n# FLOP figures are analytic per-instance estimates, not hardware counters.\n"
     << "# Published reference ratios (documentation only, not measured here):\n"
     << "#   relative FLOPs / latency vs structural confidence = 1.0: RACE-style 4.0 / 3.0, SelfCheckGPT (NLI) 6.0 / 5.0\n"
     << "#   vs a 5-sample SelfCheckGPT-style baseline = 1.0: structural confidence FLOPs 0.03, runtime 0.04, memory 0.07\n";
  return os.str();
}

}  // namespace strconf
