// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "strconf/strconf.hpp"
#include "strconf/synthetic.hpp"
#include "test_util.hpp"

using namespace strconf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

StateMatrixD random_states(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double offset = 0.0) {
  StateMatrixD h = testutil::random_states(rng, rows, cols);
  h.array() += offset;
  return h;
}

// ---------------------------------------------------------------------------

void dimensionality(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> len(2, 256);
  const Granularity modes[] = {Granularity::global, Granularity::local, Granularity::two_scale};
  std::size_t bad = 0;
  for (std::size_t i = 0; i < 1000; ++i) {
    const std::size_t dim = i % 2 == 0 ? 8 : 768;
    GranularityConfig g;
    g.mode = modes[i % 3];
    const auto d = descriptor(random_states(rng, len(rng), dim), g);
    const auto flat = d.flatten();
    if (d.spectral.size() != 48 || d.local.size() != 6 || d.shape.size() != 16 || flat.size() != 70) ++bad;
    for (double v : flat)
      if (!std::isfinite(v)) ++bad;
  }
  const double secs = seconds_since(t0);
  o.detail << "1000 descriptors (D in {8,768}, T in 2..256), slices 48/6/16, bad=" << bad << ", " << secs << " s";
  o.require(bad == 0, "shape");
  o.require(secs < 60.0, "runtime < 60 s");
}

void oracle_equivalence(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  double fft_worst = 0.0, lap_worst = 0.0, local_worst = 0.0;
  std::size_t shape_mismatch = 0;
  for (int c = 0; c < 100; ++c) {
    const std::size_t rows = 2 + rng() % 255;
    const std::size_t dim = 1 + rng() % 12;
    const auto h = random_states(rng, rows, dim);
    fft_worst = std::max(fft_worst, testutil::max_rel_diff(fft_features(h), oracle::dft_features(testutil::to_rows(h), 256, 16)));
  }
  for (int c = 0; c < 100; ++c) {
    const std::size_t rows = 2 + rng() % 11;
    const auto h = random_states(rng, rows, 1 + rng() % 10);
    const auto got = laplacian_spectrum(h);
    const auto want = oracle::laplacian_spectrum(testutil::to_rows(h), 16);
    for (std::size_t i = 0; i < 16; ++i) lap_worst = std::max(lap_worst, std::abs(got[i] - want[i]));
  }
  for (int c = 0; c < 100; ++c) {
    const std::size_t rows = 2 + rng() % 19;
    const auto h = random_states(rng, rows, 1 + rng() % 6);
    if (shape_coherence(h) != oracle::shape_histogram(testutil::to_rows(h), 16)) ++shape_mismatch;
  }
  for (int c = 0; c < 100; ++c) {
    const auto h = random_states(rng, 2 + rng() % 100, 1 + rng() % 20);
    const auto got = local_variation(h);
    const auto want = oracle::local_variation(testutil::to_rows(h));
    for (std::size_t i = 0; i < 6; ++i)
      local_worst = std::max(local_worst, std::abs(got[i] - want[i]) / std::max(1.0, std::abs(want[i])));
  }
  const double secs = seconds_since(t0);
  o.detail << "fft rel " << fft_worst << ", laplacian abs " << lap_worst << ", shape mismatches " << shape_mismatch
           << ", local " << local_worst << ", " << secs << " s";
  o.require(fft_worst <= 1e-4, "fft within 1e-4 relative");
  o.require(lap_worst <= 1e-6, "laplacian within 1e-6");
  o.require(shape_mismatch == 0, "shape exact");
  o.require(local_worst <= 1e-6, "local within 1e-6");
  o.require(secs < 120.0, "runtime < 120 s");
}

void spectral_invariants(Outcome& o) {
  std::mt19937_64 rng(303);
  double min_connected = 0.0, max_ev = 0.0, fft_exact_dev = 0.0, fft_rel_dev = 0.0, lap_dev = 0.0;
  for (int c = 0; c < 200; ++c) {
    const std::size_t rows = 2 + rng() % 80;
    const std::size_t dim = 2 + rng() % 30;
    // positive offset makes all cosines positive, so the graph is complete
    const auto connected = random_states(rng, rows, dim, 4.0);
    min_connected = std::max(min_connected, laplacian_spectrum(connected)[0]);
    const auto h = random_states(rng, rows, dim);
    const auto ev = laplacian_spectrum(h);
    max_ev = std::max(max_ev, *std::max_element(ev.begin(), ev.end()));

    const auto base = fft_features(h);
    const auto doubled = fft_features(StateMatrixD(2.0 * h));
    for (std::size_t i = 0; i < base.size(); ++i) fft_exact_dev = std::max(fft_exact_dev, std::abs(doubled[i] - 4.0 * base[i]));
    const double alpha = 0.37 + static_cast<double>(c) * 0.05;
    const auto scaled = fft_features(StateMatrixD(alpha * h));
    for (std::size_t i = 0; i < base.size(); ++i)
      fft_rel_dev = std::max(fft_rel_dev, std::abs(scaled[i] - alpha * alpha * base[i]) / std::max(1e-300, alpha * alpha * base[i]));
    const auto lap_scaled = laplacian_spectrum(StateMatrixD(alpha * h));
    for (std::size_t i = 0; i < ev.size(); ++i) lap_dev = std::max(lap_dev, std::abs(lap_scaled[i] - ev[i]));
  }
  o.detail << "max smallest eig (connected) " << min_connected << ", max eig " << max_ev << ", fft |2H| - 4x "
           << fft_exact_dev << ", fft alpha^2 rel " << fft_rel_dev << ", laplacian scale dev " << lap_dev;
  o.require(min_connected < 1e-6, "smallest eigenvalue < 1e-6");
  o.require(max_ev <= 2.0 + 1e-6, "eigenvalues <= 2 + 1e-6");
  o.require(fft_exact_dev == 0.0, "fft exact alpha^2 for alpha = 2");
  o.require(fft_rel_dev <= 1e-12, "fft alpha^2 scaling");
  o.require(lap_dev <= 1e-9, "laplacian scale invariance");
}

void granularity_contract(Outcome& o) {
  std::mt19937_64 rng(404);
  GranularityConfig two;
  two.mode = Granularity::two_scale;
  std::size_t inexact = 0;
  for (std::size_t rows = 2; rows <= two.window; ++rows) {
    for (int c = 0; c < 10; ++c) {
      const auto h = random_states(rng, rows, 1 + rng() % 16);
      if (descriptor(h, two).flatten() != global_descriptor(h).flatten()) ++inexact;
    }
  }
  GranularityConfig local;
  local.mode = Granularity::local;
  double worst = 0.0;
  for (int c = 0; c < 20; ++c) {
    const auto h = random_states(rng, 9, 1 + rng() % 16);
    const auto got = descriptor(h, local).flatten();
    const auto a = global_descriptor(h.middleRows(0, 5)).flatten();
    const auto b = global_descriptor(h.middleRows(2, 5)).flatten();
    const auto d = global_descriptor(h.middleRows(4, 5)).flatten();
    for (std::size_t i = 0; i < kDescriptorSize; ++i) worst = std::max(worst, std::abs(got[i] - (a[i] + b[i] + d[i]) / 3.0));
  }
  o.detail << "two_scale != global for T<=5: " << inexact << " cases; T=9 local vs window mean " << worst;
  o.require(inexact == 0, "two_scale equals global exactly");
  o.require(worst <= 1e-12, "local mean within 1e-12");
}

void estimator(Outcome& o) {
  const auto t0 = Clock::now();
  const auto train = testutil::separable_set(1001, 1000);
  const auto test = testutil::separable_set(2002, 1000);
  TrainConfig cfg;  // 200 trees, learning rate 0.05
  const auto run = train_with_trace(train.x, train.y, cfg);
  const double separable = metrics::auroc(predict_batch(run.model, test.x), test.y);
  const auto noise_model = strconf::train(train.x, testutil::shuffled(train.y, 3003), cfg);
  const double shuffled = metrics::auroc(predict_batch(noise_model, test.x), test.y);
  std::size_t increases = 0;
  for (std::size_t r = 1; r < run.loss_per_round.size(); ++r)
    if (run.loss_per_round[r] > run.loss_per_round[r - 1]) ++increases;
  const bool deterministic = serialize_model(run.model) == serialize_model(strconf::train(train.x, train.y, cfg));
  const double secs = seconds_since(t0);
  o.detail << "separable AUROC " << separable << ", shuffled AUROC " << shuffled << ", loss increases " << increases
           << ", byte-identical " << (deterministic ? "yes" : "no") << ", " << secs << " s";
  o.require(separable >= 0.99, "separable AUROC >= 0.99");
  o.require(shuffled >= 0.40 && shuffled <= 0.60, "shuffled AUROC in [0.40, 0.60]");
  o.require(increases == 0, "loss non-increasing");
  o.require(deterministic, "model bytes deterministic");
  o.require(secs < 180.0, "runtime < 180 s");
}

void metrics_cases(Outcome& o) {
  const double a = metrics::auroc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, std::vector<int>{0, 0, 1, 1});
  const double ap = metrics::aupr(std::vector<double>{0.8, 0.4, 0.35, 0.1}, std::vector<int>{1, 0, 1, 0});
  const double b = metrics::brier(std::vector<double>{0.8, 0.3}, std::vector<int>{1, 0});
  const double e = metrics::ece(std::vector<double>{0.15, 0.15, 0.15, 0.15, 0.85, 0.85, 0.85, 0.85},
                                std::vector<int>{0, 0, 0, 0, 1, 1, 0, 0});
  std::mt19937_64 rng(606);
  double worst = 0.0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t n = 2 + rng() % 200;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 20) / 20.0;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 0;
    y[1] = 1;
    worst = std::max(worst, std::abs(metrics::auroc(s, y) - oracle::pair_count_auroc(s, y)));
  }
  o.detail << "AUROC " << a << ", AP " << ap << ", Brier " << b << ", ECE " << e << ", rank vs pairs " << worst;
  o.require(std::abs(a - 0.75) <= 1e-12, "AUROC 0.75");
  o.require(std::abs(ap - 5.0 / 6.0) <= 1e-12, "AP 0.8333");
  o.require(std::abs(b - 0.065) <= 1e-12, "Brier 0.065");
  o.require(std::abs(e - 0.25) <= 1e-12, "ECE 0.25");
  o.require(worst <= 1e-12, "rank AUROC equals pair counting");
}

void pca(Outcome& o) {
  std::mt19937_64 rng(707);
  const auto x = testutil::random_states(rng, 80, 20);
  const auto full = fit_pca(x, 20);
  const double recon = (full.reconstruct(full.project(x)) - x).cwiseAbs().maxCoeff();
  double ev_dev = 0.0;
  for (int c = 0; c < 5; ++c) {
    const auto rows = oracle::random_matrix(rng, 50, 10);
    const auto want = oracle::covariance_eigenvalues(rows);
    const auto p = fit_pca(testutil::to_eigen(rows), 10);
    for (std::size_t i = 0; i < 10; ++i)
      ev_dev = std::max(ev_dev, std::abs(p.explained_variance(static_cast<Eigen::Index>(i)) - want[i]));
  }

  // project -> train -> eval through the pipeline commands
  const fs::path dir = fs::temp_directory_path() / "strconf_acceptance_pca";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto p = [&](const std::string& name) { return (dir / name).string(); };
  synthetic::Options opt;
  opt.hidden_dim = 16;
  opt.count = 300;
  opt.seed = 71;
  write_trajectories_file(synthetic::generate(opt), p("train.strj"), file_flags::labels);
  opt.count = 200;
  opt.seed = 72;
  write_trajectories_file(synthetic::generate(opt), p("test.strj"), file_flags::labels);
  RunConfig base;
  base.input = p("train.strj");
  base.output = p("train.csv");
  cmd_features(base);
  base.input = p("test.strj");
  base.output = p("test.csv");
  cmd_features(base);

  bool ran = true;
  std::ostringstream aurocs;
  for (std::size_t k : {8, 16, 32}) {
    try {
      RunConfig cfg = base;
      cfg.features = p("train.csv");
      cfg.pca_k = k;
      cfg.projector = p("proj.json");
      cfg.output = p("train_p.csv");
      cmd_pca(cfg);
      cfg.pca_k.reset();
      cfg.features = p("test.csv");
      cfg.output = p("test_p.csv");
      cmd_pca(cfg);
      cfg.features = p("train_p.csv");
      cfg.model = p("m.json");
      cmd_train(cfg);
      cfg.features = p("test_p.csv");
      cfg.scores = p("s.csv");
      cmd_predict(cfg);
      cfg.labels = p("test.strj");
      cfg.output.clear();
      aurocs << " k=" << k << ":" << cmd_eval(cfg).auroc;
    } catch (const std::exception& e) {
      ran = false;
      aurocs << " k=" << k << ": " << e.what();
    }
  }
  fs::remove_all(dir);
  o.detail << "reconstruction " << recon << ", variance vs Jacobi " << ev_dev << ", ablation AUROC" << aurocs.str();
  o.require(recon <= 1e-5, "k = F reconstruction within 1e-5");
  o.require(ev_dev <= 1e-6, "explained variances within 1e-6");
  o.require(ran, "ablation path runs for k in {8, 16, 32}");
}

void efficiency(Outcome& o) {
  GranularityConfig global;
  global.mode = Granularity::global;
  const double ratio = estimate_flops(256, 768, global).shape / estimate_flops(64, 768, global).shape;

  const fs::path path = fs::temp_directory_path() / "strconf_acceptance_bench.strj";
  std::mt19937_64 rng(808);
  std::normal_distribution<float> n;
  Trajectory t;
  t.id = "bench";
  t.states.resize(256, 768);
  for (Eigen::Index i = 0; i < t.states.size(); ++i) t.states.data()[i] = n(rng);
  write_trajectories_file(std::vector<Trajectory>{t}, path.string(), 0);
  RunConfig cfg;  // default two_scale granularity
  cfg.input = path.string();
  cfg.repetitions = 10;
  const auto r = cmd_bench(cfg);
  fs::remove(path);
  o.detail << "shape FLOP ratio T=256/T=64 " << ratio << ", descriptor mean " << r.descriptor_instance_mean_ms
           << " ms (T=256, D=768, two_scale), p95 " << r.instance_p95_ms << " ms";
  o.require(ratio == 16.0, "shape FLOP ratio 16.0");
  o.require(r.descriptor_instance_mean_ms < 50.0, "descriptor mean < 50 ms");
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<void(Outcome&)>> criteria[] = {
      {"descriptor dimensionality", dimensionality},
      {"oracle equivalence", oracle_equivalence},
      {"spectral invariants", spectral_invariants},
      {"granularity contract", granularity_contract},
      {"estimator", estimator},
      {"metrics", metrics_cases},
      {"pca", pca},
      {"efficiency", efficiency},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    o.detail.precision(6);
    try {
      check(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.str().c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria failed\n", failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
