// Acceptance suite: one PASS/FAIL line per criterion, tolerances fixed below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "smeta/checkpoint.hpp"
#include "smeta/cli.hpp"
#include "smeta/dataset_io.hpp"
#include "smeta/evaluation.hpp"
#include "smeta/experiment.hpp"
#include "smeta/synthetic.hpp"

using namespace smeta;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome metric_arithmetic() {
  const Metrics m = metrics(Confusion{29, 30, 10, 11});
  const std::vector<std::pair<Metric, std::string>> want{
      {m.npv, "0.732"}, {m.tnr, "0.750"}, {m.n_f1, "0.741"}, {m.ppv, "0.744"},
      {m.tpr, "0.725"}, {m.p_f1, "0.734"}, {m.acc, "0.738"}};
  std::string got;
  bool ok = true;
  for (const auto& [metric, text] : want) {
    const std::string s = format_metric(metric, 3);
    ok = ok && s == text;
    got += s + " ";
  }
  return {ok, "NPV TNR N-F1 PPV TPR P-F1 Acc = " + got};
}

Outcome downsampling_oracle() {
  constexpr double kRelTol = 1e-9;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g(0.0, 10.0);
  double worst = 0.0;
  std::size_t cases = 0;
  bool partition_ok = true;
  for (std::size_t ns = 1; ns <= 64; ++ns) {
    std::vector<double> x(ns);
    for (double& v : x) v = g(rng);
    for (std::size_t ng = 1; ng <= ns; ++ng) {
      ++cases;
      const BlockLayout layout = block_layout(ns, ng);
      std::vector<int> cover(ns, 0);
      for (std::size_t j = 0; j < ng; ++j) {
        for (std::size_t k = 0; k < layout.block_size(j); ++k) {
          const std::size_t idx = layout.block_start(j) + k;
          if (idx >= ns) partition_ok = false;
          else ++cover[idx];
        }
      }
      for (int c : cover) partition_ok = partition_ok && c == 1;
      const auto y = downsample(x, ng);
      long double mass_in = 0.0L, mass_out = 0.0L, scale = 0.0L;
      for (double v : x) {
        mass_in += v;
        scale += std::fabs(v);
      }
      for (std::size_t j = 0; j < ng; ++j) mass_out += y[j] * static_cast<long double>(layout.block_size(j));
      worst = std::max(worst, static_cast<double>(std::fabs(mass_in - mass_out) / scale));
    }
  }
  const BlockLayout ref = block_layout(400, 131);
  const bool ref_ok = ref.base_size == 3 && ref.long_blocks == 7;
  return {partition_ok && worst <= kRelTol && ref_ok,
          std::to_string(cases) + " (n_s, n_g) cases, partition " + (partition_ok ? "exact" : "BROKEN") +
              fmt(", worst relative mass error %.2e (tol 1e-9), n_s=400 n_g=131 -> l=%g m=%g",
                  worst, static_cast<double>(ref.base_size), static_cast<double>(ref.long_blocks))};
}

Outcome gradient_gate() {
  constexpr double kTol = 1e-4;
  constexpr double kStep = 1e-5;
  constexpr int kSeeds = 20;
  double worst_ae = 0.0, worst_sae = 0.0;
  for (int seed = 0; seed < kSeeds; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const Architecture arch = fixture::random_arch(rng);
    const auto data = oracle::random_aligned(2, 3, arch.input_dim, 500 + seed);
    const ModelBundle ae = fixture::bundle(arch, ModelVariant::AE, seed);
    worst_ae = std::max(worst_ae, fixture::bundle_fd_error(
                                      ae, [&](const ModelBundle& m) { return loss_smeta_ae(m, data); },
                                      kStep, fixture::kFdFloor));
    const ModelBundle sae = fixture::bundle(arch, ModelVariant::SAE, seed);
    std::vector<const AlignedSignal*> a{&data[0], &data[1], &data[2]};
    std::vector<const AlignedSignal*> b{&data[3], &data[4], &data[5]};
    Rng pr(seed);
    const PairBatch pairs = fuse_half_to_half(a, b, pr);
    SiameseOptions hinge;  // margin 1, hinge mode
    worst_sae = std::max(worst_sae, fixture::bundle_fd_error(
                                        sae, [&](const ModelBundle& m) { return loss_smeta_sae(m, pairs, hinge); },
                                        kStep, fixture::kFdFloor));
  }
  return {worst_ae < kTol && worst_sae < kTol,
          fmt("%g seeds, worst relative error AE %.2e, SAE(hinge) %.2e (tol 1e-4, step 1e-5, floor 1e-6)",
              kSeeds, worst_ae, worst_sae)};
}

Outcome maml_reduction() {
  constexpr double kTol = 1e-12;
  double worst = 0.0;
  std::mt19937_64 rng(77);
  for (int c = 0; c < 10; ++c) {
    const ModelVariant v = c % 2 ? ModelVariant::SAE : ModelVariant::AE;
    const Architecture arch = fixture::random_arch(rng);
    MetaConfig cfg = MetaConfig::defaults_for(v);
    std::uniform_int_distribution<std::size_t> small(1, 3);
    cfg.alpha = 0.0;
    cfg.beta = std::uniform_real_distribution<double>(1e-3, 0.1)(rng);
    cfg.batch_size = small(rng);
    cfg.shots = small(rng);
    cfg.query_size = small(rng) + 1;
    cfg.inner_steps = small(rng) * 2;
    cfg.adaptation = c % 3 == 0 ? Adaptation::PerTask : Adaptation::Shared;
    const auto data = oracle::random_aligned(8, cfg.shots + cfg.query_size + 1, arch.input_dim, c);
    const ModelBundle b = fixture::bundle(arch, v, 900 + c);
    const SubjectPool pool = build_subject_pool(data, cfg.shots + cfg.query_size);
    Rng er(c);
    const Episode ep = sample_episode(pool, cfg, er);
    BundleGradients g = BundleGradients::zeros_like(b);
    for (std::size_t k = 0; k < ep.size(); ++k) accumulate(g, query_loss(b, ep, k, cfg).gradients);
    const ModelBundle sgd = axpy_bundle(b, cfg.beta, g);
    worst = std::max(worst, max_abs_difference(meta_step(b, ep, cfg).bundle, sgd));
  }
  return {worst <= kTol, fmt("10 configurations, max parameter difference %.2e (tol 1e-12)", worst)};
}

Outcome episode_hygiene() {
  SynthConfig sc;
  sc.seed = 5;
  const auto source = align_dataset(generate_synthetic(sc).source, AlignmentConfig{}, true);
  std::size_t overlaps = 0, repeats = 0, episodes = 0;
  for (ModelVariant v : {ModelVariant::AE, ModelVariant::SAE}) {
    const MetaConfig cfg = MetaConfig::defaults_for(v);
    const SubjectPool pool = build_subject_pool(source, cfg.shots + cfg.query_size);
    Rng rng(v == ModelVariant::AE ? 1 : 2);
    for (int e = 0; e < 1000; ++e, ++episodes) {
      const Episode ep = sample_episode(pool, cfg, rng);
      std::vector<const TaskSplit*> tasks;
      for (const auto& t : ep.tasks) tasks.push_back(&t);
      for (const auto& p : ep.paired) {
        tasks.push_back(&p.first);
        tasks.push_back(&p.second);
      }
      std::set<std::string> subjects;
      for (const TaskSplit* t : tasks) {
        if (!subjects.insert(t->subject_id).second) ++repeats;
        std::set<const AlignedSignal*> support(t->support.begin(), t->support.end());
        if (support.size() != t->support.size()) ++overlaps;
        std::set<const AlignedSignal*> query(t->query.begin(), t->query.end());
        if (query.size() != t->query.size()) ++overlaps;
        for (const AlignedSignal* q : t->query) overlaps += support.count(q);
      }
    }
  }
  return {overlaps == 0 && repeats == 0,
          std::to_string(episodes) + " episodes (1000 AE b=16, 1000 SAE b=5), " +
              std::to_string(overlaps) + " support/query overlaps, " + std::to_string(repeats) +
              " subject repeats"};
}

Outcome auc_oracle() {
  constexpr double kTol = 1e-12;
  std::mt19937_64 rng(31);
  double worst = 0.0;
  bool invariant = true;
  for (int inst = 0; inst < 50; ++inst) {
    const int n = std::uniform_int_distribution<int>(2, 200)(rng);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = std::uniform_int_distribution<int>(0, 1)(rng);
      s[i] = inst % 2 ? std::uniform_int_distribution<int>(0, 12)(rng) / 12.0
                      : std::normal_distribution<double>(0.0, 1.0)(rng);
    }
    y[0] = 0;
    y[n - 1] = 1;
    const RocCurve c = roc_auc(s, y);
    worst = std::max(worst, std::fabs(c.auc - oracle::mann_whitney_auc(s, y)));
    std::vector<double> t(s.size());
    for (int i = 0; i < n; ++i) t[i] = std::exp(2.0 * s[i]) + 5.0;
    const RocCurve ct = roc_auc(t, y);
    invariant = invariant && ct.auc == c.auc && ct.points == c.points;
  }
  return {worst <= kTol && invariant,
          fmt("50 instances, max |AUC - Mann-Whitney| %.2e (tol 1e-12), ", worst) +
              "monotone invariance " + (invariant ? "exact" : "BROKEN")};
}

// ---------------------------------------------------------------------------

struct SeedRun {
  double ae_acc = 0, smeta_acc = 0, side_before = 0, side_after = 0;
};

struct Data {
  std::vector<AlignedSignal> source, target;
};

Data make_data(const SynthConfig& sc) {
  const SyntheticData d = generate_synthetic(sc);
  return {align_dataset(d.source, AlignmentConfig{}, true),
          align_dataset(d.target, AlignmentConfig{}, false)};
}

double both_acc(const RunResult& r) { return r.evaluation.report.both.metrics.acc.value_or(0.0); }

std::vector<SeedRun> benchmark_runs;
double benchmark_seconds = 0.0;

void run_benchmark_once() {
  if (!benchmark_runs.empty()) return;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthConfig sc;
    sc.seed = seed;
    const Data d = make_data(sc);
    ExperimentConfig cfg;
    cfg.seed = seed;
    const ModelBundle pre = pretrain_from_scratch(d.source, cfg).bundle;
    ExperimentConfig plain = cfg;
    plain.run_meta = false;
    const RunResult ae = run_experiment(pre, d.source, d.target, plain);
    const RunResult sm = run_experiment(pre, d.source, d.target, cfg);
    benchmark_runs.push_back({both_acc(ae), both_acc(sm), sm.evaluation.side_accuracy_before,
                              sm.evaluation.side_accuracy_after});
    std::printf("    seed %llu: AE acc %.4f  SMeta-AE acc %.4f  side acc %.4f -> %.4f\n",
                static_cast<unsigned long long>(seed), benchmark_runs.back().ae_acc,
                benchmark_runs.back().smeta_acc, benchmark_runs.back().side_before,
                benchmark_runs.back().side_after);
  }
  benchmark_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome benchmark_a() {
  run_benchmark_once();
  double mean_ae = 0, mean_sm = 0;
  int wins = 0;
  for (const auto& r : benchmark_runs) {
    mean_ae += r.ae_acc / 10.0;
    mean_sm += r.smeta_acc / 10.0;
    wins += r.smeta_acc > r.ae_acc;
  }
  return {mean_sm >= mean_ae - 0.01 && wins >= 6,
          fmt("mean acc SMeta-AE %.4f vs AE %.4f (need >= AE - 0.01), strictly greater in %g/10 "
              "seeds (need >= 6)",
              mean_sm, mean_ae, wins)};
}

Outcome benchmark_b() {
  run_benchmark_once();
  int ok = 0;
  for (const auto& r : benchmark_runs) ok += r.side_after >= r.side_before;
  return {ok >= 9, fmt("side accuracy after fine-tune >= before in %g/10 seeds (need >= 9)", ok)};
}

double null_seconds = 0.0;

Outcome benchmark_c() {
  const auto t0 = std::chrono::steady_clock::now();
  const char* names[] = {"AE", "Meta-AE", "SMeta-AE", "SAE", "SMeta-SAE"};
  double mean[5] = {0, 0, 0, 0, 0};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthConfig sc;
    sc.seed = 100 + seed;
    sc.class_effect = 0.0;
    const Data d = make_data(sc);
    for (ModelVariant v : {ModelVariant::AE, ModelVariant::SAE}) {
      ExperimentConfig cfg;
      cfg.seed = seed;
      cfg.meta = MetaConfig::defaults_for(v);
      const ModelBundle pre = pretrain_from_scratch(d.source, cfg).bundle;
      ExperimentConfig plain = cfg;
      plain.run_meta = false;
      ExperimentConfig meta = cfg;
      meta.training = TrainingVariant::Meta;
      const std::size_t base = v == ModelVariant::AE ? 0 : 3;
      mean[base] += both_acc(run_experiment(pre, d.source, d.target, plain)) / 10.0;
      if (v == ModelVariant::AE) {
        mean[1] += both_acc(run_experiment(pre, d.source, d.target, meta)) / 10.0;
        mean[2] += both_acc(run_experiment(pre, d.source, d.target, cfg)) / 10.0;
      } else {
        mean[4] += both_acc(run_experiment(pre, d.source, d.target, cfg)) / 10.0;
      }
    }
  }
  null_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool ok = true;
  std::string detail = "class_effect=0, mean acc over 10 seeds:";
  for (int k = 0; k < 5; ++k) {
    ok = ok && mean[k] <= 0.6;
    detail += std::string(" ") + names[k] + fmt(" %.4f", mean[k]);
  }
  return {ok, detail + " (each must be <= 0.6)"};
}

Outcome benchmark_runtime() {
  const double total = benchmark_seconds + null_seconds;
  return {total < 900.0, fmt("benchmark %.1f s + null control %.1f s = %.1f s (budget 900 s)",
                             benchmark_seconds, null_seconds, total)};
}

// ---------------------------------------------------------------------------

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != 0) std::printf("    cli failure: %s\n", err.str().c_str());
  return code;
}

bool pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  auto p = [&](const char* n) { return (dir / n).string(); };
  return cli({"synth", "--out-dir", p("data"), "--seed", "42"}) == 0 &&
         cli({"align", "--input", p("data/source.csv"), "--output", p("src.csv")}) == 0 &&
         cli({"align", "--input", p("data/target.csv"), "--output", p("tgt.csv"), "--no-window"}) == 0 &&
         cli({"pretrain", "--data", p("src.csv"), "--out", p("pre.json"), "--epochs", "5", "--seed", "42"}) == 0 &&
         cli({"metatrain", "--checkpoint", p("pre.json"), "--data", p("src.csv"), "--epochs", "50",
              "--seed", "42", "--out", p("meta.json"), "--trace", p("trace.csv")}) == 0 &&
         cli({"evaluate", "--checkpoint", p("meta.json"), "--data", p("tgt.csv"), "--side-finetune",
              "--report", p("report"), "--predictions", p("pred.csv")}) == 0;
}

Outcome determinism() {
  // Same directory both times: checkpoints and reports record their input paths.
  const fs::path dir = fs::temp_directory_path() / "smeta_acceptance";
  const char* files[] = {"report.txt", "report.json", "pred.csv", "trace.csv", "meta.json", "pre.json"};
  std::vector<std::string> first;
  if (!pipeline(dir)) return {false, "pipeline failed"};
  for (const char* f : files) first.push_back(read_text_file(dir / f));
  if (!pipeline(dir)) return {false, "pipeline failed"};
  std::size_t same = 0;
  for (std::size_t i = 0; i < first.size(); ++i) same += read_text_file(dir / files[i]) == first[i];
  fs::remove_all(dir);
  return {same == first.size(),
          std::to_string(same) + "/6 output files byte-identical across two seeded runs "
                                 "(reports, predictions, trace, checkpoints)"};
}

Outcome checkpoint_round_trip() {
  SynthConfig sc;
  sc.seed = 9;
  const Data d = make_data(sc);
  ExperimentConfig cfg;
  cfg.pretrain.epochs = 2;
  double worst = 0.0;
  bool identical = true;
  for (ModelVariant v : {ModelVariant::AE, ModelVariant::SAE}) {
    cfg.meta = MetaConfig::defaults_for(v);
    Checkpoint cp;
    cp.bundle = pretrain_from_scratch(d.source, cfg).bundle;
    const fs::path path = fs::temp_directory_path() / "smeta_acceptance_ckpt.json";
    save_checkpoint(cp, path);
    const Checkpoint back = load_checkpoint(path);
    fs::remove(path);
    worst = std::max(worst, max_abs_difference(back.bundle, cp.bundle));
    identical = identical && bit_identical(back.bundle, cp.bundle);
  }
  return {worst == 0.0 && identical,
          fmt("trained AE and SAE bundles, max parameter difference %g, bit patterns ", worst) +
              (identical ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"metric arithmetic reproduction", 0.001, metric_arithmetic},
      {"down-sampling oracle", 5.0, downsampling_oracle},
      {"gradient gate", 60.0, gradient_gate},
      {"MAML reduction (alpha = 0)", 10.0, maml_reduction},
      {"episode hygiene", 10.0, episode_hygiene},
      {"AUC oracle", 5.0, auc_oracle},
      {"synthetic benchmark (a) SMeta-AE vs AE", 900.0, benchmark_a},
      {"synthetic benchmark (b) side fine-tune", 900.0, benchmark_b},
      {"synthetic benchmark (c) null-effect control", 900.0, benchmark_c},
      {"synthetic benchmark runtime", 900.0, benchmark_runtime},
      {"determinism", 120.0, determinism},
      {"checkpoint round-trip", 30.0, checkpoint_round_trip},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs <= c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += pass ? 0 : 1;
    std::printf("%s  %-45s %s [%.3f s, budget %g s%s]\n", pass ? "PASS" : "FAIL", c.name.c_str(),
                o.detail.c_str(), secs, c.budget_s, in_budget ? "" : ", OVER BUDGET");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
