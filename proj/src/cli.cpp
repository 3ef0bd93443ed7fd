#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "smeta/checkpoint.hpp"
#include "smeta/cli.hpp"
#include "smeta/dataset_io.hpp"
#include "smeta/error.hpp"
#include "smeta/experiment.hpp"
#include "smeta/report.hpp"
#include "smeta/synthetic.hpp"

namespace smeta {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool has_flag(const std::vector<std::string>& args, const std::string& name) {
  const std::string flag = "--" + name;
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

std::string fmt(double v) { return format_double(v); }

// Options shared by metatrain and sweep.
struct MetaFlags {
  std::string variant = "smeta";
  std::optional<std::string> model;
  double alpha = 1e-3;
  double beta = 1e-3;
  std::optional<std::size_t> batch;
  std::size_t shots = 2;
  std::size_t query = 8;
  std::size_t inner_steps = 1;
  std::optional<std::size_t> epochs;
  std::string adaptation = "shared";
  bool literal_adv = false;
  double margin = 1.0;

  void bind(CLI::App* sub) {
    sub->add_option("--variant", variant, "plain | meta | smeta")
        ->check(CLI::IsMember({"plain", "meta", "smeta"}))
        ->capture_default_str();
    sub->add_option("--model", model, "ae | sae (defaults to the checkpoint's variant)")
        ->check(CLI::IsMember({"ae", "sae"}));
    sub->add_option("--alpha", alpha, "meta-train (inner) learning rate")->capture_default_str();
    sub->add_option("--beta", beta, "meta-test (outer) learning rate")->capture_default_str();
    sub->add_option("--batch", batch, "tasks per episode (default 16 for ae, 5 for sae)");
    sub->add_option("--shots", shots, "support signals per task")->capture_default_str();
    sub->add_option("--query", query, "query signals per task")->capture_default_str();
    sub->add_option("--inner-steps", inner_steps, "virtual update steps")->capture_default_str();
    sub->add_option("--epochs", epochs, "episodes (default 200 for ae, 1000 for sae)");
    sub->add_option("--adaptation", adaptation, "shared | per-task")
        ->check(CLI::IsMember({"shared", "per-task"}))
        ->capture_default_str();
    sub->add_flag("--literal-adv", literal_adv, "use the unbounded -MSE term for different subjects");
    sub->add_option("--margin", margin, "hinge margin for different-subject pairs")
        ->capture_default_str();
  }

  MetaConfig to_config(ModelVariant v) const {
    MetaConfig cfg = MetaConfig::defaults_for(v);
    cfg.alpha = alpha;
    cfg.beta = beta;
    if (batch) cfg.batch_size = *batch;
    cfg.shots = shots;
    cfg.query_size = query;
    cfg.inner_steps = inner_steps;
    if (epochs) cfg.epochs = *epochs;
    cfg.adaptation = adaptation == "per-task" ? Adaptation::PerTask : Adaptation::Shared;
    cfg.siamese.literal_adv = literal_adv;
    cfg.siamese.margin = margin;
    cfg.apply(training_variant_from_string(variant));
    cfg.validate();
    return cfg;
  }

  void echo(std::map<std::string, std::string>& out, const MetaConfig& cfg) const {
    out["variant"] = variant;
    out["alpha"] = fmt(cfg.alpha);
    out["beta"] = fmt(cfg.beta);
    out["batch"] = std::to_string(cfg.batch_size);
    out["shots"] = std::to_string(cfg.shots);
    out["query"] = std::to_string(cfg.query_size);
    out["inner_steps"] = std::to_string(cfg.inner_steps);
    out["epochs"] = std::to_string(cfg.epochs);
    out["adaptation"] = adaptation;
    out["literal_adv"] = literal_adv ? "true" : "false";
    out["margin"] = fmt(margin);
  }
};

struct InferenceFlags {
  bool side_finetune = false;
  std::size_t finetune_steps = 1;
  std::string finetune_scope = "encoder";
  double finetune_beta = 1e-3;

  void bind(CLI::App* sub, bool with_beta) {
    sub->add_flag("--side-finetune", side_finetune, "per-subject side fine-tuning before prediction");
    sub->add_option("--finetune-steps", finetune_steps, "fine-tuning gradient steps")
        ->capture_default_str();
    sub->add_option("--finetune-scope", finetune_scope, "encoder | all")
        ->check(CLI::IsMember({"encoder", "all"}))
        ->capture_default_str();
    if (with_beta) {
      sub->add_option("--beta", finetune_beta, "fine-tuning learning rate")->capture_default_str();
    }
  }

  InferenceConfig to_config() const {
    InferenceConfig cfg;
    cfg.side_aware = side_finetune;
    cfg.beta = finetune_beta;
    cfg.finetune_steps = finetune_steps;
    cfg.scope = finetune_scope_from_string(finetune_scope);
    return cfg;
  }
};

Checkpoint load_or_init(const std::optional<std::string>& path, const std::optional<std::string>& model,
                        std::size_t input_dim, std::uint64_t seed, std::ostream& err) {
  if (path) {
    Checkpoint cp = load_checkpoint(*path);
    if (model && model_variant_from_string(*model) != cp.bundle.variant) {
      throw Error(ErrorCode::VariantMismatch,
                  "--model " + *model + " but checkpoint holds " + to_string(cp.bundle.variant));
    }
    return cp;
  }
  err << "warning: no --checkpoint given; starting from a random initialization\n";
  Checkpoint cp;
  Architecture arch;
  arch.input_dim = input_dim;
  Rng rng = make_rng(seed, stream::kInit);
  cp.bundle = make_bundle(arch, model_variant_from_string(model.value_or("ae")), rng);
  cp.metadata.stage = "init";
  cp.metadata.seed = seed;
  return cp;
}

std::size_t signal_length(const std::vector<AlignedSignal>& data) {
  if (data.empty()) throw Error(ErrorCode::EmptyInput, "dataset has no signals");
  return data.front().values.size();
}

}  // namespace

std::vector<std::string> config_file_arguments(const std::string& path,
                                               const std::vector<std::string>& args) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config file " + path);
  std::vector<std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError,
                  path + ": line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw Error(ErrorCode::ParseError, path + ": line " + std::to_string(line_no) + ": empty key");
    }
    if (!has_flag(args, key)) out.push_back("--" + key + "=" + value);
  }
  return out;
}

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Side-aware episodic meta-learning for short evoked-potential signals", "smeta"};
  app.require_subcommand(1, 1);
  app.footer("Any subcommand also accepts --config FILE with `key = value` lines; flags given on\nthe command line take precedence. --seed falls back to SMETA_SEED.");
  app.set_help_all_flag("--help-all", "Expand all help");

  // synth
  SynthConfig synth;
  std::string synth_dir = ".";
  auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic source/target benchmark");
  synth_cmd->add_option("--out-dir", synth_dir, "directory for source.csv and target.csv")
      ->capture_default_str();
  synth_cmd->add_option("--subjects-source", synth.n_subjects_source)->capture_default_str();
  synth_cmd->add_option("--subjects-target", synth.n_subjects_target)->capture_default_str();
  synth_cmd->add_option("--source-signals", synth.source_signals)->capture_default_str();
  synth_cmd->add_option("--source-points", synth.source_points)->capture_default_str();
  synth_cmd->add_option("--target-points", synth.target_points)->capture_default_str();
  synth_cmd->add_option("--class-effect", synth.class_effect)->capture_default_str();
  synth_cmd->add_option("--side-effect", synth.side_effect)->capture_default_str();
  synth_cmd->add_option("--subject-noise", synth.subject_noise)->capture_default_str();
  synth_cmd->add_option("--observation-noise", synth.observation_noise)->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed)->envname("SMETA_SEED")->capture_default_str();

  // align
  AlignmentConfig align;
  std::string align_in;
  std::string align_out;
  bool no_window = false;
  auto* align_cmd = app.add_subcommand("align", "slice, down-sample and normalize a signal CSV");
  align_cmd->add_option("--input", align_in, "raw signal CSV")->required();
  align_cmd->add_option("--output", align_out, "aligned signal CSV")->required();
  align_cmd->add_option("--window", align.window_size, "sliding window size")->capture_default_str();
  align_cmd->add_option("--stride", align.stride, "window interval")->capture_default_str();
  align_cmd->add_option("--target-points", align.target_points, "aligned length")
      ->capture_default_str();
  align_cmd->add_flag("--no-window", no_window,
                      "target-style input: normalize only (rows must already have target-points values)");

  // pretrain
  std::string pre_data;
  std::string pre_out;
  std::string pre_model = "ae";
  std::optional<std::string> pre_trace;
  PretrainConfig pre;
  Architecture arch;
  bool pre_ear = false;
  std::uint64_t pre_seed = 0;
  auto* pre_cmd = app.add_subcommand("pretrain", "plain mini-batch training of an AE or SAE bundle");
  pre_cmd->add_option("--data", pre_data, "aligned source CSV")->required();
  pre_cmd->add_option("--out", pre_out, "checkpoint to write")->required();
  pre_cmd->add_option("--model", pre_model, "ae | sae")
      ->check(CLI::IsMember({"ae", "sae"}))
      ->capture_default_str();
  pre_cmd->add_option("--epochs", pre.epochs)->capture_default_str();
  pre_cmd->add_option("--lr", pre.learning_rate)->capture_default_str();
  pre_cmd->add_option("--batch", pre.batch_size)->capture_default_str();
  pre_cmd->add_option("--hidden", arch.hidden_dim)->capture_default_str();
  pre_cmd->add_option("--latent", arch.latent_dim)->capture_default_str();
  pre_cmd->add_option("--subject-hidden", arch.subject_hidden_dim)->capture_default_str();
  pre_cmd->add_flag("--ear-loss", pre_ear, "include the side-prediction loss while pretraining");
  pre_cmd->add_option("--trace", pre_trace, "per-epoch loss CSV");
  pre_cmd->add_option("--seed", pre_seed)->envname("SMETA_SEED")->capture_default_str();

  // metatrain
  MetaFlags meta_flags;
  std::string meta_data;
  std::string meta_out;
  std::optional<std::string> meta_ckpt;
  std::optional<std::string> meta_trace;
  std::uint64_t meta_seed = 0;
  auto* meta_cmd = app.add_subcommand("metatrain", "episodic meta-training from a checkpoint");
  meta_cmd->add_option("--data", meta_data, "aligned source CSV")->required();
  meta_cmd->add_option("--checkpoint", meta_ckpt, "pretrained checkpoint");
  meta_cmd->add_option("--out", meta_out, "checkpoint to write")->required();
  meta_cmd->add_option("--trace", meta_trace, "training-trace CSV");
  meta_cmd->add_option("--seed", meta_seed)->envname("SMETA_SEED")->capture_default_str();
  meta_flags.bind(meta_cmd);

  // evaluate
  InferenceFlags eval_flags;
  std::string eval_ckpt;
  std::string eval_data;
  std::optional<std::string> eval_report;
  std::optional<std::string> eval_preds;
  auto* eval_cmd = app.add_subcommand("evaluate", "predict the target dataset and report metrics");
  eval_cmd->add_option("--checkpoint", eval_ckpt)->required();
  eval_cmd->add_option("--data", eval_data, "aligned target CSV")->required();
  eval_cmd->add_option("--report", eval_report, "report path prefix (.txt and .json are written)");
  eval_cmd->add_option("--predictions", eval_preds, "prediction CSV");
  eval_flags.bind(eval_cmd, true);

  // sweep
  MetaFlags sweep_meta;
  InferenceFlags sweep_inf;
  std::string sweep_axis;
  std::vector<double> sweep_values;
  std::string sweep_ckpt;
  std::string sweep_source;
  std::string sweep_target;
  std::size_t sweep_runs = 1;
  std::optional<std::string> sweep_out;
  std::optional<std::string> sweep_table;
  std::uint64_t sweep_seed = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "train and evaluate over one parameter axis");
  sweep_cmd->add_option("--axis", sweep_axis, "batch_size | inner_steps | alpha | beta")
      ->required()
      ->check(CLI::IsMember({"batch_size", "batch", "inner_steps", "alpha", "beta"}));
  sweep_cmd->add_option("--values", sweep_values, "comma-separated axis values")
      ->required()
      ->delimiter(',');
  sweep_cmd->add_option("--checkpoint", sweep_ckpt, "pretrained checkpoint")->required();
  sweep_cmd->add_option("--source", sweep_source, "aligned source CSV")->required();
  sweep_cmd->add_option("--target", sweep_target, "aligned target CSV")->required();
  sweep_cmd->add_option("--runs", sweep_runs, "runs per value (seeds seed..seed+runs-1)")
      ->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "per-run CSV");
  sweep_cmd->add_option("--table", sweep_table, "text table");
  sweep_cmd->add_option("--seed", sweep_seed)->envname("SMETA_SEED")->capture_default_str();
  sweep_meta.bind(sweep_cmd);
  sweep_inf.bind(sweep_cmd, false);

  // latent
  std::string lat_ckpt;
  std::string lat_data;
  std::string lat_out;
  auto* lat_cmd = app.add_subcommand("latent", "export encoder outputs for external embedding");
  lat_cmd->add_option("--checkpoint", lat_ckpt)->required();
  lat_cmd->add_option("--data", lat_data, "aligned signal CSV")->required();
  lat_cmd->add_option("--output", lat_out, "latent CSV")->required();

  // Flatten `--config FILE` into ordinary flags; explicit flags win.
  std::vector<std::string> args;
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < raw_args.size(); ++i) {
    if (raw_args[i] == "--config" && i + 1 < raw_args.size()) {
      config_path = raw_args[++i];
    } else if (raw_args[i].rfind("--config=", 0) == 0) {
      config_path = raw_args[i].substr(9);
    } else {
      args.push_back(raw_args[i]);
    }
  }

  try {
    if (config_path) {
      const auto extra = config_file_arguments(*config_path, args);
      args.insert(args.end(), extra.begin(), extra.end());
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << "\n";
      const auto subs = app.get_subcommands();
      err << (subs.empty() ? app.help() : subs.front()->help());
      return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
    }

    if (*synth_cmd) {
      const SyntheticData data = generate_synthetic(synth);
      const std::filesystem::path dir(synth_dir);
      save_dataset(dir / "source.csv", data.source);
      save_dataset(dir / "target.csv", data.target);
      out << "wrote " << data.source.size() << " source and " << data.target.size()
          << " target signals to " << dir.string() << "\n";
      return 0;
    }

    if (*align_cmd) {
      const auto raws = load_dataset(align_in);
      const auto aligned = align_dataset(raws, align, !no_window);
      save_aligned(align_out, aligned);
      out << "aligned " << raws.size() << " signals into " << aligned.size() << " rows of "
          << align.target_points << " points\n";
      return 0;
    }

    if (*pre_cmd) {
      const auto data = load_aligned(pre_data);
      ExperimentConfig cfg;
      cfg.arch = arch;
      cfg.arch.input_dim = signal_length(data);
      cfg.meta.variant = model_variant_from_string(pre_model);
      cfg.pretrain = pre;
      cfg.pretrain.weights.ear = pre_ear ? 1.0 : 0.0;
      cfg.seed = pre_seed;
      const PretrainResult result = pretrain_from_scratch(data, cfg);
      Checkpoint cp;
      cp.bundle = result.bundle;
      cp.metadata.seed = pre_seed;
      cp.metadata.epoch = pre.epochs;
      cp.metadata.stage = "pretrain";
      cp.metadata.config = {{"model", pre_model},
                            {"epochs", std::to_string(pre.epochs)},
                            {"lr", fmt(pre.learning_rate)},
                            {"batch", std::to_string(pre.batch_size)},
                            {"ear_loss", pre_ear ? "true" : "false"},
                            {"data", pre_data}};
      save_checkpoint(cp, pre_out);
      if (pre_trace) {
        std::ostringstream csv;
        csv << "epoch,mean_loss\n";
        for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
          csv << e + 1 << ',' << format_double(result.epoch_losses[e]) << '\n';
        }
        write_text_file(*pre_trace, csv.str());
      }
      out << "pretrained " << pre_model << " for " << pre.epochs << " epochs; final loss "
          << (result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back()) << "\n";
      return 0;
    }

    if (*meta_cmd) {
      const auto data = load_aligned(meta_data);
      Checkpoint cp = load_or_init(meta_ckpt, meta_flags.model, signal_length(data), meta_seed, err);
      MetaConfig cfg = meta_flags.to_config(cp.bundle.variant);
      cfg.seed = meta_seed;
      Rng rng = make_rng(meta_seed, stream::kMeta);
      MetaFitResult fit = meta_fit(cp.bundle, data, cfg, rng, meta_ckpt.has_value());
      for (const auto& w : fit.warnings) err << "warning: " << w << "\n";
      Checkpoint result;
      result.bundle = std::move(fit.bundle);
      result.metadata.seed = meta_seed;
      result.metadata.epoch = cfg.epochs;
      result.metadata.stage = "metatrain";
      meta_flags.echo(result.metadata.config, cfg);
      result.metadata.config["model"] = to_string(cfg.variant);
      result.metadata.config["data"] = meta_data;
      save_checkpoint(result, meta_out);
      if (meta_trace) {
        std::ostringstream csv;
        write_trace_csv(csv, fit.trace, cfg.variant);
        write_text_file(*meta_trace, csv.str());
      }
      out << "meta-trained (" << meta_flags.variant << ", " << to_string(cfg.variant) << ") for "
          << cfg.epochs << " episodes\n";
      return 0;
    }

    if (*eval_cmd) {
      const Checkpoint cp = load_checkpoint(eval_ckpt);
      const auto data = load_aligned(eval_data);
      const auto subjects = group_test_subjects(data);
      const EvaluationResult result = evaluate_subjects(cp.bundle, subjects, eval_flags.to_config());
      const std::string text = report_to_text(
          result, "evaluation of " + eval_ckpt + (eval_flags.side_finetune ? " (side fine-tuned)" : ""));
      out << text;
      if (eval_report) {
        write_text_file(*eval_report + ".txt", text);
        write_text_file(*eval_report + ".json", report_to_json(result));
      }
      if (eval_preds) {
        std::ostringstream csv;
        write_predictions_csv(csv, result.predictions);
        write_text_file(*eval_preds, csv.str());
      }
      return 0;
    }

    if (*sweep_cmd) {
      const Checkpoint cp = load_checkpoint(sweep_ckpt);
      const auto source = load_aligned(sweep_source);
      const auto target = load_aligned(sweep_target);
      ExperimentConfig cfg;
      cfg.meta = sweep_meta.to_config(cp.bundle.variant);
      cfg.training = training_variant_from_string(sweep_meta.variant);
      cfg.inference = sweep_inf.to_config();
      cfg.inference.beta = cfg.meta.beta;
      cfg.seed = sweep_seed;
      const SweepTable table = run_sweep(sweep_axis_from_string(sweep_axis), sweep_values, cfg,
                                         cp.bundle, source, target, sweep_runs);
      const std::string text = sweep_to_text(table);
      out << text;
      if (sweep_out) write_text_file(*sweep_out, sweep_to_csv(table));
      if (sweep_table) write_text_file(*sweep_table, text);
      return 0;
    }

    if (*lat_cmd) {
      const Checkpoint cp = load_checkpoint(lat_ckpt);
      const auto data = load_aligned(lat_data);
      std::ostringstream csv;
      write_latent_csv(csv, extract_latent(cp.bundle, data));
      write_text_file(lat_out, csv.str());
      out << "wrote " << data.size() << " latent rows\n";
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace smeta
