#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "smeta/checkpoint.hpp"
#include "smeta/cli.hpp"
#include "smeta/dataset_io.hpp"

using namespace smeta;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// One shared workspace: synthetic data, aligned CSVs and a short pretrain.
struct Workspace {
  fs::path dir;

  Workspace() {
    dir = fs::temp_directory_path() / "smeta_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    REQUIRE(cli({"synth", "--out-dir", p("data"), "--seed", "7"}).code == 0);
    REQUIRE(cli({"align", "--input", p("data/source.csv"), "--output", p("src.csv")}).code == 0);
    REQUIRE(cli({"align", "--input", p("data/target.csv"), "--output", p("tgt.csv"), "--no-window"})
                .code == 0);
    REQUIRE(cli({"pretrain", "--data", p("src.csv"), "--out", p("pre.json"), "--epochs", "2",
                 "--seed", "7"})
                .code == 0);
  }

  std::string p(const std::string& name) const { return (dir / name).string(); }
};

const Workspace& ws() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_CASE("synth with the same seed twice gives identical files") {
  const auto& w = ws();
  REQUIRE(cli({"synth", "--out-dir", w.p("again"), "--seed", "7"}).code == 0);
  CHECK(read_text_file(w.p("again/source.csv")) == read_text_file(w.p("data/source.csv")));
  CHECK(read_text_file(w.p("again/target.csv")) == read_text_file(w.p("data/target.csv")));
}

TEST_CASE("full pipeline emits a well-formed report") {
  const auto& w = ws();
  const Run mt = cli({"metatrain", "--checkpoint", w.p("pre.json"), "--data", w.p("src.csv"),
                      "--variant", "smeta", "--epochs", "4", "--seed", "3", "--out",
                      w.p("meta.json"), "--trace", w.p("trace.csv")});
  REQUIRE(mt.code == 0);
  const Run ev = cli({"evaluate", "--checkpoint", w.p("meta.json"), "--data", w.p("tgt.csv"),
                      "--side-finetune", "--finetune-steps", "2", "--report", w.p("rep"),
                      "--predictions", w.p("pred.csv")});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("both") != std::string::npos);
  const auto doc = nlohmann::json::parse(read_text_file(w.p("rep.json")));
  CHECK(doc["signals"] == 80);
  for (const char* slice : {"both", "left", "right"}) {
    const auto& s = doc["slices"][slice];
    REQUIRE(s.is_object());
    for (const char* k : {"tp", "tn", "fp", "fn"}) CHECK(s["confusion"][k].is_number_integer());
    for (const char* k : {"npv", "tnr", "n_f1", "ppv", "tpr", "p_f1", "acc"}) {
      CHECK((s["metrics"][k].is_number() || s["metrics"][k].is_null()));
    }
    CHECK((s["roc"].is_null() || s["roc"]["auc"].is_number()));
  }
  const auto& c = doc["slices"]["both"]["confusion"];
  CHECK(c["tp"].get<int>() + c["tn"].get<int>() + c["fp"].get<int>() + c["fn"].get<int>() == 80);
  CHECK(doc["side_accuracy"]["after"].is_number());
  CHECK(fs::exists(w.p("rep.txt")));
  const std::string trace = read_text_file(w.p("trace.csv"));
  CHECK(trace.rfind("epoch,mean_support_loss,mean_query_loss,component_cls", 0) == 0);
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 5);
  const std::string pred = read_text_file(w.p("pred.csv"));
  CHECK(std::count(pred.begin(), pred.end(), '\n') == 81);
  const Checkpoint cp = load_checkpoint(w.p("meta.json"));
  CHECK(cp.metadata.stage == "metatrain");
  CHECK(cp.metadata.epoch == 4);
  CHECK(cp.metadata.config.at("variant") == "smeta");
}

TEST_CASE("alpha = 0 meta training reproduces plain query training") {
  const auto& w = ws();
  for (int epochs : {1, 3}) {
    const std::string e = std::to_string(epochs);
    REQUIRE(cli({"metatrain", "--checkpoint", w.p("pre.json"), "--data", w.p("src.csv"),
                 "--variant", "meta", "--alpha", "0", "--inner-steps", "5", "--epochs", e,
                 "--beta", "0.01", "--seed", "5", "--out", w.p("a0.json")})
                .code == 0);
    REQUIRE(cli({"metatrain", "--checkpoint", w.p("pre.json"), "--data", w.p("src.csv"),
                 "--variant", "plain", "--epochs", e, "--beta", "0.01", "--seed", "5", "--out",
                 w.p("plain.json")})
                .code == 0);
    const double diff = max_abs_difference(load_checkpoint(w.p("a0.json")).bundle,
                                           load_checkpoint(w.p("plain.json")).bundle);
    CHECK(diff <= 1e-12);
  }
}

TEST_CASE("config file values apply unless overridden on the command line") {
  const auto& w = ws();
  {
    std::ofstream cfg(w.p("run.cfg"));
    cfg << "# meta settings\nepochs = 3\nvariant = meta\nseed = 11\n";
  }
  REQUIRE(cli({"metatrain", "--config", w.p("run.cfg"), "--checkpoint", w.p("pre.json"), "--data",
               w.p("src.csv"), "--out", w.p("cfg.json")})
              .code == 0);
  Checkpoint cp = load_checkpoint(w.p("cfg.json"));
  CHECK(cp.metadata.epoch == 3);
  CHECK(cp.metadata.seed == 11);
  CHECK(cp.metadata.config.at("variant") == "meta");
  REQUIRE(cli({"metatrain", "--config", w.p("run.cfg"), "--checkpoint", w.p("pre.json"), "--data",
               w.p("src.csv"), "--out", w.p("cfg.json"), "--epochs", "2"})
              .code == 0);
  cp = load_checkpoint(w.p("cfg.json"));
  CHECK(cp.metadata.epoch == 2);
  CHECK(cp.metadata.seed == 11);
  {
    std::ofstream bad(w.p("bad.cfg"));
    bad << "just words\n";
  }
  const Run r = cli({"metatrain", "--config", w.p("bad.cfg"), "--data", w.p("src.csv"), "--out",
                     w.p("x.json")});
  CHECK(r.code != 0);
  CHECK(r.err.find("key = value") != std::string::npos);
}

TEST_CASE("usage and runtime errors exit nonzero with a diagnostic") {
  const auto& w = ws();
  Run r = cli({"metatrain", "--data", w.p("src.csv")});
  CHECK(r.code != 0);
  CHECK(r.err.find("--out") != std::string::npos);
  CHECK(r.err.find("--alpha") != std::string::npos);  // the subcommand's option list
  r = cli({"evaluate", "--checkpoint", w.p("missing.json"), "--data", w.p("tgt.csv")});
  CHECK(r.code != 0);
  CHECK(r.err.find("IoError") != std::string::npos);
  r = cli({"metatrain", "--data", w.p("src.csv"), "--out", w.p("x.json"), "--variant", "bogus"});
  CHECK(r.code != 0);
  r = cli({"align", "--input", w.p("data/source.csv"), "--output", w.p("bad.csv"), "--no-window"});
  CHECK(r.code != 0);
  CHECK(r.err.find("InvalidTargetLength") != std::string::npos);
  r = cli({});
  CHECK(r.code != 0);
  r = cli({"pretrain", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--epochs") != std::string::npos);
}

TEST_CASE("metatrain without a checkpoint warns about the untrained start") {
  const auto& w = ws();
  const Run r = cli({"metatrain", "--data", w.p("src.csv"), "--epochs", "1", "--seed", "2",
                     "--out", w.p("fresh.json")});
  CHECK(r.code == 0);
  CHECK(r.err.find("warning") != std::string::npos);
  const Run mismatch = cli({"metatrain", "--checkpoint", w.p("pre.json"), "--model", "sae",
                            "--data", w.p("src.csv"), "--out", w.p("m.json")});
  CHECK(mismatch.code != 0);
  CHECK(mismatch.err.find("VariantMismatch") != std::string::npos);
}

TEST_CASE("latent export and single-value sweep") {
  const auto& w = ws();
  REQUIRE(cli({"latent", "--checkpoint", w.p("pre.json"), "--data", w.p("tgt.csv"), "--output",
               w.p("z.csv")})
              .code == 0);
  const std::string z = read_text_file(w.p("z.csv"));
  CHECK(z.rfind("subject_id,side,label,z0,", 0) == 0);
  CHECK(std::count(z.begin(), z.end(), '\n') == 81);

  const Run s = cli({"sweep", "--axis", "batch_size", "--values", "2,4", "--runs", "2",
                     "--checkpoint", w.p("pre.json"), "--source", w.p("src.csv"), "--target",
                     w.p("tgt.csv"), "--epochs", "2", "--seed", "4", "--out", w.p("sweep.csv")});
  REQUIRE(s.code == 0);
  const std::string csv = read_text_file(w.p("sweep.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(csv.find("batch_size,2,4,") != std::string::npos);
  CHECK(csv.find("batch_size,2,5,") != std::string::npos);
  CHECK(csv.find("batch_size,4,5,") != std::string::npos);
}

TEST_CASE("seed falls back to SMETA_SEED in the installed binary") {
  const auto& w = ws();
  const std::string bin = SMETA_CLI_PATH;
  const std::string base = bin + " synth --subjects-source 4 --source-signals 8 --subjects-target 2 ";
  REQUIRE(std::system((base + "--out-dir " + w.p("s_flag") + " --seed 19 > /dev/null").c_str()) == 0);
  REQUIRE(std::system(("SMETA_SEED=19 " + base + "--out-dir " + w.p("s_env") + " > /dev/null").c_str()) == 0);
  REQUIRE(std::system((base + "--out-dir " + w.p("s_def") + " > /dev/null").c_str()) == 0);
  CHECK(read_text_file(w.p("s_flag/source.csv")) == read_text_file(w.p("s_env/source.csv")));
  CHECK(read_text_file(w.p("s_flag/source.csv")) != read_text_file(w.p("s_def/source.csv")));
  CHECK(std::system((bin + " evaluate > /dev/null 2>&1").c_str()) != 0);
}
