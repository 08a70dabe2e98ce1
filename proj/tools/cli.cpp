#include "cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "fnnet/datagen/dataset_io.hpp"
#include "fnnet/error.hpp"
#include "fnnet/model/checkpoint.hpp"
#include "fnnet/pipeline/evaluate.hpp"
#include "fnnet/pipeline/train.hpp"

namespace fnnet::cli {

namespace {

struct GenerateArgs {
  std::uint64_t seed = 0;
  std::size_t pairs = 0;
  std::size_t n_points = 512;
  double outlier_ratio = 0.5;
  double jitter_px = 0.5;
  double drift_px = 30.0;
  std::string out;
};

struct TrainArgs {
  std::string data, val, config, out, log;
  std::size_t epochs = 20;
  double grad_clip = 0.0;
};

struct EvalArgs {
  std::string data, ckpt, report;
  bool ransac_post = false;
  std::size_t iters = 1000;
  std::uint64_t seed = 0;
};

struct BaselineArgs {
  std::string data, report;
  std::size_t iters = 1000;
  std::uint64_t seed = 0;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error("write to '" + path + "' failed");
}

void emit_report(const pipeline::EvalReport& report, const std::string& path, std::ostream& out) {
  if (!path.empty()) write_text(path, report.to_json().dump(2) + "\n");
  out << report.summary() << '\n';
}

int do_generate(const GenerateArgs& a, std::ostream& out) {
  datagen::SceneConfig scene;
  scene.n_points = a.n_points;
  datagen::NoiseConfig noise;
  noise.n_total = a.n_points;
  noise.outlier_ratio = a.outlier_ratio;
  noise.inlier_jitter_px = a.jitter_px;
  noise.drift_px = a.drift_px;
  noise.seed = a.seed;
  noise.validate();
  const auto records = datagen::generate_dataset(a.seed, a.pairs, scene, noise);
  datagen::write_dataset(records, a.out);
  out << "wrote " << records.size() << " pairs to " << a.out << '\n';
  return kExitOk;
}

model::FNNetConfig read_config(const std::string& path) {
  if (path.empty()) return {};
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, "config '" + path + "': " + e.what());
  }
  return model::config_from_json(j);
}

int do_train(const TrainArgs& a, std::ostream& out) {
  const model::FNNetConfig cfg = read_config(a.config);
  cfg.validate();
  const auto train_set = datagen::read_dataset(a.data);
  const auto val_set = datagen::read_dataset(a.val);
  model::FNNet net(cfg);

  std::ofstream log_file;
  if (!a.log.empty()) {
    log_file.open(a.log, std::ios::binary | std::ios::trunc);
    if (!log_file) throw Error("cannot open log '" + a.log + "'");
  }
  pipeline::TrainOptions opt;
  opt.epochs = a.epochs;
  opt.checkpoint = a.out;
  opt.grad_clip_norm = a.grad_clip;
  opt.log = [&](const std::string& line) {
    out << line << '\n' << std::flush;
    if (log_file.is_open()) log_file << line << '\n' << std::flush;
  };
  pipeline::train(net, train_set, val_set, opt);
  return kExitOk;
}

int do_eval(const EvalArgs& a, std::ostream& out) {
  const auto data = datagen::read_dataset(a.data);
  const model::Checkpoint ck = model::load_checkpoint(a.ckpt);
  pipeline::EvalOptions opt;
  opt.ransac_post = a.ransac_post;
  opt.ransac.iterations = a.iters;
  opt.ransac.seed = a.seed;
  emit_report(pipeline::evaluate(data, pipeline::fnnet_predictor(ck.model), opt), a.report, out);
  return kExitOk;
}

int do_baseline(const BaselineArgs& a, std::ostream& out) {
  const auto data = datagen::read_dataset(a.data);
  pipeline::EvalOptions opt;
  opt.ransac.iterations = a.iters;
  opt.ransac.seed = a.seed;
  pipeline::RansacConfig rc = opt.ransac;
  emit_report(pipeline::evaluate(data, pipeline::ransac_predictor(rc), opt), a.report, out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"FN-Net correspondence filtering: data generation, training and evaluation", "fnnet"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic correspondence dataset (.jsonl)");
  g->add_option("--seed", gen.seed, "Dataset seed")->required();
  g->add_option("--pairs", gen.pairs, "Number of image pairs")->required();
  g->add_option("--n-points", gen.n_points, "Correspondences per pair")->capture_default_str();
  g->add_option("--outlier-ratio", gen.outlier_ratio, "Fraction of outliers")->capture_default_str();
  g->add_option("--jitter-px", gen.jitter_px, "Inlier noise sigma in pixels")->capture_default_str();
  g->add_option("--drift-px", gen.drift_px, "Mean displacement of drift outliers")->capture_default_str();
  g->add_option("--out", gen.out, "Output file")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train FN-Net and write a checkpoint after every epoch");
  t->add_option("--data", tr.data, "Training dataset")->required();
  t->add_option("--val", tr.val, "Validation dataset")->required();
  t->add_option("--config", tr.config, "Model config JSON (defaults when omitted)");
  t->add_option("--epochs", tr.epochs, "Number of epochs")->capture_default_str();
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--log", tr.log, "Also write the epoch log to this file");
  t->add_option("--grad-clip", tr.grad_clip, "Global gradient-norm clip (0 = off)")->capture_default_str();

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
  e->add_option("--data", ev.data, "Dataset")->required();
  e->add_option("--ckpt", ev.ckpt, "Checkpoint")->required();
  e->add_flag("--ransac-post", ev.ransac_post, "Re-estimate with RANSAC on predicted inliers");
  e->add_option("--iters", ev.iters, "RANSAC iterations for --ransac-post")->capture_default_str();
  e->add_option("--seed", ev.seed, "RANSAC seed")->capture_default_str();
  e->add_option("--report", ev.report, "Write the JSON report here");

  BaselineArgs bl;
  auto* b = app.add_subcommand("baseline", "Evaluate plain RANSAC");
  b->add_option("--data", bl.data, "Dataset")->required();
  b->add_option("--iters", bl.iters, "RANSAC iterations")->required();
  b->add_option("--seed", bl.seed, "RANSAC seed")->capture_default_str();
  b->add_option("--report", bl.report, "Write the JSON report here");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    const auto subs = app.get_subcommands();
    err << "error: " << ex.what() << "\n\n" << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  try {
    if (g->parsed()) return do_generate(gen, out);
    if (t->parsed()) return do_train(tr, out);
    if (e->parsed()) return do_eval(ev, out);
    return do_baseline(bl, out);
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitData;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitData;
  }
}

}  // namespace fnnet::cli
