#include "mattekit/cli.hpp"

#include "mattekit/compositing.hpp"
#include "mattekit/guided_filter.hpp"
#include "mattekit/io/checkpoint.hpp"
#include "mattekit/io/config.hpp"
#include "mattekit/io/dataset_io.hpp"
#include "mattekit/io/png.hpp"
#include "mattekit/io/report.hpp"
#include "mattekit/io/run_log.hpp"
#include "mattekit/model.hpp"
#include "mattekit/sweep.hpp"
#include "mattekit/training.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

namespace mattekit {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string checkpoint;
  std::string refine;
  std::string d_list;
};

struct Context {
  io::PipelineConfig cfg;
  io::RunLog log;
};

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) {
      throw std::invalid_argument("bad integer '" + item + "' in list '" + text + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

// Resolves config file and flag overrides; opens the run log in the output
// directory (when there is one) and echoes the effective config into it.
Context make_context(const CommonOptions& opt, const std::string& command,
                     const fs::path& log_dir) {
  Context ctx;
  if (!opt.config.empty()) ctx.cfg = io::load_config(opt.config);
  if (opt.seed) ctx.cfg.set_seed(*opt.seed);
  if (!opt.out.empty()) ctx.cfg.paths.out = opt.out;
  if (!opt.checkpoint.empty()) ctx.cfg.paths.checkpoint = opt.checkpoint;
  if (!opt.refine.empty()) ctx.cfg.refine = io::parse_refine(opt.refine);
  if (!opt.d_list.empty()) ctx.cfg.sweep.d_list = parse_int_list(opt.d_list);
  ctx.cfg.validate();
  if (!log_dir.empty()) {
    fs::create_directories(log_dir);
    ctx.log = io::RunLog(log_dir / "run.log.jsonl");
    ctx.log.event("start", {{"command", command},
                            {"config", io::serialize_config(ctx.cfg)}});
  }
  return ctx;
}

const std::string& require_path(const std::string& value, const char* what) {
  if (value.empty()) {
    throw std::invalid_argument(std::string("missing ") + what +
                                " (flag or paths section of the config)");
  }
  return value;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

ModelParams<float> load_model(const io::PipelineConfig& cfg) {
  auto model = build_model<float>(cfg.effective_stage1(), cfg.effective_stage2(),
                                  cfg.seed);
  const auto ckpt = io::load_checkpoint(require_path(cfg.paths.checkpoint, "--checkpoint"),
                                        model.fingerprint());
  io::apply_checkpoint(ckpt, model);
  return model;
}

Predictor model_predictor(std::shared_ptr<const ModelParams<float>> model,
                          const io::RefineConfig& refine) {
  return [model, refine](const Rgb& image, const Trimap& trimap) -> Matte {
    switch (refine.mode) {
      case io::RefineConfig::Mode::kNone:
        return stage1_forward(image, trimap, *model);
      case io::RefineConfig::Mode::kStage2:
        return full_forward(image, trimap, *model);
      case io::RefineConfig::Mode::kGuided:
        return guided_filter(image, stage1_forward(image, trimap, *model),
                             refine.guided);
    }
    throw std::logic_error("unknown refine mode");
  };
}

std::string sample_id(std::size_t index) {
  std::ostringstream os;
  os << std::setw(6) << std::setfill('0') << index;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---- commands ---------------------------------------------------------------

struct SynthOptions {
  std::string assets;
  std::string backgrounds;
};

int cmd_synth(const CommonOptions& opt, const SynthOptions& so, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const std::string out_dir = require_path(opt.out.empty() ? "" : opt.out, "--out");
  auto ctx = make_context(opt, "synth", out_dir);
  auto& cfg = ctx.cfg;
  if (!so.assets.empty()) cfg.paths.assets = so.assets;
  if (!so.backgrounds.empty()) cfg.paths.backgrounds = so.backgrounds;
  const auto fgs = io::load_foregrounds(require_path(cfg.paths.assets, "--assets"));
  const auto bgs =
      io::load_backgrounds(require_path(cfg.paths.backgrounds, "--backgrounds"));
  std::vector<std::string> warnings;
  const auto samples = synthesize_dataset(fgs, bgs, cfg.dataset, &warnings);
  for (const auto& w : warnings) ctx.log.warning(w);
  io::write_dataset(out_dir, samples);
  ctx.log.event("done", {{"samples", samples.size()},
                         {"warnings", warnings.size()},
                         {"seconds", seconds_since(start)}});
  out << "synthesized " << samples.size() << " samples into " << out_dir << "\n";
  return 0;
}

struct TrainOptions {
  std::string dataset;
  std::vector<int> steps;
};

int cmd_train(const CommonOptions& opt, const TrainOptions& to, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path out_dir = require_path(opt.out, "--out");
  auto ctx = make_context(opt, "train", out_dir);
  auto& cfg = ctx.cfg;
  if (!to.dataset.empty()) cfg.paths.dataset = to.dataset;
  if (!to.steps.empty()) {
    if (to.steps.size() != 3) throw std::invalid_argument("--steps needs 3 values");
    std::copy(to.steps.begin(), to.steps.end(), cfg.training.steps.begin());
    cfg.training.validate();
  }
  const auto dataset = io::read_dataset(require_path(cfg.paths.dataset, "--dataset"));
  auto model = build_model<float>(cfg.effective_stage1(), cfg.effective_stage2(),
                                  cfg.seed);
  ctx.log.event("model", {{"parameters", model.parameter_count()},
                          {"fingerprint", model.fingerprint()}});
  const auto on_step = [&](const LossRecord& r) {
    ctx.log.event("step", {{"step", r.step},
                           {"phase", phase_name(r.phase)},
                           {"L_alpha", r.alpha},
                           {"L_c", r.compositional},
                           {"L_overall", r.overall}});
  };
  const auto result =
      train(model, dataset, cfg.dataset, cfg.training, cfg.loss, on_step);
  const fs::path ckpt_path =
      cfg.paths.checkpoint.empty() ? out_dir / "model.ckpt" : fs::path(cfg.paths.checkpoint);
  io::save_checkpoint(ckpt_path, io::make_checkpoint(model, &result));
  write_text(out_dir / "loss_history.csv", loss_history_csv(result.history));
  write_text(out_dir / "config.yaml", io::serialize_config(cfg));
  if (result.skipped_samples > 0) {
    ctx.log.warning(std::to_string(result.skipped_samples) +
                    " samples skipped (no unknown pixels after cropping)");
  }
  ctx.log.event("done", {{"steps", result.steps}, {"seconds", seconds_since(start)}});
  out << "trained " << result.steps << " steps; checkpoint " << ckpt_path.string()
      << "\n";
  if (!result.history.empty()) {
    out << "final loss " << result.history.back().overall << "\n";
  }
  return 0;
}

struct InferOptions {
  std::string image;
  std::string trimap;
  std::string dataset;
};

int cmd_infer(const CommonOptions& opt, const InferOptions& io_opt, std::ostream& out) {
  auto ctx = make_context(opt, "infer", {});
  const auto model =
      std::make_shared<const ModelParams<float>>(load_model(ctx.cfg));
  const auto predict = model_predictor(model, ctx.cfg.refine);
  const fs::path target = require_path(opt.out, "--out");
  if (!io_opt.dataset.empty()) {
    // Batch mode: one <sample>.png per dataset sample.
    const auto samples = io::read_dataset(io_opt.dataset);
    fs::create_directories(target);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      io::write_matte(target / (sample_id(i) + ".png"),
                      predict(samples[i].image, samples[i].trimap), 16);
    }
    out << "wrote " << samples.size() << " mattes to " << target.string() << "\n";
    return 0;
  }
  const Rgb image = io::read_rgb(require_path(io_opt.image, "--image"));
  const auto trimap = io::read_trimap(require_path(io_opt.trimap, "--trimap"));
  if (trimap.snapped > 0) {
    out << "warning: " << trimap.snapped << " trimap pixels snapped to {0,128,255}\n";
  }
  require_same_size(image.ch[0], trimap.trimap, "infer");
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  io::write_matte(target, predict(image, trimap.trimap), 16);
  out << "wrote " << target.string() << "\n";
  return 0;
}

struct EvalOptions {
  std::string pred;
  std::string gt;
  std::string trimaps;
  std::string dataset;
};

int cmd_eval(const CommonOptions& opt, const EvalOptions& eo, std::ostream& out) {
  const fs::path out_dir = require_path(opt.out, "--out");
  auto ctx = make_context(opt, "eval", out_dir);
  struct Item {
    std::string id;
    fs::path pred, gt, trimap;
  };
  std::vector<Item> items;
  const fs::path pred_dir = require_path(eo.pred, "--pred");
  if (!eo.dataset.empty()) {
    const fs::path ds = eo.dataset;
    const auto count = io::read_dataset(ds).size();
    for (std::size_t i = 0; i < count; ++i) {
      const std::string id = sample_id(i);
      items.push_back({id, pred_dir / (id + ".png"), ds / id / "alpha.png",
                       ds / id / "trimap.png"});
    }
  } else {
    const fs::path gt_dir = require_path(eo.gt, "--gt or --dataset");
    const fs::path tri_dir = require_path(eo.trimaps, "--trimaps");
    std::vector<fs::path> gts;
    for (const auto& e : fs::directory_iterator(gt_dir)) {
      if (e.path().extension() == ".png") gts.push_back(e.path());
    }
    std::sort(gts.begin(), gts.end());
    for (const auto& g : gts) {
      const std::string name = g.filename().string();
      items.push_back({g.stem().string(), pred_dir / name, g, tri_dir / name});
    }
  }
  if (items.empty()) throw std::invalid_argument("eval: nothing to evaluate");
  MetricsReport report;
  report.params = ctx.cfg.sweep.metrics;
  for (const auto& item : items) {
    MetricsRow row;
    row.image_id = item.id;
    try {
      const Matte pred = io::read_matte(item.pred);
      const Matte gt = io::read_matte(item.gt);
      const auto trimap = io::read_trimap(item.trimap);
      row.values = evaluate_all(pred, gt, unknown_mask(trimap.trimap), report.params);
    } catch (const std::exception& e) {
      row.missing = true;
      row.error = e.what();
      report.flags.push_back(item.id + ": " + e.what());
      ctx.log.warning(item.id + ": " + e.what());
    }
    report.rows.push_back(std::move(row));
  }
  append_aggregate(report, std::nullopt);
  io::write_report(out_dir, report);
  const auto& mean = report.aggregates.back().values;
  out << "mean SAD " << mean.sad.kilo << "k  MSE " << mean.mse << "  grad "
      << mean.gradient << "  conn " << mean.connectivity << "\n";
  return report.flags.empty() ? 0 : 1;
}

struct SweepOptions {
  std::string dataset;
  bool baseline = false;
};

int cmd_sweep(const CommonOptions& opt, const SweepOptions& so, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const fs::path out_dir = require_path(opt.out, "--out");
  auto ctx = make_context(opt, "sweep", out_dir);
  auto& cfg = ctx.cfg;
  if (!so.dataset.empty()) cfg.paths.dataset = so.dataset;
  const auto dataset = io::read_dataset(require_path(cfg.paths.dataset, "--dataset"));
  Predictor predictor;
  if (so.baseline) {
    predictor = trimap_copy_predictor();
  } else {
    predictor = model_predictor(
        std::make_shared<const ModelParams<float>>(load_model(cfg)), cfg.refine);
  }
  const auto report = trimap_sweep(predictor, dataset, cfg.sweep);
  io::write_report(out_dir, report);
  for (const auto& f : report.flags) ctx.log.warning(f);
  ctx.log.event("done", {{"seconds", seconds_since(start)}});
  for (const auto& agg : report.aggregates) {
    out << "d=" << agg.dilation.value_or(0) << "  SAD " << agg.values.sad.kilo
        << "k  MSE " << agg.values.mse << "\n";
  }
  return 0;
}

int cmd_inspect(const CommonOptions& opt, std::ostream& out) {
  auto ctx = make_context(opt, "inspect", {});
  if (opt.checkpoint.empty()) {
    out << io::serialize_config(ctx.cfg);
    return 0;
  }
  const auto ckpt = io::load_checkpoint(opt.checkpoint);
  out << "version " << ckpt.version << "\nfingerprint " << std::hex
      << ckpt.fingerprint << std::dec << "\nphase " << phase_name(ckpt.phase)
      << "\nstep " << ckpt.train_step << "\nadam_step " << ckpt.adam_step << "\n";
  for (const auto& [name, t] : ckpt.tensors) {
    out << name << " " << t.shape().str() << "\n";
  }
  return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"Two-stage deep image matting pipeline", "mattekit"};
  app.require_subcommand(1);

  CommonOptions opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "YAML pipeline config");
    sub->add_option("--seed", opt.seed, "Global seed (overrides the config)");
    sub->add_option("--out", opt.out, "Output directory or file");
    sub->add_option("--checkpoint", opt.checkpoint, "Model checkpoint");
    sub->add_option("--refine", opt.refine, "none | stage2 | guided:r=R,eps=E");
    sub->add_option("--d-list", opt.d_list, "Comma-separated trimap dilations");
  };

  SynthOptions synth_opt;
  auto* synth = app.add_subcommand("synth", "Composite foregrounds onto backgrounds");
  add_common(synth);
  synth->add_option("--assets", synth_opt.assets, "Directory of <id>_fg/_alpha PNGs");
  synth->add_option("--backgrounds", synth_opt.backgrounds, "Directory of background PNGs");

  TrainOptions train_opt;
  auto* train_cmd = app.add_subcommand("train", "Train both stages on a dataset");
  add_common(train_cmd);
  train_cmd->add_option("--dataset", train_opt.dataset, "Synthesized dataset directory");
  train_cmd->add_option("--steps", train_opt.steps, "Step budget per phase (3 values)")
      ->delimiter(',');

  InferOptions infer_opt;
  auto* infer = app.add_subcommand("infer", "Predict an alpha matte");
  add_common(infer);
  infer->add_option("--image", infer_opt.image, "RGB image");
  infer->add_option("--trimap", infer_opt.trimap, "Trimap PNG {0,128,255}");
  infer->add_option("--dataset", infer_opt.dataset, "Predict every sample of a dataset");

  EvalOptions eval_opt;
  auto* eval = app.add_subcommand("eval", "Score predicted mattes");
  add_common(eval);
  eval->add_option("--pred", eval_opt.pred, "Directory of predicted mattes");
  eval->add_option("--gt", eval_opt.gt, "Directory of ground-truth mattes");
  eval->add_option("--trimaps", eval_opt.trimaps, "Directory of trimaps");
  eval->add_option("--dataset", eval_opt.dataset, "Dataset directory (gt + trimaps)");

  SweepOptions sweep_opt;
  auto* sweep = app.add_subcommand("sweep", "Metrics across trimap dilations");
  add_common(sweep);
  sweep->add_option("--dataset", sweep_opt.dataset, "Dataset directory");
  sweep->add_flag("--baseline", sweep_opt.baseline, "Score the trimap-copy baseline");

  auto* inspect = app.add_subcommand("inspect", "Print a checkpoint or the effective config");
  add_common(inspect);

  // CLI11 wants argv-style input.
  std::vector<const char*> argv{"mattekit"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*synth) return cmd_synth(opt, synth_opt, out);
    if (*train_cmd) return cmd_train(opt, train_opt, out);
    if (*infer) return cmd_infer(opt, infer_opt, out);
    if (*eval) return cmd_eval(opt, eval_opt, out);
    if (*sweep) return cmd_sweep(opt, sweep_opt, out);
    if (*inspect) return cmd_inspect(opt, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace mattekit
