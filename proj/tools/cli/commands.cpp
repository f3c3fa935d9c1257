#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>

#include "CLI11.hpp"
#include "cli.hpp"
#include "donn/checkpoint.hpp"
#include "donn/grad.hpp"
#include "donn/log.hpp"
#include "donn/png_io.hpp"

namespace donn::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Failure already reported to the user; carries the exit code.
struct CommandFailure {
  int code;
};

class WarningRedirect {
 public:
  explicit WarningRedirect(std::ostream& err)
      : previous_(set_warning_handler([&err](const std::string& msg) { err << "warning: " << msg << '\n'; })) {}
  ~WarningRedirect() { set_warning_handler(previous_); }
  WarningRedirect(const WarningRedirect&) = delete;
  WarningRedirect& operator=(const WarningRedirect&) = delete;

 private:
  WarningHandler previous_;
};

[[noreturn]] void fail(std::ostream& err, int code, const std::string& message) {
  err << "error: " << message << '\n';
  throw CommandFailure{code};
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return kExitDataset;
  if (dynamic_cast<const IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const DimensionError*>(&e)) return kExitMismatch;
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const ConfigError*>(&e)) {
    return kExitConfig;
  }
  return kExitFailed;
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + file.string());
}

std::unique_ptr<ManifestDataset> open_dataset(const fs::path& path, std::size_t side, std::ostream& err) {
  DatasetManifest manifest;
  try {
    manifest = load_manifest(path);
  } catch (const Error& e) {
    fail(err, kExitDataset, e.what());
  }
  if (manifest.side_px != side) {
    fail(err, kExitMismatch,
         "dataset " + path.string() + " declares side " + std::to_string(manifest.side_px) +
             " but the model grid is " + std::to_string(side));
  }
  try {
    return std::make_unique<ManifestDataset>(std::move(manifest));
  } catch (const Error& e) {
    fail(err, kExitDataset, e.what());
  }
}

Checkpoint open_checkpoint(const fs::path& path, std::ostream& err) {
  try {
    return load_checkpoint(path);
  } catch (const IoError& e) {
    fail(err, kExitIo, e.what());
  } catch (const Error& e) {
    fail(err, kExitMismatch, e.what());
  }
}

json metrics_json(const SampleMetrics& m) {
  return {{"name", m.name}, {"iou", m.iou}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

json report_json(const EvalReport& r) {
  json rows = json::array();
  for (const auto& s : r.samples) rows.push_back(metrics_json(s));
  return {{"samples", rows},
          {"mean",
           {{"iou", r.mean_iou},
            {"precision", r.mean_precision},
            {"recall", r.mean_recall},
            {"f1", r.mean_f1},
            {"count", r.samples.size()}}}};
}

json reference_json() {
  return {{"note", "published full-scale figures (480x480 systems, 500 epochs); not reproduced at desk scale"},
          {"cityscapes_iou_by_loss",
           {{"rgb_mse", reference::kCityscapesRgbMseIou},
            {"rgb_bce", reference::kCityscapesRgbBceIou},
            {"rgb_dice", reference::kCityscapesRgbDiceIou},
            {"gray_mse", reference::kCityscapesGrayMseIou}}},
          {"cityscapes_12_layer",
           {{"iou", reference::kCityscapesIou},
            {"f1", reference::kCityscapesF1},
            {"precision", reference::kCityscapesPrecision},
            {"recall", reference::kCityscapesRecall}}},
          {"indoor_track_iou", reference::kIndoorTrackIou}};
}

// ---------------------------------------------------------------------------- train

struct TrainArgs {
  std::string config;
  int epochs = 0;
  std::size_t batch_size = 0;
  double learning_rate = 0.0;
  std::string loss;
  double pos_weight = 1.0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string preset;
  std::size_t side = 0;
  double z = 0.0;
  std::string train_data;
  std::string eval_data;
  std::string output;
  int checkpoint_every = 0;
  bool dry_run = false;
  bool force = false;
  std::map<std::string, CLI::Option*> given;

  bool has(const std::string& name) const {
    auto it = given.find(name);
    return it != given.end() && it->second->count() > 0;
  }
};

json apply_overrides(json doc, const TrainArgs& a) {
  auto section = [&](const char* name) -> json& {
    if (!doc.contains(name) || doc[name].is_null()) doc[name] = json::object();
    return doc[name];
  };
  if (a.has("epochs")) section("training")["epochs"] = a.epochs;
  if (a.has("batch-size")) section("training")["batch_size"] = a.batch_size;
  if (a.has("seed")) section("training")["seed"] = a.seed;
  if (a.has("workers")) section("training")["workers"] = a.workers;
  if (a.has("checkpoint-every")) section("training")["checkpoint_every"] = a.checkpoint_every;
  if (a.has("lr")) section("optimizer")["learning_rate"] = a.learning_rate;
  if (a.has("loss")) section("loss")["kind"] = a.loss;
  if (a.has("pos-weight")) section("loss")["pos_weight"] = a.pos_weight;
  if (a.has("preset")) section("model")["preset"] = a.preset;
  if (a.has("side")) section("model")["side_px"] = a.side;
  if (a.has("z")) {
    section("model")["z_m"] = a.z;
    if (!section("model").contains("detector_z_m")) section("model")["detector_z_m"] = a.z;
  }
  if (a.has("train-data")) section("data")["train"] = fs::absolute(a.train_data).string();
  if (a.has("eval-data")) section("data")["eval"] = fs::absolute(a.eval_data).string();
  if (a.has("output")) doc["output_dir"] = fs::absolute(a.output).string();
  return doc;
}

RunConfig resolve_train_config(const TrainArgs& a, std::ostream& err) {
  json doc = json::object();
  fs::path base = fs::current_path();
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) fail(err, kExitConfig, "cannot read config " + a.config);
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      fail(err, kExitConfig, a.config + ": " + e.what());
    }
    base = fs::absolute(a.config).parent_path();
  }
  try {
    RunConfig rc = run_config_from_json(apply_overrides(std::move(doc), a), base);
    if (rc.output_dir.empty()) rc.output_dir = a.config.empty() ? fs::path("run") : fs::path(a.config).stem();
    rc.output_dir = resolve_output_dir(rc.output_dir);
    if (rc.train_data.empty()) throw ConfigError("data.train is required");
    return rc;
  } catch (const ConfigError& e) {
    fail(err, kExitConfig, e.what());
  }
}

void save_visualizations(const fs::path& dir, const DonnModel& model, const SampleSource& data, std::size_t count,
                         BinarizeMethod binarize) {
  if (count == 0) return;
  fs::create_directories(dir);
  for (std::size_t i = 0; i < std::min(count, data.size()); ++i) {
    const Sample s = data.get(i);
    const auto detector = forward_rgb(encode_sample(s, model), model);
    std::ostringstream name;
    name << "sample_" << std::setw(4) << std::setfill('0') << i << ".png";
    write_panel(dir / name.str(), s, detector, binarize_output(detector, binarize));
  }
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig rc = resolve_train_config(a, err);
  const std::size_t side = rc.model.grid.side_px;
  auto train = open_dataset(rc.train_data, side, err);
  std::unique_ptr<ManifestDataset> held_out;
  if (!rc.eval_data.empty()) held_out = open_dataset(rc.eval_data, side, err);
  const SampleSource& eval_set = held_out ? static_cast<const SampleSource&>(*held_out) : *train;

  DonnModel model = init_model(rc.model);
  const json resolved = run_config_to_json(rc);

  if (a.dry_run) {
    const Sample s = train->get(0);
    const auto detector = forward_rgb(encode_sample(s, model), model);
    out << resolved.dump(2) << '\n';
    out << "dry run: " << rc.model.preset << ", " << side << "x" << side << " grid, " << model.layer_count()
        << " layers x 3 channels, " << train->size() << " training samples";
    if (held_out) out << ", " << held_out->size() << " evaluation samples";
    out << "\nforward pass ok: detector power " << detector.sum() << ", peak " << detector.max() << '\n';
    out << "would write run to " << rc.output_dir.string() << '\n';
    return kExitOk;
  }

  const fs::path dir = rc.output_dir;
  if (fs::exists(dir / "train_log.jsonl") && !a.force) {
    fail(err, kExitConfig, dir.string() + " already holds a run; pass --force to overwrite it");
  }
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    fail(err, kExitIo, e.what());
  }
  write_text(dir / "resolved_config.json", resolved.dump(2) + "\n");

  std::ofstream log(dir / "train_log.jsonl", std::ios::binary);
  std::ofstream timing(dir / "timing.jsonl", std::ios::binary);
  if (!log || !timing) fail(err, kExitIo, "cannot write logs under " + dir.string());

  TrainOptions options;
  options.batch_size = rc.batch_size;
  options.loss = rc.loss;
  options.seed = rc.seed;
  options.workers = rc.workers;
  options.binarize = rc.binarize;
  OptimState state = OptimState::create(model, rc.optimizer);

  const auto start = std::chrono::steady_clock::now();
  double best = -1.0;
  for (int e = 0; e < rc.epochs; ++e) {
    const EpochStats stats = train_epoch(model, *train, options, state, e);
    const EvalReport report = evaluate(model, eval_set, rc.binarize, rc.workers);
    const int done = e + 1;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    log << json{{"epoch", done},
                {"loss", stats.mean_loss},
                {"train_iou", stats.train_iou},
                {"eval_iou", report.mean_iou}}
               .dump()
        << '\n';
    log.flush();
    timing << json{{"epoch", done}, {"wall_s", wall}}.dump() << '\n';
    timing.flush();
    err << "epoch " << done << "/" << rc.epochs << "  loss " << stats.mean_loss << "  train IoU "
        << stats.train_iou << "  eval IoU " << report.mean_iou << "  (" << std::fixed << std::setprecision(1)
        << wall << " s)" << std::defaultfloat << std::setprecision(6) << '\n';

    if (done % rc.checkpoint_every == 0) {
      std::ostringstream name;
      name << "ckpt_" << std::setw(4) << std::setfill('0') << done << ".donn";
      save_checkpoint(dir / name.str(), model, done);
    }
    if (report.mean_iou > best) {
      best = report.mean_iou;
      save_checkpoint(dir / "best.donn", model, done);
    }
  }
  save_checkpoint(dir / "final.donn", model, rc.epochs);
  if (!log || !timing) fail(err, kExitIo, "failed writing logs under " + dir.string());

  const EvalReport final_report = evaluate(model, eval_set, rc.binarize, rc.workers);
  json metrics = report_json(final_report);
  metrics["epochs"] = rc.epochs;
  metrics["best_eval_iou"] = best;
  metrics["reference"] = reference_json();
  write_text(dir / "metrics.json", metrics.dump(2) + "\n");
  save_visualizations(dir / "vis", model, eval_set, rc.visualizations, rc.binarize);

  out << dir.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------- eval

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string out_file;
  std::string binarize = "half";
  std::size_t workers = 1;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const Checkpoint ckpt = open_checkpoint(a.checkpoint, err);
  BinarizeMethod method;
  try {
    method = binarize_method_from_string(a.binarize);
  } catch (const UsageError& e) {
    fail(err, kExitConfig, e.what());
  }
  auto data = open_dataset(a.data, ckpt.model.grid().side_px, err);
  const EvalReport report = evaluate(ckpt.model, *data, method, a.workers);

  json doc = report_json(report);
  doc["checkpoint"] = a.checkpoint;
  doc["checkpoint_epoch"] = ckpt.epoch;
  doc["dataset"] = a.data;
  doc["binarize"] = to_string(method);
  doc["reference"] = reference_json();
  const std::string text = doc.dump(2) + "\n";
  if (a.out_file.empty()) {
    out << text;
  } else {
    write_text(a.out_file, text);
    out << "mean IoU " << report.mean_iou << " over " << report.samples.size() << " samples -> " << a.out_file
        << '\n';
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------- infer

struct InferArgs {
  std::string checkpoint;
  std::vector<std::string> images;
  std::string out_dir;
  std::string binarize = "half";
};

int cmd_infer(const InferArgs& a, std::ostream& out, std::ostream& err) {
  const Checkpoint ckpt = open_checkpoint(a.checkpoint, err);
  BinarizeMethod method;
  try {
    method = binarize_method_from_string(a.binarize);
  } catch (const UsageError& e) {
    fail(err, kExitConfig, e.what());
  }
  const auto& model = ckpt.model;
  const std::size_t side = model.grid().side_px;
  try {
    fs::create_directories(a.out_dir);
  } catch (const fs::filesystem_error& e) {
    fail(err, kExitIo, e.what());
  }

  int failures = 0;
  for (const auto& image : a.images) {
    try {
      const auto planes = load_rgb_planes(image, side);
      const auto detector = forward_rgb(encode_rgb(planes[0], planes[1], planes[2], model), model);
      const std::string stem = fs::path(image).stem().string();
      const fs::path raw = fs::path(a.out_dir) / (stem + "_raw.png");
      const fs::path bin = fs::path(a.out_dir) / (stem + "_bin.png");
      write_intensity_png(raw, detector);
      write_mask_png(bin, binarize_output(detector, method));
      out << image << " -> " << raw.string() << ", " << bin.string() << '\n';
    } catch (const Error& e) {
      err << "error: " << image << ": " << e.what() << '\n';
      ++failures;
    }
  }
  return failures == 0 ? kExitOk : kExitIo;
}

// ---------------------------------------------------------------------------- propagate

struct PropagateArgs {
  std::string image;
  double z = 0.0;
  int steps = 1;
  int pad = 2;
  std::string mode = "cropped";
  double pitch = kDefaultPitch;
  double wavelength = kDefaultWavelength;
  std::string transfer = "analytic";
  std::string out_dir;
};

int cmd_propagate(const PropagateArgs& a, std::ostream& out, std::ostream& err) {
  if (!(a.z > 0.0) || !std::isfinite(a.z)) fail(err, kExitConfig, "--z must be a positive distance in metres");
  if (a.steps < 0) fail(err, kExitConfig, "--steps must be >= 0");
  if (a.pad != 1 && a.pad != 2) fail(err, kExitConfig, "--pad must be 1 or 2");
  if (a.mode != "cropped" && a.mode != "padded") fail(err, kExitConfig, "--mode must be cropped or padded");
  if (!(a.pitch > 0.0) || !(a.wavelength > 0.0)) fail(err, kExitConfig, "--pitch and --wavelength must be > 0");
  TransferFunction kind;
  try {
    kind = transfer_function_from_string(a.transfer);
  } catch (const Error& e) {
    fail(err, kExitConfig, e.what());
  }

  std::size_t side = 0;
  std::array<RealImage, 3> planes;
  try {
    const auto info = probe_png(a.image);
    side = std::min(info.width, info.height);
    planes = load_rgb_planes(a.image, side);
  } catch (const Error& e) {
    fail(err, kExitIo, e.what());
  }
  if (side < 2) fail(err, kExitConfig, "image must be at least 2x2");

  // Pixel values are read as intensity, so the field amplitude is their square root.
  RealImage luminance(side);
  for (std::size_t i = 0; i < luminance.size(); ++i) {
    luminance[i] = std::clamp(0.299 * planes[0][i] + 0.587 * planes[1][i] + 0.114 * planes[2][i], 0.0, 1.0);
  }
  const GridSpec grid = GridSpec::make(side, a.pitch, a.wavelength);
  ComplexField2D field = field_from_amplitude(luminance, grid, AmplitudeEncoding::sqrt);

  std::shared_ptr<const PropagationKernel> kernel;
  if (a.mode == "padded") {
    field = pad_field(field, a.pad);
    kernel = std::make_shared<PropagationKernel>(make_kernel(kind, field.grid(), a.z, 1));
  } else {
    kernel = std::make_shared<PropagationKernel>(make_kernel(kind, grid, a.z, a.pad));
  }

  try {
    fs::create_directories(a.out_dir);
  } catch (const fs::filesystem_error& e) {
    fail(err, kExitIo, e.what());
  }
  auto emit = [&](int step) {
    std::ostringstream name;
    name << "step_" << std::setw(3) << std::setfill('0') << step << ".png";
    write_intensity_png(fs::path(a.out_dir) / name.str(), intensity(field));
    out << "step " << step << "  z " << step * a.z << " m  energy " << std::setprecision(17) << field.energy()
        << std::setprecision(6) << '\n';
  };
  emit(0);
  for (int s = 1; s <= a.steps; ++s) {
    field = propagate(field, *kernel);
    emit(s);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::string config;
  std::string preset = "lane-8";
  std::size_t side = 32;
  std::size_t coords = 20;
  std::string loss = "mse";
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  double z = 0.0;
  bool corrupt = false;
  std::map<std::string, CLI::Option*> given;

  bool has(const std::string& name) const {
    auto it = given.find(name);
    return it != given.end() && it->second->count() > 0;
  }
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
  if (a.coords < 1 || a.coords > kMaxFiniteDiffCoords) {
    fail(err, kExitConfig, "--coords must be between 1 and " + std::to_string(kMaxFiniteDiffCoords));
  }
  ModelConfig cfg;
  LossSpec loss;
  try {
    if (!a.config.empty()) {
      const RunConfig rc = load_run_config(a.config);
      cfg = rc.model;
      loss = rc.loss;
    } else {
      cfg = preset_config(a.preset, a.side);
      loss = LossSpec::parse("mse");
    }
    if (a.has("preset")) cfg = preset_config(a.preset, cfg.grid.side_px);
    if (a.has("side")) cfg.grid.side_px = a.side;
    if (a.has("z")) cfg.z_m = cfg.detector_z_m = a.z;
    if (a.has("loss")) loss = LossSpec::parse(a.loss);
    cfg.seed = a.seed;
    cfg.validate();
  } catch (const std::exception& e) {
    fail(err, kExitConfig, e.what());
  }

  const DonnModel model = init_model(cfg);
  const std::size_t side = cfg.grid.side_px;
  const Sample s = synth_sample(SynthKind::lanes, std::max<std::size_t>(side, 32), a.seed, 0);
  const auto fields =
      encode_rgb(resize_bilinear(s.r, side), resize_bilinear(s.g, side), resize_bilinear(s.b, side), model);
  const BinaryMask gt = resize_nearest(s.gt, side);
  if (loss.auto_pos_weight) loss.pos_weight = balanced_pos_weight(std::span<const BinaryMask>(&gt, 1));

  const auto mode = a.corrupt ? AdjointMode::corrupted : AdjointMode::exact;
  const auto result = backward(model, fields, gt, loss, mode);
  const auto coords = sample_coords(model, a.coords, a.seed + 1);
  const auto numeric = finite_diff_grad(model, fields, gt, loss, coords);

  out << "gradcheck: " << cfg.preset << " " << side << "x" << side << ", " << cfg.layers << " layers, loss "
      << loss.name() << (a.corrupt ? ", corrupted adjoint" : "") << '\n';
  out << "channel layer pixel        adjoint          numeric    rel_error\n";
  double worst = 0.0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double analytic = result.grads.at(coords[i]);
    const double rel = relative_error(analytic, numeric[i], 1e-8);
    worst = std::max(worst, rel);
    out << std::setw(7) << channel_name(coords[i].channel) << std::setw(6) << coords[i].layer + 1 << std::setw(6)
        << coords[i].index << std::setw(15) << std::setprecision(6) << std::scientific << analytic << std::setw(17)
        << numeric[i] << std::setw(13) << std::setprecision(3) << rel << std::defaultfloat << std::setprecision(6)
        << '\n';
  }
  const bool pass = worst < a.tolerance;
  out << "worst relative error " << std::scientific << std::setprecision(3) << worst << " (tolerance "
      << a.tolerance << "): " << (pass ? "PASS" : "FAIL") << std::defaultfloat << std::setprecision(6) << '\n';
  return pass ? kExitOk : kExitFailed;
}

// ---------------------------------------------------------------------------- gen-synth

struct GenArgs {
  std::string kind = "lanes";
  std::size_t count = 0;
  std::size_t side = 64;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string split = "train";
  bool force = false;
};

int cmd_gen_synth(const GenArgs& a, std::ostream& out, std::ostream& err) {
  SynthKind kind;
  try {
    kind = synth_kind_from_string(a.kind);
  } catch (const UsageError& e) {
    fail(err, kExitConfig, e.what());
  }
  if (a.count < 1) fail(err, kExitConfig, "--count must be >= 1");
  if (a.side < 32) fail(err, kExitConfig, "--side must be >= 32");
  if (fs::exists(fs::path(a.out_dir) / kManifestFileName) && !a.force) {
    fail(err, kExitConfig, a.out_dir + " already holds a dataset; pass --force to overwrite it");
  }
  GeneratedDataset ds;
  try {
    ds = gen_synthetic(kind, a.count, a.side, a.seed, a.out_dir, a.split, a.force);
  } catch (const fs::filesystem_error& e) {
    fail(err, kExitIo, e.what());
  } catch (const IoError& e) {
    fail(err, kExitIo, e.what());
  }
  out << ds.manifest_path.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diffractive optical neural network engine", "donn"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train a model from a JSON run config");
  train->add_option("config", ta.config, "Run config (JSON); flags below override its fields");
  ta.given["epochs"] = train->add_option("--epochs", ta.epochs, "Training epochs");
  ta.given["batch-size"] = train->add_option("--batch-size", ta.batch_size, "Samples per optimizer step");
  ta.given["lr"] = train->add_option("--lr", ta.learning_rate, "Learning rate");
  ta.given["loss"] = train->add_option("--loss", ta.loss, "mse | bce | wbce | dice");
  ta.given["pos-weight"] = train->add_option("--pos-weight", ta.pos_weight, "Positive-class weight for bce");
  ta.given["seed"] = train->add_option("--seed", ta.seed, "Initialisation and shuffle seed");
  ta.given["workers"] = train->add_option("--workers", ta.workers, "Worker threads");
  ta.given["preset"] = train->add_option("--preset", ta.preset, "cityscapes-15 | cityscapes-12 | lane-8 | custom");
  ta.given["side"] = train->add_option("--side", ta.side, "Grid side in pixels");
  ta.given["z"] = train->add_option("--z", ta.z, "Layer spacing in metres");
  ta.given["train-data"] = train->add_option("--train-data", ta.train_data, "Training manifest");
  ta.given["eval-data"] = train->add_option("--eval-data", ta.eval_data, "Evaluation manifest");
  ta.given["output"] = train->add_option("--output", ta.output, "Run directory");
  ta.given["checkpoint-every"] = train->add_option("--checkpoint-every", ta.checkpoint_every, "Checkpoint period");
  train->add_flag("--dry-run", ta.dry_run, "Resolve config, check data, run one forward pass and stop");
  train->add_flag("--force", ta.force, "Overwrite an existing run directory");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  eval->add_option("checkpoint", ea.checkpoint, "Checkpoint file")->required();
  eval->add_option("data", ea.data, "Dataset manifest")->required();
  eval->add_option("--out", ea.out_file, "Write the JSON report here instead of stdout");
  eval->add_option("--binarize", ea.binarize, "half | otsu");
  eval->add_option("--workers", ea.workers, "Worker threads");

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "Run a checkpoint on images");
  infer->add_option("checkpoint", ia.checkpoint, "Checkpoint file")->required();
  infer->add_option("images", ia.images, "Input PNG images")->required();
  infer->add_option("--out", ia.out_dir, "Output directory")->required();
  infer->add_option("--binarize", ia.binarize, "half | otsu");

  PropagateArgs pa;
  auto* prop = app.add_subcommand("propagate", "Free-space propagation of an image, step by step");
  prop->add_option("image", pa.image, "Input PNG (RGB is converted to luminance)")->required();
  prop->add_option("--z", pa.z, "Step distance in metres")->required();
  prop->add_option("--steps", pa.steps, "Number of steps");
  prop->add_option("--pad", pa.pad, "Zero-padding factor (1 or 2)");
  prop->add_option("--mode", pa.mode, "cropped: crop after every step; padded: stay on the padded grid");
  prop->add_option("--pitch", pa.pitch, "Pixel pitch in metres");
  prop->add_option("--wavelength", pa.wavelength, "Wavelength in metres");
  prop->add_option("--transfer", pa.transfer, "analytic | sampled");
  prop->add_option("--out", pa.out_dir, "Output directory")->required();

  GradcheckArgs ga;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare adjoint gradients with finite differences");
  gradcheck->add_option("config", ga.config, "Optional run config supplying model and loss");
  ga.given["preset"] = gradcheck->add_option("--preset", ga.preset, "Model preset");
  ga.given["side"] = gradcheck->add_option("--side", ga.side, "Grid side in pixels");
  ga.given["z"] = gradcheck->add_option("--z", ga.z, "Layer spacing in metres");
  ga.given["loss"] = gradcheck->add_option("--loss", ga.loss, "mse | bce | wbce | dice");
  gradcheck->add_option("--coords", ga.coords, "Number of sampled parameters (max 100)");
  gradcheck->add_option("--seed", ga.seed, "Seed for model, sample and coordinates");
  gradcheck->add_option("--tolerance", ga.tolerance, "Maximum relative error");
  gradcheck->add_flag("--corrupt-adjoint", ga.corrupt, "Use a wrong adjoint (negative control)");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "Generate a synthetic dataset");
  gen_cmd->add_option("--kind", gen.kind, "bars | lanes");
  gen_cmd->add_option("--count", gen.count, "Number of samples")->required();
  gen_cmd->add_option("--side", gen.side, "Image side in pixels (>= 32)");
  gen_cmd->add_option("--seed", gen.seed, "Seed");
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--split", gen.split, "Split tag stored in the manifest");
  gen_cmd->add_flag("--force", gen.force, "Overwrite an existing dataset");

  std::vector<std::string> argv_store{"donn"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : argv_store) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  WarningRedirect redirect(err);
  try {
    if (*train) return cmd_train(ta, out, err);
    if (*eval) return cmd_eval(ea, out, err);
    if (*infer) return cmd_infer(ia, out, err);
    if (*prop) return cmd_propagate(pa, out, err);
    if (*gradcheck) return cmd_gradcheck(ga, out, err);
    if (*gen_cmd) return cmd_gen_synth(gen, out, err);
  } catch (const CommandFailure& f) {
    return f.code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitFailed;
}

}  // namespace donn::cli
