#include <cstdlib>
#include <fstream>
#include <set>

#include "cli.hpp"
#include "donn/checkpoint.hpp"

namespace donn::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& target) {
  if (obj.contains(key) && !obj[key].is_null()) target = obj[key].get<T>();
}

fs::path resolve_path(const json& obj, const char* key, const fs::path& base) {
  if (!obj.contains(key) || obj[key].is_null()) return {};
  fs::path p = obj[key].get<std::string>();
  if (p.empty()) return {};
  return p.is_absolute() ? p : fs::absolute(base / p).lexically_normal();
}

ModelConfig model_from_json(const json& m, std::uint64_t seed) {
  require_keys(m, "model",
               {"preset", "side_px", "pitch_m", "wavelength_m", "channel_wavelengths_m", "layers", "skips", "z_m",
                "detector_z_m", "pad_factor", "transfer", "encoding"});
  const std::string preset = m.value("preset", std::string("lane-8"));
  std::optional<std::size_t> side;
  if (m.contains("side_px")) side = m["side_px"].get<std::size_t>();

  ModelConfig cfg;
  if (preset == "custom") {
    if (!side || !m.contains("layers") || !m.contains("skips")) {
      throw ConfigError("preset 'custom' needs model.side_px, model.layers and model.skips");
    }
    cfg.preset = "custom";
    cfg.grid = GridSpec{*side, kDefaultPitch, kDefaultWavelength};
  } else {
    try {
      cfg = preset_config(preset, side);
    } catch (const UsageError& e) {
      throw ConfigError(e.what());
    }
  }
  read(m, "pitch_m", cfg.grid.pitch_m);
  read(m, "wavelength_m", cfg.grid.wavelength_m);
  if (m.contains("channel_wavelengths_m") && !m["channel_wavelengths_m"].is_null()) {
    cfg.channel_wavelengths_m = m["channel_wavelengths_m"].get<std::array<double, kChannelCount>>();
  }
  read(m, "layers", cfg.layers);
  if (m.contains("skips")) {
    cfg.skips.clear();
    for (const auto& s : m["skips"]) {
      if (!s.is_array() || s.size() != 2) throw ConfigError("model.skips entries must be [from, to] pairs");
      cfg.skips.push_back({s[0].get<int>(), s[1].get<int>()});
    }
  }
  read(m, "z_m", cfg.z_m);
  cfg.detector_z_m = cfg.z_m;
  read(m, "detector_z_m", cfg.detector_z_m);
  read(m, "pad_factor", cfg.pad_factor);
  if (m.contains("transfer")) cfg.transfer = transfer_function_from_string(m["transfer"].get<std::string>());
  if (m.contains("encoding")) {
    const auto e = m["encoding"].get<std::string>();
    if (e == "linear") cfg.encoding = AmplitudeEncoding::linear;
    else if (e == "sqrt") cfg.encoding = AmplitudeEncoding::sqrt;
    else throw ConfigError("model.encoding must be linear or sqrt");
  }
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

}  // namespace

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  try {
    require_keys(j, "config", {"model", "loss", "optimizer", "training", "data", "output_dir"});
    RunConfig rc;

    const json training = j.value("training", json::object());
    require_keys(training, "training",
                 {"epochs", "batch_size", "seed", "workers", "checkpoint_every", "binarize", "visualizations"});
    read(training, "epochs", rc.epochs);
    read(training, "batch_size", rc.batch_size);
    read(training, "seed", rc.seed);
    read(training, "workers", rc.workers);
    read(training, "checkpoint_every", rc.checkpoint_every);
    read(training, "visualizations", rc.visualizations);
    if (training.contains("binarize")) rc.binarize = binarize_method_from_string(training["binarize"].get<std::string>());
    if (rc.epochs < 0) throw ConfigError("training.epochs must be >= 0");
    if (rc.batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
    if (rc.workers < 1) throw ConfigError("training.workers must be >= 1");
    if (rc.checkpoint_every < 1) throw ConfigError("training.checkpoint_every must be >= 1");

    rc.model = model_from_json(j.value("model", json::object()), rc.seed);

    const json loss = j.value("loss", json::object());
    require_keys(loss, "loss", {"kind", "pos_weight"});
    rc.loss = LossSpec::parse(loss.value("kind", std::string("mse")), loss.value("pos_weight", 1.0));
    if (!(rc.loss.pos_weight > 0.0)) throw ConfigError("loss.pos_weight must be > 0");

    const json opt = j.value("optimizer", json::object());
    require_keys(opt, "optimizer", {"learning_rate", "beta1", "beta2", "epsilon"});
    read(opt, "learning_rate", rc.optimizer.learning_rate);
    read(opt, "beta1", rc.optimizer.beta1);
    read(opt, "beta2", rc.optimizer.beta2);
    read(opt, "epsilon", rc.optimizer.epsilon);
    if (rc.optimizer.learning_rate < 0.0) throw ConfigError("optimizer.learning_rate must be >= 0");

    const json data = j.value("data", json::object());
    require_keys(data, "data", {"train", "eval"});
    rc.train_data = resolve_path(data, "train", base_dir);
    rc.eval_data = resolve_path(data, "eval", base_dir);

    if (j.contains("output_dir") && !j["output_dir"].is_null()) rc.output_dir = j["output_dir"].get<std::string>();
    return rc;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_run_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  RunConfig rc = run_config_from_json(j, fs::absolute(file).parent_path());
  if (rc.output_dir.empty()) rc.output_dir = file.stem();
  return rc;
}

json run_config_to_json(const RunConfig& rc) {
  const json m = model_config_to_json(rc.model);
  json model = {{"preset", m["preset"]},
                {"side_px", rc.model.grid.side_px},
                {"pitch_m", rc.model.grid.pitch_m},
                {"wavelength_m", rc.model.grid.wavelength_m},
                {"channel_wavelengths_m", m["channel_wavelengths_m"]},
                {"layers", rc.model.layers},
                {"skips", m["skips"]},
                {"z_m", rc.model.z_m},
                {"detector_z_m", rc.model.detector_z_m},
                {"pad_factor", rc.model.pad_factor},
                {"transfer", m["transfer"]},
                {"encoding", m["encoding"]}};
  return {{"model", model},
          {"loss", {{"kind", rc.loss.name()}, {"pos_weight", rc.loss.pos_weight}}},
          {"optimizer",
           {{"learning_rate", rc.optimizer.learning_rate},
            {"beta1", rc.optimizer.beta1},
            {"beta2", rc.optimizer.beta2},
            {"epsilon", rc.optimizer.epsilon}}},
          {"training",
           {{"epochs", rc.epochs},
            {"batch_size", rc.batch_size},
            {"seed", rc.seed},
            {"workers", rc.workers},
            {"checkpoint_every", rc.checkpoint_every},
            {"binarize", to_string(rc.binarize)},
            {"visualizations", rc.visualizations}}},
          {"data", {{"train", rc.train_data.string()}, {"eval", rc.eval_data.string()}}},
          {"output_dir", rc.output_dir.string()}};
}

fs::path resolve_output_dir(const fs::path& requested) {
  if (requested.is_absolute()) return requested;
  const char* root = std::getenv(kOutputRootEnv);
  const fs::path base = (root && *root) ? fs::path(root) : fs::path("runs");
  return fs::absolute(base / requested).lexically_normal();
}

}  // namespace donn::cli
