#include "donn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace donn {
namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_u64(std::string_view in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return v;
}

const char* encoding_name(AmplitudeEncoding e) {
  return e == AmplitudeEncoding::sqrt ? "sqrt" : "linear";
}

AmplitudeEncoding encoding_from_name(const std::string& s) {
  if (s == "linear") return AmplitudeEncoding::linear;
  if (s == "sqrt") return AmplitudeEncoding::sqrt;
  throw ValidationError("unknown amplitude encoding '" + s + "'");
}

}  // namespace

nlohmann::json model_config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["preset"] = c.preset;
  j["grid"] = {{"side_px", c.grid.side_px}, {"pitch_m", c.grid.pitch_m}, {"wavelength_m", c.grid.wavelength_m}};
  j["channel_wavelengths_m"] = c.channel_wavelengths_m ? nlohmann::json(*c.channel_wavelengths_m)
                                                       : nlohmann::json(nullptr);
  j["layers"] = c.layers;
  auto skips = nlohmann::json::array();
  for (const auto& s : c.skips) skips.push_back({s.from_layer, s.to_layer});
  j["skips"] = skips;
  j["z_m"] = c.z_m;
  j["detector_z_m"] = c.detector_z_m;
  j["pad_factor"] = c.pad_factor;
  j["transfer"] = to_string(c.transfer);
  j["encoding"] = encoding_name(c.encoding);
  j["seed"] = c.seed;
  return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.preset = j.at("preset").get<std::string>();
    const auto& g = j.at("grid");
    c.grid = GridSpec{g.at("side_px").get<std::size_t>(), g.at("pitch_m").get<double>(),
                      g.at("wavelength_m").get<double>()};
    if (j.contains("channel_wavelengths_m") && !j["channel_wavelengths_m"].is_null()) {
      c.channel_wavelengths_m = j["channel_wavelengths_m"].get<std::array<double, kChannelCount>>();
    }
    c.layers = j.at("layers").get<std::size_t>();
    for (const auto& s : j.at("skips")) c.skips.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
    c.z_m = j.at("z_m").get<double>();
    c.detector_z_m = j.at("detector_z_m").get<double>();
    c.pad_factor = j.at("pad_factor").get<int>();
    c.transfer = transfer_function_from_string(j.at("transfer").get<std::string>());
    c.encoding = encoding_from_name(j.at("encoding").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model config: ") + e.what());
  }
}

std::string serialize_checkpoint(const DonnModel& model, int epoch) {
  const auto& cfg = model.config();
  const std::size_t values = kChannelCount * cfg.layers * cfg.grid.pixels();
  nlohmann::json header = model_config_to_json(cfg);
  header["format_version"] = kCheckpointFormatVersion;
  header["epoch"] = epoch;
  header["payload"] = {{"dtype", "float64-le"},
                       {"order", "channel(R,G,B), layer, row-major"},
                       {"values", values}};
  const std::string text = header.dump(2);

  std::string out(kCheckpointMagic);
  put_u64(out, text.size());
  out += text;
  out.reserve(out.size() + values * 8);
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    for (const auto& mask : model.channel(c).masks()) {
      for (double t : mask.theta) put_u64(out, std::bit_cast<std::uint64_t>(t));
    }
  }
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kCheckpointMagic.size() + 8 || bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw ValidationError("not a checkpoint (bad magic)");
  }
  const std::uint64_t header_len = get_u64(bytes, kCheckpointMagic.size());
  const std::size_t header_pos = kCheckpointMagic.size() + 8;
  if (header_len > bytes.size() - header_pos) throw ValidationError("checkpoint header truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(header_pos, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint header: ") + e.what());
  }
  if (header.value("format_version", 0) != kCheckpointFormatVersion) {
    throw ValidationError("unsupported checkpoint format version");
  }
  ModelConfig cfg = model_config_from_json(header);
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw ValidationError(std::string("checkpoint header: ") + e.what());
  }

  const std::size_t payload_pos = header_pos + header_len;
  const std::size_t payload_bytes = bytes.size() - payload_pos;
  const std::size_t per_mask = cfg.grid.pixels();
  const std::size_t expected = kChannelCount * cfg.layers * per_mask;
  const std::size_t declared = header.at("payload").at("values").get<std::size_t>();
  if (declared != expected || payload_bytes != expected * 8) {
    std::ostringstream os;
    os << "checkpoint payload has " << payload_bytes << " bytes; header grid " << cfg.grid.side_px
       << "^2 x " << cfg.layers << " layers x 3 channels needs " << expected * 8;
    throw ValidationError(os.str());
  }

  DonnModel::MaskSet masks;
  std::size_t pos = payload_pos;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const GridSpec g = cfg.channel_grid(c);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      PhaseMask m = PhaseMask::zeros(g);
      for (auto& t : m.theta) {
        t = std::bit_cast<double>(get_u64(bytes, pos));
        pos += 8;
      }
      masks[c].push_back(std::move(m));
    }
  }
  return Checkpoint{DonnModel(std::move(cfg), std::move(masks)), header.at("epoch").get<int>()};
}

void save_checkpoint(const std::filesystem::path& path, const DonnModel& model, int epoch) {
  const std::string bytes = serialize_checkpoint(model, epoch);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace donn
