#include <cstring>
#include <fstream>

#include "doctest.h"
#include "donn/checkpoint.hpp"
#include "test_support.hpp"

using namespace donn;
using namespace donn::testing;

namespace {

bool same_theta(const DonnModel& a, const DonnModel& b) {
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    for (std::size_t l = 0; l < a.layer_count(); ++l) {
      if (a.channel(c).mask(l).theta != b.channel(c).mask(l).theta) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("checkpoint round trip is bit exact") {
  auto cfg = small_config(8, 4, {{1, 4}}, 0.02, 0.03, 1);
  cfg.preset = "custom";
  cfg.seed = 99;
  cfg.transfer = TransferFunction::sampled_impulse;
  cfg.encoding = AmplitudeEncoding::sqrt;
  const auto model = init_model(cfg);
  const auto bytes = serialize_checkpoint(model, 17);

  CHECK(bytes.substr(0, 8) == "DONNCKPT");
  const auto back = parse_checkpoint(bytes);
  CHECK(back.epoch == 17);
  CHECK(back.model.config() == model.config());
  CHECK(same_theta(back.model, model));
  CHECK(serialize_checkpoint(back.model, 17) == bytes);
}

TEST_CASE("checkpoint payload layout") {
  auto model = init_model(small_config(2, 2));
  model.channel(1).theta(1)[3] = 1.5;
  const auto bytes = serialize_checkpoint(model, 0);
  std::uint64_t header_len = 0;
  for (int i = 0; i < 8; ++i) header_len |= std::uint64_t(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  const std::size_t payload = 16 + header_len;
  CHECK(bytes.size() == payload + 3 * 2 * 4 * 8);
  const auto header = nlohmann::json::parse(bytes.substr(16, header_len));
  CHECK(header.at("layers") == 2);
  CHECK(header.at("grid").at("side_px") == 2);
  // Channel G (index 1), layer 2, pixel 3: offset (1*2 + 1)*4 + 3 values.
  const std::size_t at = payload + ((1 * 2 + 1) * 4 + 3) * 8;
  double v = 0.0;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  std::memcpy(&v, &bits, 8);
  CHECK(v == 1.5);
}

TEST_CASE("checkpoint rejects corrupt input") {
  const auto model = init_model(small_config(4, 2));
  const auto bytes = serialize_checkpoint(model, 1);
  CHECK_THROWS_AS(parse_checkpoint("NOTACKPT"), ValidationError);
  CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, bytes.size() - 8)), ValidationError);
  CHECK_THROWS_AS(parse_checkpoint(bytes + std::string(8, '\0')), ValidationError);

  // Header claims a larger grid than the payload carries.
  std::uint64_t header_len = 0;
  for (int i = 0; i < 8; ++i) header_len |= std::uint64_t(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  auto header = nlohmann::json::parse(bytes.substr(16, header_len));
  header["grid"]["side_px"] = 5;
  const std::string text = header.dump();
  std::string forged = "DONNCKPT";
  for (int i = 0; i < 8; ++i) forged.push_back(static_cast<char>((text.size() >> (8 * i)) & 0xff));
  forged += text;
  forged += bytes.substr(16 + header_len);
  CHECK_THROWS_AS(parse_checkpoint(forged), ValidationError);
}

TEST_CASE("checkpoint files") {
  const auto dir = scratch_dir("checkpoint");
  const auto model = init_model(small_config(8, 3, {{1, 3}}));
  save_checkpoint(dir / "a.donn", model, 5);
  const auto back = load_checkpoint(dir / "a.donn");
  CHECK(back.epoch == 5);
  CHECK(same_theta(back.model, model));
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.donn"), IoError);
}
