#include <gtest/gtest.h>

#include <filesystem>

#include "cernet/checkpoint.hpp"
#include "cernet/errors.hpp"
#include "support/fixtures.hpp"

using namespace cernet;

TEST(Checkpoint, RoundTripIsValueExactForBothPolicies) {
  for (auto policy : {TopdownSource::PriorT, TopdownSource::PosteriorTMinus1}) {
    const auto cfg = cernet::testing::tiny_config(policy);
    const Checkpoint ck{cfg, cernet::testing::random_params(cfg, 31)};
    const auto path = std::filesystem::temp_directory_path() / "cernet_test_ck.json";
    save_checkpoint(ck, path);
    const Checkpoint back = load_checkpoint(path);
    EXPECT_TRUE(back == ck);
    EXPECT_EQ(checkpoint_to_json(back), checkpoint_to_json(ck));
    std::filesystem::remove(path);
  }
}

TEST(Checkpoint, PresetRoundTrip) {
  const auto cfg = preset("MultiStandard", 26, 3);
  const Checkpoint ck{cfg, NetworkParams::random_init(cfg, 5)};
  EXPECT_TRUE(checkpoint_from_json(checkpoint_to_json(ck)) == ck);
}

TEST(Checkpoint, ParseErrorsNameTheField) {
  const auto cfg = cernet::testing::tiny_config();
  const Checkpoint ck{cfg, NetworkParams::zeros(cfg)};
  auto doc = checkpoint_to_json(ck);

  auto expect_field = [](const std::string& text, const std::string& field) {
    try {
      checkpoint_from_json(text);
      FAIL() << "expected ParseError for " << field;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.field()).find(field), std::string::npos) << e.field();
    }
  };
  expect_field(R"({"config":{}})", "format_version");
  std::string wrong_version = doc;
  wrong_version.replace(wrong_version.find("\"format_version\":1"), 18, "\"format_version\":9");
  expect_field(wrong_version, "format_version");
  std::string bad_policy = doc;
  bad_policy.replace(bad_policy.find("prior_t"), 7, "sideways");
  expect_field(bad_policy, "topdown_source");
  std::string short_bias = doc;
  short_bias.replace(short_bias.find("\"b_o\":[0.0,0.0]"), 15, "\"b_o\":[0.0]");
  expect_field(short_bias, "b_o");
  EXPECT_THROW(checkpoint_from_json("{not json"), ParseError);
}

TEST(Checkpoint, MissingFileIsArgumentError) {
  EXPECT_THROW(load_checkpoint("/nonexistent/cernet.json"), ArgumentError);
}
