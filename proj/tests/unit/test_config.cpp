#include <gtest/gtest.h>

#include "ttrnn/config.hpp"
#include "ttrnn/error.hpp"

using namespace ttrnn;

namespace {

const char* kTTGru = R"(
# row MNIST, TT-GRU
task = mnist_row
model = gru
tt = true
hidden_modes = 10x10
input_modes = 4x8
rank = 3
projection = 32
baseline_hidden = 256
)";

void expect_config_error(const std::string& text, const std::string& field) {
  try {
    TrainConfig::parse(text);
    FAIL() << "accepted: " << text;
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(KeyValues, CommentsWhitespaceAndDuplicates) {
  const auto kv = parse_key_values("a = 1 # note\n\n  b=two words \n# c = 3\n");
  EXPECT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b"), "two words");
  EXPECT_THROW(parse_key_values("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(parse_key_values("just text\n"), ConfigError);
}

TEST(TrainConfig, ParsesAndDerivesHidden) {
  const TrainConfig c = TrainConfig::parse(kTTGru);
  EXPECT_EQ(c.hidden, 100u);
  EXPECT_EQ(c.cell_topology().name(), "TT-GRU-H10x10-R3");
  EXPECT_EQ(c.baseline_topology().name(), "GRU-H256");
  EXPECT_EQ(c.model_shape().raw_input, 28u);
  EXPECT_EQ(c.model_shape().outputs, 10u);
}

TEST(TrainConfig, ErrorsNameTheField) {
  expect_config_error(std::string(kTTGru) + "rank = x\n", "rank");
  expect_config_error(std::string(kTTGru) + "colour = red\n", "colour");
  expect_config_error(std::string(kTTGru) + "hidden = 99\n", "hidden");
  expect_config_error("task = mnist_row\ntt = true\nhidden_modes = 10x10\ninput_modes = 4x7\n", "input_modes");
  expect_config_error("task = mnist_row\ntt = true\ninput_modes = 4x8\n", "hidden_modes");
  expect_config_error("task = sudoku\n", "task");
  expect_config_error("tt = false\n", "hidden");
  expect_config_error(std::string(kTTGru) + "lr = -1\n", "lr");
  expect_config_error(std::string(kTTGru) + "hidden_modes = 10xx10\n", "hidden_modes");
}

TEST(TrainConfig, ResolvedIsCanonicalAndReparses) {
  const TrainConfig c = TrainConfig::parse(kTTGru);
  const std::string r = c.resolved();
  EXPECT_NE(r.find("seed = 1\n"), std::string::npos);
  EXPECT_NE(r.find("perm_seed = 8888\n"), std::string::npos);
  EXPECT_NE(r.find("data_seed = 2\n"), std::string::npos);
  EXPECT_EQ(TrainConfig::parse(r).resolved(), r);
  EXPECT_EQ(TrainConfig::parse(r).hash(), c.hash());
  EXPECT_EQ(c.hash().size(), 16u);
  TrainConfig d = c;
  d.seed = 2;
  EXPECT_NE(d.hash(), c.hash());
}

TEST(Sweep, GridParsing) {
  const SweepConfig s = sweep_from_keys({{"family", "dense"}, {"sizes", "1024..8192"}, {"batch", "4"}});
  EXPECT_EQ(s.family, LayerFamily::Dense);
  EXPECT_EQ(s.sizes, (std::vector<std::size_t>{1024, 2048, 4096, 8192}));
  EXPECT_EQ(sweep_from_keys({{"sizes", "64, 128"}}).sizes, (std::vector<std::size_t>{64, 128}));
  EXPECT_THROW(sweep_from_keys({{"sizes", "64,,128"}}), ConfigError);
  EXPECT_THROW(sweep_from_keys({{"sizes", "8..2"}}), ConfigError);
  EXPECT_THROW(sweep_from_keys({}), ConfigError);
  EXPECT_THROW(sweep_from_keys({{"sizes", "64"}, {"family", "cnn"}}), ConfigError);
  EXPECT_THROW(sweep_from_keys({{"sizes", "64"}, {"repetitions", "19"}}), ConfigError);
  EXPECT_THROW(sweep_from_keys({{"sizes", "64"}, {"warmup", "2"}}), ConfigError);
}
