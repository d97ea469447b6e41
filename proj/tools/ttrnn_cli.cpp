// ttrnn: train, evaluate, inspect and benchmark tensor-train RNNs.
#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "ttrnn/app.hpp"
#include "ttrnn/error.hpp"
#include "ttrnn/kernels.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kData = 2, kNumeric = 3 };

int run(int argc, char** argv) {
  CLI::App app{"Tensor-train compressed recurrent networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ttrnn 1.0");

  std::string train_config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::string> out;
  auto* train = app.add_subcommand("train", "train a model from a key = value config");
  train->add_option("config", train_config, "config file")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "override the model seed");
  train->add_option("--epochs", epochs, "override the epoch count");
  train->add_option("--out", out, "override the output directory");

  std::string eval_ckpt;
  std::string eval_config;
  std::string split = "test";
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--config", eval_config, "config to evaluate with (default: the stored one)");
  eval->add_option("--split", split, "valid or test")->check(CLI::IsMember({"valid", "test"}));

  std::string inspect_ckpt;
  auto* inspect = app.add_subcommand("inspect", "describe a checkpoint");
  inspect->add_option("checkpoint", inspect_ckpt, "checkpoint file")->required();

  std::string bench_config;
  std::optional<std::string> family;
  auto* bench = app.add_subcommand("bench", "time a dense or TT layer over a size sweep");
  bench->add_option("config", bench_config, "sweep file")->required()->check(CLI::ExistingFile);
  bench->add_option("--family", family, "tt or dense")->check(CLI::IsMember({"tt", "dense"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (*train) {
    auto keys = ttrnn::read_key_values(train_config);
    if (seed) keys["seed"] = std::to_string(*seed);
    if (epochs) keys["epochs"] = std::to_string(*epochs);
    if (out) keys["out"] = *out;
    const auto config = ttrnn::TrainConfig::from_keys(keys);
    std::cout << "kernels: " << ttrnn::kernels::name(ttrnn::kernels::active().isa) << "\n";
    ttrnn::cmd_train(config, std::cout);
  } else if (*eval) {
    std::optional<ttrnn::TrainConfig> cfg;
    if (!eval_config.empty()) cfg = ttrnn::TrainConfig::load(eval_config);
    const auto result = ttrnn::cmd_eval(eval_ckpt, cfg, split);
    std::cout << ttrnn::format_eval(result, result.task) << "\n";
  } else if (*inspect) {
    std::cout << ttrnn::cmd_inspect(inspect_ckpt);
  } else if (*bench) {
    auto keys = ttrnn::read_key_values(bench_config);
    if (family) keys["family"] = *family;
    std::cout << ttrnn::cmd_bench(ttrnn::sweep_from_keys(keys));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ttrnn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ttrnn::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kData;
  } catch (const ttrnn::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const ttrnn::CompatibilityError& e) {
    std::cerr << "incompatible: " << e.what() << "\n";
    return kData;
  } catch (const ttrnn::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
}
