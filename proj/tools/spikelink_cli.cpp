// spikelink: dataset generation, training and evaluation driver.

#include <chrono>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "spikelink/config.hpp"
#include "spikelink/harness.hpp"

namespace fs = std::filesystem;
using namespace spikelink;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::string checkpoint;
  long long seed = -1;
};

void add_common(CLI::App* cmd, Common& c, bool needs_checkpoint) {
  cmd->add_option("--config", c.config, "experiment config (JSON); defaults are used when omitted");
  cmd->add_option("--seed", c.seed, "master seed, overrides the config");
  cmd->add_option("--out", c.out, "output directory");
  if (needs_checkpoint) cmd->add_option("--checkpoint", c.checkpoint, "model manifest (.json)")->required();
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? default_config() : load_config(c.config);
  if (c.seed >= 0) cfg.seed = static_cast<std::uint64_t>(c.seed);
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spiking semantic communication over a free-space optical link"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("generate-dataset", "render the synthetic event-camera dataset");
  add_common(gen, common, false);
  auto* tr = app.add_subcommand("train", "train the encoder/decoder with the channel in the loop");
  add_common(tr, common, false);
  auto* ev = app.add_subcommand("eval-sweep", "accuracy over the pointing-error grid");
  add_common(ev, common, true);
  auto* br = app.add_subcommand("ber", "Monte-Carlo bit error rate sweeps");
  add_common(br, common, false);
  auto* en = app.add_subcommand("energy", "per-inference energy of the trained model");
  add_common(en, common, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const ExperimentConfig cfg = resolve(common);
    const fs::path out = common.out.empty() ? fs::path(".") : fs::path(common.out);
    harness::CommandResult result;
    if (gen->parsed()) {
      result = harness::generate_dataset(cfg, common.out.empty() ? fs::path(cfg.dataset_path) : out);
    } else if (tr->parsed()) {
      const auto start = std::chrono::steady_clock::now();
      result = harness::train(cfg, out);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cerr << "train: " << secs << " s wall clock\n";
    } else if (ev->parsed()) {
      result = harness::eval_sweep(cfg, common.checkpoint, out);
    } else if (br->parsed()) {
      result = harness::ber(cfg, out);
    } else {
      result = harness::energy(cfg, common.checkpoint, out);
    }
    std::cout << result.summary_json << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
}
