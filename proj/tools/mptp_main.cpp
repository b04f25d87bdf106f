#include <array>
#include <cstdint>
#include <string>

#include "CLI11.hpp"
#include "mptp/io.hpp"

// Exit status: 0 success, 2 config or usage error, 3 numerical divergence.
int main(int argc, char** argv) {
  CLI::App app{"Most probable transition pathways: forward, bridge and inverse experiments"};
  app.require_subcommand(1);

  struct Args {
    std::string config, out;
    uint64_t seed = 0;
  };
  constexpr std::array<const char*, 6> commands = {
      "forward", "oracle", "bridge", "inverse-param", "inverse-nonparam", "report"};
  constexpr std::array<const char*, 6> about = {
      "Train a path network for the most probable transition pathway",
      "Solve the Euler-Lagrange boundary value problem by collocation",
      "Sample approximate bridge-process transition paths",
      "Recover drift parameters jointly with a path network",
      "Recover a drift network from observations through the discrete residual",
      "Tabulate pairwise path and parameter differences between runs"};

  std::array<Args, 6> args;
  std::array<CLI::App*, 6> subs{};
  for (size_t i = 0; i < commands.size(); ++i) {
    subs[i] = app.add_subcommand(commands[i], about[i]);
    subs[i]->add_option("--config", args[i].config, "experiment config (JSON)")->required();
    subs[i]->add_option("--out", args[i].out, "output directory (overrides the config)");
    subs[i]->add_option("--seed", args[i].seed, "random seed (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const bool has_seed = subs[i]->count("--seed") > 0;
    const uint64_t seed = args[i].seed;
    return mptp::run_experiment(commands[i], args[i].config, args[i].out,
                                has_seed ? &seed : nullptr);
  }
  return 2;
}
