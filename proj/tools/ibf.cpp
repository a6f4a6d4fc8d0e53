#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "ibf/config.hpp"
#include "ibf/pipeline.hpp"

namespace {

struct Args {
  std::string config;
  std::string input;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Args& a, bool input) {
  cmd->add_option("--config", a.config, "run configuration file")->required();
  cmd->add_option("--out", a.out, "output directory (overrides [io] output)");
  cmd->add_option("--seed", a.seed, "64-bit seed (overrides [io] seed)");
  if (input) cmd->add_option("--input", a.input, "measurement matrix file (overrides [io] input)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ibf: dwell-time computation for ion beam figuring"};
  app.require_subcommand(1);
  Args a;
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues and singular vectors of the forward map");
  auto* solve = app.add_subcommand("solve", "etch map from a measurement");
  auto* synth = app.add_subcommand("synth", "synthetic measurement map");
  auto* multibeam = app.add_subcommand("multibeam", "joint etch maps for several beams");
  auto* dump = app.add_subcommand("kernel-dump", "assembled A*A matrices");
  add_common(spectrum, a, false);
  add_common(solve, a, true);
  add_common(synth, a, false);
  add_common(multibeam, a, true);
  add_common(dump, a, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ibf::RunConfig cfg = ibf::load_config(a.config);
    const std::string out = a.out.empty() ? cfg.io.output : a.out;
    const std::string input = a.input.empty() ? cfg.io.input : a.input;
    if (a.seed) cfg.io.seed = a.seed;
    if (spectrum->parsed()) {
      ibf::cmd_spectrum(cfg, out);
    } else if (solve->parsed()) {
      ibf::cmd_solve(cfg, input, out);
    } else if (synth->parsed()) {
      if (!cfg.io.seed) throw ibf::Error(ibf::ErrorKind::usage, "synth needs a seed (--seed or [io] seed)");
      ibf::cmd_synth(cfg, *cfg.io.seed, out);
    } else if (multibeam->parsed()) {
      ibf::cmd_multibeam(cfg, input, out);
    } else if (dump->parsed()) {
      ibf::cmd_kernel_dump(cfg, out);
    }
  } catch (const ibf::Error& e) {
    std::cerr << "ibf: " << ibf::to_string(e.kind()) << ": " << e.what() << '\n';
    return e.kind() == ibf::ErrorKind::usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "ibf: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
