// convnorm: operator norms of convolutional layers from the command line.
//
//   convnorm norms <manifest> [--format table|json|csv]
//   convnorm verify [--trials N] [--seed S]
//   convnorm bench [--shapes table1|<file>] [--runs R]
//   convnorm decay-demo <manifest> [--norm l1|linf] [--beta B] [--gamma G]
//                       [--steps T] [--lr LR] [--out PATH]

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "convnorm/commands.hpp"
#include "convnorm/error.hpp"
#include "convnorm/norms.hpp"

using namespace convnorm;

int main(int argc, char** argv) {
  CLI::App app{"Exact l1/linf operator norms of 2D convolutions"};
  app.require_subcommand(1);

  std::string format = "table";
  auto format_check = CLI::IsMember({"table", "json", "csv"});

  cli::NormsOptions norms;
  auto* norms_cmd = app.add_subcommand("norms", "Per-layer norms of a model manifest");
  norms_cmd->add_option("manifest", norms.manifest, "Model manifest (JSON)")->required();
  norms_cmd->add_option("--format", format, "Output format")->check(format_check);

  cli::VerifyOptions verify;
  std::string corrupt;
  auto* verify_cmd = app.add_subcommand("verify", "Randomized check of the formulas against the oracle");
  verify_cmd->add_option("--trials", verify.trials, "Number of random geometries")->capture_default_str();
  verify_cmd->add_option("--seed", verify.seed, "RNG seed")->capture_default_str();
  verify_cmd->add_option("--size-cap", verify.size_cap, "Max entries per materialized matrix")
      ->capture_default_str();
  verify_cmd->add_option("--corrupt", corrupt, "Negative control: perturb a formula")
      ->check(CLI::IsMember({"l1", "linf"}))
      ->group("");

  cli::BenchOptions bench;
  std::size_t input_size = 32;
  auto* bench_cmd = app.add_subcommand("bench", "Time closed-form norms against the oracles");
  bench_cmd->add_option("--shapes", bench.shapes, "'table1' or a shape file")->capture_default_str();
  bench_cmd->add_option("--runs", bench.config.runs, "Timed runs of each formula")->capture_default_str();
  bench_cmd->add_option("--oracle-runs", bench.config.oracle_runs, "Timed runs of each oracle")
      ->capture_default_str();
  bench_cmd->add_option("--warmup", bench.config.warmup, "Untimed formula runs")->capture_default_str();
  bench_cmd->add_option("--power-iters", bench.config.power_iters,
                        "Power-iteration budget per run (0 disables)")
      ->capture_default_str();
  bench_cmd->add_option("--input-size", input_size, "Square input size")->capture_default_str();
  bench_cmd->add_option("--seed", bench.config.seed, "RNG seed")->capture_default_str();
  bench_cmd->add_option("--format", format, "Output format")->check(format_check);

  cli::DecayDemoOptions decay;
  std::string kind = "l1";
  std::string out_path;
  auto* decay_cmd = app.add_subcommand("decay-demo", "Run norm decay with zero task loss");
  decay_cmd->add_option("manifest", decay.manifest, "Model manifest (JSON)")->required();
  decay_cmd->add_option("--norm", kind, "Norm to regularize")
      ->check(CLI::IsMember({"l1", "linf"}))
      ->capture_default_str();
  decay_cmd->add_option("--beta", decay.beta, "Regularization strength")->capture_default_str();
  decay_cmd->add_option("--gamma", decay.gamma, "Momentum of the norm gradient")->capture_default_str();
  decay_cmd->add_option("--steps", decay.steps, "Iterations")->capture_default_str();
  decay_cmd->add_option("--lr", decay.lr, "Step size")->capture_default_str();
  decay_cmd->add_option("--out", out_path, "CSV trace output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*norms_cmd) {
      norms.format = cli::parse_format(format);
      return cli::cmd_norms(norms, std::cout, std::cerr);
    }
    if (*verify_cmd) {
      if (corrupt == "l1") {
        verify.l1_impl = [](const Kernel4D& k) { return l1_norm(k) * (1.0 + 1e-6); };
      } else if (corrupt == "linf") {
        verify.linf_impl = [](const Kernel4D& k) { return linf_norm(k) * (1.0 + 1e-6); };
      }
      return cli::cmd_verify(verify, std::cout, std::cerr);
    }
    if (*bench_cmd) {
      bench.format = cli::parse_format(format);
      bench.config.h_in = bench.config.w_in = input_size;
      return cli::cmd_bench(bench, std::cout, std::cerr);
    }
    if (*decay_cmd) {
      decay.kind = parse_norm_kind(kind);
      if (!out_path.empty()) decay.out_csv = out_path;
      return cli::cmd_decay_demo(decay, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "convnorm: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
