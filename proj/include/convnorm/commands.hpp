#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "convnorm/bench.hpp"
#include "convnorm/decay.hpp"
#include "convnorm/kernel.hpp"

// Subcommand implementations behind the `convnorm` executable. Each returns
// the process exit code and writes to the given streams, so they can be driven
// from tests without spawning a process.
namespace convnorm::cli {

enum class Format { Table, Json, Csv };
Format parse_format(const std::string& text);

struct NormsOptions {
  std::filesystem::path manifest;
  Format format = Format::Table;
};

/// 0 on success, 2 when some conv layer fails the kernel-fit condition
/// (its row is still printed, with oracle values when the matrix fits under
/// the size cap), 1 on I/O or parse errors.
int cmd_norms(const NormsOptions& options, std::ostream& out, std::ostream& err);

struct VerifyOptions {
  std::size_t trials = 200;
  std::uint64_t seed = 42;
  std::size_t size_cap = 1'000'000;  // per materialized matrix
  double rel_tol = 1e-9;
  double l2_slack = 1e-6;
  double frobenius_rel_tol = 1e-12;
  double subgradient_tol = 1e-4;
  // Test hooks: replace the closed-form routine under test.
  std::function<double(const Kernel4D&)> l1_impl;
  std::function<double(const Kernel4D&)> linf_impl;
};

struct VerifySummary {
  std::size_t trials = 0;
  std::size_t checks = 0;
  std::size_t failures = 0;
  std::size_t subgradient_skipped = 0;  // arg-max not unique enough to finite-difference
  std::optional<std::string> counterexample;
  bool passed() const noexcept { return failures == 0; }
};

VerifySummary run_verify(const VerifyOptions& options);

/// 0 iff every check passes.
int cmd_verify(const VerifyOptions& options, std::ostream& out, std::ostream& err);

struct BenchOptions {
  std::string shapes = "table1";  // "table1" or a path to a shape file
  bench::BenchConfig config;
  Format format = Format::Table;
};

int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err);

struct DecayDemoOptions {
  std::filesystem::path manifest;
  NormKind kind = NormKind::L1;
  double beta = 1.0;
  double gamma = 0.5;
  std::size_t steps = 200;
  double lr = 1e-2;
  std::optional<std::filesystem::path> out_csv;
};

/// Regularizes every conv2d and dense layer of the manifest; batchnorm layers
/// are carried along untouched. Writes the norm trace as CSV.
int cmd_decay_demo(const DecayDemoOptions& options, std::ostream& out, std::ostream& err);

/// CSV text of a norm trace: header "step,layer,norm", one row per step and layer.
std::string trace_csv(const NormTrace& trace);

}  // namespace convnorm::cli
