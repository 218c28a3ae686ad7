#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace convnorm::bench {

struct TimingStats {
  double median = 0.0;  // seconds
  double p10 = 0.0;
  double p90 = 0.0;
  std::size_t runs = 0;
};

/// Nearest-rank percentile (q in [0, 1]) of `samples`; sorts a copy.
double percentile(std::span<const double> samples, double q);

TimingStats summarize(std::span<const double> samples);

/// Runs `fn` `warmup` times unrecorded, then `runs` times against the steady
/// clock. The returned double of each call is folded into a sink so the work
/// cannot be elided. Requires runs >= 1.
TimingStats time_method(const std::function<double()>& fn, std::size_t warmup, std::size_t runs);

/// Kernel shape in the order (kernel height, kernel width, input channels, output channels).
struct KernelShape {
  std::size_t k1;
  std::size_t k2;
  std::size_t d_in;
  std::size_t d_out;

  std::string describe() const;
};

/// (3,3,32,32) (3,3,32,128) (3,3,128,256) (3,3,256,512) (5,5,256,128) (5,5,512,256).
std::vector<KernelShape> table1_shapes();

/// One shape per line: "k1 k2 d_in d_out" separated by spaces or commas;
/// blank lines and lines starting with '#' are ignored. Throws Error(InvalidArgument).
std::vector<KernelShape> parse_shapes(const std::string& text);

struct BenchConfig {
  std::size_t h_in = 32;
  std::size_t w_in = 32;
  std::size_t warmup = 5;
  std::size_t runs = 100;         // formula timings
  std::size_t oracle_runs = 3;    // materialize and power-iteration timings
  std::size_t oracle_warmup = 0;
  std::size_t power_iters = 20;   // fixed iteration budget per power-iteration run
  std::size_t size_cap = 0;       // 0 = default_size_cap()
  unsigned long long seed = 42;
};

struct BenchResult {
  KernelShape shape;
  TimingStats l1;
  TimingStats linf;
  std::optional<TimingStats> oracle;  // materialize + matrix l1; empty when over the cap
  std::optional<TimingStats> power;
  std::string note;

  std::optional<double> ratio_oracle_l1() const;
  std::optional<double> ratio_oracle_linf() const;
  std::optional<double> ratio_power_l1() const;
  std::optional<double> ratio_power_linf() const;
};

/// Random kernel of the given shape on an h_in x w_in input with stride 1 and
/// "same" padding (p = k / 2), timed with each method.
BenchResult run_shape(const KernelShape& shape, const BenchConfig& config);

}  // namespace convnorm::bench
