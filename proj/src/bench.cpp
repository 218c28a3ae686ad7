#include "convnorm/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "convnorm/error.hpp"
#include "convnorm/norms.hpp"
#include "convnorm/oracle.hpp"

namespace convnorm::bench {

double percentile(std::span<const double> samples, double q) {
  if (samples.empty()) return 0.0;
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = std::ceil(std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size()));
  const std::size_t idx = rank < 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
  return sorted[std::min(idx, sorted.size() - 1)];
}

TimingStats summarize(std::span<const double> samples) {
  TimingStats s;
  s.runs = samples.size();
  if (samples.empty()) return s;
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  s.p10 = percentile(sorted, 0.10);
  s.p90 = percentile(sorted, 0.90);
  return s;
}

TimingStats time_method(const std::function<double()>& fn, std::size_t warmup, std::size_t runs) {
  if (runs == 0) throw Error(ErrorCode::InvalidArgument, "runs must be >= 1");
  volatile double sink = 0.0;
  for (std::size_t w = 0; w < warmup; ++w) sink = sink + fn();

  using clock = std::chrono::steady_clock;
  std::vector<double> samples;
  samples.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    const auto start = clock::now();
    const double v = fn();
    const auto stop = clock::now();
    sink = sink + v;
    samples.push_back(std::chrono::duration<double>(stop - start).count());
  }
  return summarize(samples);
}

std::string KernelShape::describe() const {
  std::ostringstream os;
  os << k1 << "," << k2 << "," << d_in << "," << d_out;
  return os.str();
}

std::vector<KernelShape> table1_shapes() {
  return {{3, 3, 32, 32},   {3, 3, 32, 128},  {3, 3, 128, 256},
          {3, 3, 256, 512}, {5, 5, 256, 128}, {5, 5, 512, 256}};
}

std::vector<KernelShape> parse_shapes(const std::string& text) {
  std::vector<KernelShape> shapes;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    long long v[4];
    std::string extra;
    if (!(fields >> v[0] >> v[1] >> v[2] >> v[3]) || (fields >> extra) ||
        std::any_of(std::begin(v), std::end(v), [](long long x) { return x <= 0; })) {
      throw Error(ErrorCode::InvalidArgument,
                  "shape line " + std::to_string(lineno) + ": expected four positive integers");
    }
    shapes.push_back({static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]),
                      static_cast<std::size_t>(v[2]), static_cast<std::size_t>(v[3])});
  }
  return shapes;
}

namespace {

std::optional<double> ratio(const std::optional<TimingStats>& slow, const TimingStats& fast) {
  if (!slow || fast.runs == 0 || fast.median <= 0.0) return std::nullopt;
  return slow->median / fast.median;
}

}  // namespace

std::optional<double> BenchResult::ratio_oracle_l1() const { return ratio(oracle, l1); }
std::optional<double> BenchResult::ratio_oracle_linf() const { return ratio(oracle, linf); }
std::optional<double> BenchResult::ratio_power_l1() const { return ratio(power, l1); }
std::optional<double> BenchResult::ratio_power_linf() const { return ratio(power, linf); }

BenchResult run_shape(const KernelShape& shape, const BenchConfig& config) {
  const ConvGeometry g = ConvGeometry::make(shape.d_in, shape.d_out, config.h_in, config.w_in,
                                            shape.k1, shape.k2, 1, 1, shape.k1 / 2, shape.k2 / 2);
  std::mt19937_64 gen(config.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> values(g.kernel_size());
  for (double& v : values) v = dist(gen);
  const Kernel4D kernel(g, std::move(values));

  BenchResult result;
  result.shape = shape;
  result.l1 = time_method([&] { return l1_norm(kernel); }, config.warmup, config.runs);
  result.linf = time_method([&] { return linf_norm(kernel); }, config.warmup, config.runs);

  const std::size_t cap = config.size_cap == 0 ? default_size_cap() : config.size_cap;
  const std::size_t rows = g.output_size();
  const std::size_t cols = g.input_size();
  if (rows <= cap / cols) {
    result.oracle = time_method([&] { return matrix_l1(materialize(kernel, cap)); },
                                config.oracle_warmup, config.oracle_runs);
  } else {
    std::ostringstream os;
    os << "oracle skipped: " << rows << "x" << cols << " exceeds cap " << cap;
    result.note = os.str();
  }

  if (config.power_iters > 0) {
    PowerIterationOptions opts;
    opts.max_iters = config.power_iters;
    opts.tol = 0.0;  // fixed budget so every run does the same work
    opts.seed = config.seed;
    result.power = time_method([&] { return power_iteration_l2(kernel, opts).sigma; },
                               config.oracle_warmup, config.oracle_runs);
  }
  return result;
}

}  // namespace convnorm::bench
