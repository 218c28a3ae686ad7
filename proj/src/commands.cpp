#include "convnorm/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "convnorm/error.hpp"
#include "convnorm/io.hpp"
#include "convnorm/norms.hpp"
#include "convnorm/oracle.hpp"

namespace convnorm::cli {

using json = nlohmann::json;

Format parse_format(const std::string& text) {
  if (text == "table") return Format::Table;
  if (text == "json") return Format::Json;
  if (text == "csv") return Format::Csv;
  throw Error(ErrorCode::InvalidArgument, "unknown format '" + text + "'");
}

namespace {

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v, int precision = 6) {
  return v ? fmt(*v, precision) : "";
}

json json_opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void print_table(std::ostream& out, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      out << (c ? "  " : "") << std::left << std::setw(static_cast<int>(width[c])) << cells[c];
    }
    out << "\n";
  };
  line(header);
  for (const auto& row : rows) line(row);
}

// ---------------------------------------------------------------------------
// norms

struct NormRow {
  std::string name;
  std::string kind;
  std::optional<double> l1, linf, l2_upper, frobenius;
  std::string assumption1;  // "yes" | "no" | "n/a"
  std::string source;       // "formula" | "oracle" | "exact" | "unavailable"
};

NormRow conv_row(const std::string& name, const Kernel4D& kernel) {
  NormRow row;
  row.name = name;
  row.kind = "conv2d";
  const NormReport report = norm_report(kernel);
  row.frobenius = report.frobenius;
  row.assumption1 = report.assumption1_holds ? "yes" : "no";
  if (!report.oracle_fallback) {
    row.l1 = report.l1;
    row.linf = report.linf;
    row.l2_upper = report.l2_upper;
    row.source = "formula";
    return row;
  }
  try {
    const Matrix m = materialize(kernel);
    row.l1 = matrix_l1(m);
    row.linf = matrix_linf(m);
    row.l2_upper = matrix_frobenius(m);
    row.source = "oracle";
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SizeOverflow) throw;
    row.source = "unavailable";
  }
  return row;
}

}  // namespace

int cmd_norms(const NormsOptions& options, std::ostream& out, std::ostream& err) {
  std::vector<NormRow> rows;
  bool violated = false;
  try {
    for (const ModelLayer& layer : load_model(options.manifest)) {
      if (const auto* k = std::get_if<Kernel4D>(&layer.params)) {
        rows.push_back(conv_row(layer.name, *k));
        violated = violated || rows.back().assumption1 == "no";
      } else if (const auto* w = std::get_if<Matrix>(&layer.params)) {
        const DenseNorms n = dense_norms(*w);
        const double frob = matrix_frobenius(*w);
        rows.push_back({layer.name, "dense", n.l1, n.linf, frob, frob, "n/a", "exact"});
      } else {
        const auto& bn = std::get<BatchNormParams>(layer.params);
        const double n = bn_norm(bn.gamma, bn.sigma);
        rows.push_back({layer.name, "batchnorm", n, n, n, std::nullopt, "n/a", "exact"});
      }
    }
  } catch (const std::exception& e) {
    err << "convnorm norms: " << e.what() << "\n";
    return 1;
  }

  switch (options.format) {
    case Format::Json: {
      json layers = json::array();
      for (const auto& r : rows) {
        layers.push_back({{"name", r.name},
                          {"kind", r.kind},
                          {"l1", json_opt(r.l1)},
                          {"linf", json_opt(r.linf)},
                          {"l2_upper", json_opt(r.l2_upper)},
                          {"frobenius", json_opt(r.frobenius)},
                          {"assumption1", r.assumption1},
                          {"source", r.source}});
      }
      out << json{{"schema", "convnorm.norms/1"}, {"layers", layers}}.dump(2) << "\n";
      break;
    }
    case Format::Csv:
      out << "# convnorm norms v1\n";
      out << "layer,kind,l1,linf,l2_upper,frobenius,assumption1,source\n";
      for (const auto& r : rows) {
        out << r.name << "," << r.kind << "," << fmt_opt(r.l1, 17) << "," << fmt_opt(r.linf, 17)
            << "," << fmt_opt(r.l2_upper, 17) << "," << fmt_opt(r.frobenius, 17) << ","
            << r.assumption1 << "," << r.source << "\n";
      }
      break;
    case Format::Table: {
      std::vector<std::vector<std::string>> cells;
      for (const auto& r : rows) {
        cells.push_back({r.name, r.kind, fmt_opt(r.l1), fmt_opt(r.linf), fmt_opt(r.l2_upper),
                         r.frobenius ? fmt(*r.frobenius) : "-", r.assumption1, r.source});
      }
      print_table(out,
                  {"layer", "kind", "l1", "linf", "l2_upper", "frobenius", "assumption1", "source"},
                  cells);
      break;
    }
  }
  if (violated) {
    err << "convnorm norms: some conv layers do not satisfy the kernel-fit condition; "
           "their values come from the oracle\n";
  }
  return violated ? 2 : 0;
}

// ---------------------------------------------------------------------------
// verify

namespace {

ConvGeometry sample_geometry(std::mt19937_64& gen) {
  auto uniform = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(gen);
  };
  for (;;) {
    ConvGeometry g;
    g.d_in = uniform(1, 4);
    g.d_out = uniform(1, 4);
    g.k1 = uniform(1, 4);
    g.k2 = uniform(1, 4);
    g.s1 = uniform(1, 3);
    g.s2 = uniform(1, 3);
    g.p1 = uniform(0, 2);
    g.p2 = uniform(0, 2);
    g.h_in = uniform(g.k1, 12);
    g.w_in = uniform(g.k2, 12);
    if (check_assumption1(g)) return g;
  }
}

bool close_rel(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({std::fabs(a), std::fabs(b), 1e-300});
}

// Gap between the largest and second-largest term of the l1 / linf maxima.
double l1_gap(const Kernel4D& kernel) {
  const ConvGeometry& g = kernel.geometry();
  const IndexClassFamily family = index_classes(g);
  std::vector<double> sums;
  for (std::size_t j = 0; j < g.d_in; ++j) {
    for (const auto& cls : family.classes) {
      double s = 0.0;
      for (std::size_t i = 0; i < g.d_out; ++i) {
        for (const auto& idx : cls.members()) s += std::fabs(kernel.at(i, j, idx.k - 1, idx.t - 1));
      }
      sums.push_back(s);
    }
  }
  if (sums.size() < 2) return INFINITY;
  std::partial_sort(sums.begin(), sums.begin() + 2, sums.end(), std::greater<>());
  return sums[0] - sums[1];
}

double linf_gap(const Kernel4D& kernel) {
  const ConvGeometry& g = kernel.geometry();
  const std::size_t len = g.d_in * g.k1 * g.k2;
  std::vector<double> sums;
  for (std::size_t i = 0; i < g.d_out; ++i) {
    double s = 0.0;
    for (std::size_t n = 0; n < len; ++n) s += std::fabs(kernel.values()[i * len + n]);
    sums.push_back(s);
  }
  if (sums.size() < 2) return INFINITY;
  std::partial_sort(sums.begin(), sums.begin() + 2, sums.end(), std::greater<>());
  return sums[0] - sums[1];
}

// Largest deviation between the subgradient and a central finite difference.
double subgradient_error(const Kernel4D& kernel, NormKind kind) {
  constexpr double step = 1e-6;
  const auto grad = norm_subgradient(kernel, kind);
  auto norm = [kind](const Kernel4D& k) { return kind == NormKind::L1 ? l1_norm(k) : linf_norm(k); };
  Kernel4D probe = kernel;
  double worst = 0.0;
  for (std::size_t n = 0; n < kernel.size(); ++n) {
    const double orig = probe.values()[n];
    probe.values()[n] = orig + step;
    const double up = norm(probe);
    probe.values()[n] = orig - step;
    const double down = norm(probe);
    probe.values()[n] = orig;
    worst = std::max(worst, std::fabs((up - down) / (2 * step) - grad[n]));
  }
  return worst;
}

}  // namespace

VerifySummary run_verify(const VerifyOptions& options) {
  VerifySummary summary;
  std::mt19937_64 gen(options.seed);
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  const auto l1 = options.l1_impl ? options.l1_impl : [](const Kernel4D& k) { return l1_norm(k); };
  const auto linf =
      options.linf_impl ? options.linf_impl : [](const Kernel4D& k) { return linf_norm(k); };

  for (std::size_t trial = 0; trial < options.trials; ++trial) {
    ConvGeometry g = sample_geometry(gen);
    while (g.output_size() * g.input_size() > options.size_cap) g = sample_geometry(gen);
    std::vector<double> values(g.kernel_size());
    for (double& v : values) v = value(gen);
    const Kernel4D kernel(g, std::move(values));
    ++summary.trials;

    auto check = [&](bool ok, const std::string& what, double got, double want) {
      ++summary.checks;
      if (ok) return;
      ++summary.failures;
      if (!summary.counterexample) {
        std::ostringstream os;
        os << what << " mismatch at trial " << trial << " [" << g.describe() << "]: got "
           << fmt(got, 17) << ", expected " << fmt(want, 17);
        summary.counterexample = os.str();
      }
    };

    const Matrix m = materialize(kernel, options.size_cap);
    const double l1_formula = l1(kernel);
    const double l1_oracle = matrix_l1(m);
    check(close_rel(l1_formula, l1_oracle, options.rel_tol), "l1", l1_formula, l1_oracle);
    const double linf_formula = linf(kernel);
    const double linf_oracle = matrix_linf(m);
    check(close_rel(linf_formula, linf_oracle, options.rel_tol), "linf", linf_formula, linf_oracle);

    PowerIterationOptions pi;
    pi.seed = options.seed + trial;
    const double sigma = power_iteration_l2(kernel, pi).sigma;
    const double bound = l2_upper_bound(kernel);
    check(bound >= sigma - options.l2_slack, "l2 bound", bound, sigma);

    if (g.p1 == 0 && g.p2 == 0) {
      const double frob = frobenius_exact(kernel);
      const double frob_oracle = matrix_frobenius(m);
      check(close_rel(frob, frob_oracle, options.frobenius_rel_tol), "frobenius", frob,
            frob_oracle);
    }

    for (NormKind kind : {NormKind::L1, NormKind::LINF}) {
      const double gap = kind == NormKind::L1 ? l1_gap(kernel) : linf_gap(kernel);
      if (gap < 1e-4) {
        ++summary.subgradient_skipped;
        continue;
      }
      const double e = subgradient_error(kernel, kind);
      check(e <= options.subgradient_tol,
            std::string(to_string(kind)) + " subgradient vs finite difference", e, 0.0);
    }
  }
  return summary;
}

int cmd_verify(const VerifyOptions& options, std::ostream& out, std::ostream& err) {
  if (options.trials == 0) {
    err << "convnorm verify: warning: 0 trials requested, nothing checked\n";
    out << "verify: 0 trials, vacuous pass\n";
    return 0;
  }
  VerifySummary s;
  try {
    s = run_verify(options);
  } catch (const std::exception& e) {
    err << "convnorm verify: " << e.what() << "\n";
    return 1;
  }
  out << "verify: " << s.trials << " trials, " << s.checks << " checks, " << s.failures
      << " failures, " << s.subgradient_skipped << " subgradient checks skipped (tied arg-max)\n";
  if (s.counterexample) out << "counterexample: " << *s.counterexample << "\n";
  out << (s.passed() ? "PASS" : "FAIL") << "\n";
  return s.passed() ? 0 : 1;
}

// ---------------------------------------------------------------------------
// bench

int cmd_bench(const BenchOptions& options, std::ostream& out, std::ostream& err) {
  std::vector<bench::KernelShape> shapes;
  std::vector<bench::BenchResult> results;
  try {
    if (options.shapes == "table1") {
      shapes = bench::table1_shapes();
    } else {
      std::ifstream in(options.shapes);
      if (!in) throw Error(ErrorCode::Io, "cannot open shape file " + options.shapes);
      std::stringstream ss;
      ss << in.rdbuf();
      shapes = bench::parse_shapes(ss.str());
    }
    for (const auto& shape : shapes) results.push_back(bench::run_shape(shape, options.config));
  } catch (const std::exception& e) {
    err << "convnorm bench: " << e.what() << "\n";
    return 1;
  }

  auto stats_json = [](const std::optional<bench::TimingStats>& s) {
    if (!s) return json(nullptr);
    return json{{"median", s->median}, {"p10", s->p10}, {"p90", s->p90}, {"runs", s->runs}};
  };
  switch (options.format) {
    case Format::Json: {
      json rows = json::array();
      for (const auto& r : results) {
        rows.push_back({{"shape", r.shape.describe()},
                        {"l1", stats_json(r.l1)},
                        {"linf", stats_json(r.linf)},
                        {"oracle", stats_json(r.oracle)},
                        {"power_iteration", stats_json(r.power)},
                        {"ratio_oracle_l1", json_opt(r.ratio_oracle_l1())},
                        {"ratio_oracle_linf", json_opt(r.ratio_oracle_linf())},
                        {"ratio_power_l1", json_opt(r.ratio_power_l1())},
                        {"ratio_power_linf", json_opt(r.ratio_power_linf())},
                        {"note", r.note}});
      }
      out << json{{"schema", "convnorm.bench/1"}, {"results", rows}}.dump(2) << "\n";
      break;
    }
    case Format::Csv:
      out << "# convnorm bench v1\n";
      out << "shape,l1_median,l1_p10,l1_p90,linf_median,linf_p10,linf_p90,oracle_median,"
             "power_median,ratio_oracle_l1,ratio_oracle_linf,ratio_power_l1,ratio_power_linf,note\n";
      for (const auto& r : results) {
        out << '"' << r.shape.describe() << "\"," << fmt(r.l1.median) << "," << fmt(r.l1.p10)
            << "," << fmt(r.l1.p90) << "," << fmt(r.linf.median) << "," << fmt(r.linf.p10) << ","
            << fmt(r.linf.p90) << "," << (r.oracle ? fmt(r.oracle->median) : "") << ","
            << (r.power ? fmt(r.power->median) : "") << "," << fmt_opt(r.ratio_oracle_l1())
            << "," << fmt_opt(r.ratio_oracle_linf()) << "," << fmt_opt(r.ratio_power_l1()) << ","
            << fmt_opt(r.ratio_power_linf()) << ",\"" << r.note << "\"\n";
      }
      break;
    case Format::Table: {
      std::vector<std::vector<std::string>> cells;
      auto opt_stat = [](const std::optional<bench::TimingStats>& s) {
        return s ? fmt(s->median, 4) : std::string("skipped");
      };
      for (const auto& r : results) {
        cells.push_back({r.shape.describe(), fmt(r.l1.median, 4), fmt(r.linf.median, 4),
                         opt_stat(r.oracle), opt_stat(r.power),
                         r.ratio_power_l1() ? fmt(*r.ratio_power_l1(), 4) : "-",
                         r.ratio_power_linf() ? fmt(*r.ratio_power_linf(), 4) : "-"});
      }
      out << "median seconds per run (input " << options.config.h_in << "x"
          << options.config.w_in << ", power iteration " << options.config.power_iters
          << " iterations)\n";
      print_table(out,
                  {"kernel(k1,k2,in,out)", "l1", "linf", "oracle", "power_iter", "power/l1",
                   "power/linf"},
                  cells);
      for (const auto& r : results) {
        if (!r.note.empty()) out << r.shape.describe() << ": " << r.note << "\n";
      }
      break;
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// decay-demo

std::string trace_csv(const NormTrace& trace) {
  std::ostringstream os;
  os << "# convnorm decay-trace v1\n";
  os << "step,layer,norm\n";
  for (std::size_t s = 0; s < trace.norms.size(); ++s) {
    for (std::size_t l = 0; l < trace.layer_names.size(); ++l) {
      os << s << "," << trace.layer_names[l] << "," << fmt(trace.norms[s][l], 17) << "\n";
    }
  }
  return os.str();
}

int cmd_decay_demo(const DecayDemoOptions& options, std::ostream& out, std::ostream& err) {
  try {
    std::vector<Layer> layers;
    std::vector<std::string> names;
    for (ModelLayer& layer : load_model(options.manifest)) {
      if (auto* k = std::get_if<Kernel4D>(&layer.params)) {
        if (!check_assumption1(k->geometry())) {
          throw Error(ErrorCode::AssumptionViolated,
                      "layer " + layer.name + " cannot be regularized in closed form");
        }
        layers.emplace_back(std::move(*k));
      } else if (auto* w = std::get_if<Matrix>(&layer.params)) {
        layers.emplace_back(std::move(*w));
      } else {
        continue;
      }
      names.push_back(layer.name);
    }
    DemoConfig config;
    config.kind = options.kind;
    config.steps = options.steps;
    config.decay.beta = options.beta;
    config.decay.gamma = options.gamma;
    config.decay.step_size = options.lr;
    const NormTrace trace = run_decay_demo(layers, names, config);

    if (options.out_csv) {
      std::ofstream csv(*options.out_csv, std::ios::trunc);
      if (!csv) throw Error(ErrorCode::Io, "cannot write " + options.out_csv->string());
      csv << trace_csv(trace);
    }
    std::vector<std::vector<std::string>> cells;
    for (std::size_t l = 0; l < names.size(); ++l) {
      const double first = trace.norms.front()[l];
      const double last = trace.norms.back()[l];
      cells.push_back({names[l], fmt(first), fmt(last),
                       first > 0 ? fmt(100.0 * (first - last) / first, 4) + "%" : "-"});
    }
    out << to_string(options.kind) << " norm decay over " << options.steps << " steps\n";
    print_table(out, {"layer", "initial", "final", "reduction"}, cells);
  } catch (const std::exception& e) {
    err << "convnorm decay-demo: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace convnorm::cli
