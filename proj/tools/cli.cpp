#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "alo/baselines.hpp"
#include "alo/errors.hpp"
#include "alo/io.hpp"
#include "alo/nmf.hpp"
#include "alo/nqp.hpp"

#ifndef ALO_VERSION_STRING
#define ALO_VERSION_STRING "v0.1.0"
#endif

namespace alo::cli {

namespace fs = std::filesystem;

namespace {

struct DataOptions {
  std::string path;
  std::string format;
  bool tfidf = false;
};

// Raised for flag combinations CLI11 cannot check on its own.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--data", d.path, "Input data file")->required();
  cmd->add_option("--format", d.format, "csv-dense | uci-bow | matrix-market (default: by extension)");
  cmd->add_flag("--tfidf", d.tfidf, "Apply tf-idf weighting (uci-bow only)");
}

void add_config_options(CLI::App* cmd, NmfConfig& cfg) {
  cmd->add_option("--rank", cfg.rank, "Number of latent components r");
  cmd->add_option("--epsilon", cfg.epsilon, "Accelerated condition for inner NQP solves");
  cmd->add_option("--mu1", cfg.mu1, "L1 weight on F");
  cmd->add_option("--mu2", cfg.mu2, "L2 weight on F");
  cmd->add_option("--beta1", cfg.beta1, "L1 weight on G");
  cmd->add_option("--beta2", cfg.beta2, "L2 weight on G");
  cmd->add_option("--workers", cfg.workers, "Worker threads");
  cmd->add_option("--seed", cfg.seed, "Seed for the shared initialization");
  cmd->add_option("--inner-cap", cfg.inner_cap, "Iteration cap per NQP solve");
  cmd->add_option("--rel-tol", cfg.rel_tol, "Relative objective change for early exit (0 = off)");
}

io::DatasetSpec resolve_dataset(const DataOptions& d) {
  io::DatasetSpec spec;
  spec.path = d.path;
  spec.tfidf = d.tfidf;
  std::optional<io::Format> f =
      d.format.empty() ? io::infer_format(spec.path) : io::parse_format(d.format);
  if (!f) {
    throw UsageError(d.format.empty() ? "cannot infer format of '" + d.path + "'; pass --format"
                                      : "unknown format '" + d.format + "'");
  }
  spec.format = *f;
  if (spec.tfidf && spec.format != io::Format::kUciBow) {
    throw UsageError("--tfidf applies to uci-bow input only");
  }
  return spec;
}

std::string quote(const std::string& s) {
  if (!s.empty() && s.find_first_of(" \t\"'\\$") == std::string::npos) return s;
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

class Manifest {
 public:
  void set(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
  void set(const std::string& key, double value) { set(key, io::format_real(value)); }
  void set_count(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }

  void write(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

Manifest base_manifest(const std::vector<std::string>& args, const io::DatasetSpec& data,
                       const NmfConfig& cfg) {
  Manifest m;
  m.set("version", ALO_VERSION_STRING);
  std::string command = "alo";
  for (const auto& a : args) command += " " + quote(a);
  m.set("command", command);
  m.set("dataset.path", data.path.string());
  m.set("dataset.format", std::string(io::to_string(data.format)));
  m.set("dataset.tfidf", data.tfidf ? std::string(io::kTfidfVariant) : std::string("off"));
  m.set_count("seed", cfg.seed);
  m.set_count("rank", cfg.rank);
  m.set_count("max_iter", cfg.max_outer);
  m.set("epsilon", cfg.epsilon);
  m.set("mu1", cfg.mu1);
  m.set("mu2", cfg.mu2);
  m.set("beta1", cfg.beta1);
  m.set("beta2", cfg.beta2);
  m.set_count("workers", cfg.workers);
  m.set_count("inner_cap", cfg.inner_cap);
  m.set("rel_tol", cfg.rel_tol);
  m.set_count("stop_block", cfg.stop_block);
  return m;
}

// Average inner iterations per subproblem per alternation.
double overall_k_bar(const ConvergenceLog& log, Index m, Index n) {
  if (log.records.empty()) return 0.0;
  double inner = 0.0;
  for (const auto& r : log.records) inner += static_cast<double>(r.inner_iterations);
  return inner / (static_cast<double>(log.records.size()) * static_cast<double>(m + n));
}

FitResult run_solver(const std::string& solver, const DataMatrix& v, const NmfConfig& cfg,
                     NmfModel init) {
  if (solver == "mur") return fit_mur(v, cfg, std::move(init));
  return fit(v, cfg, std::move(init));
}

std::vector<double> parse_pair(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--x0 expects two comma-separated numbers, got '" + s + "'");
    }
  }
  if (out.size() != 2 || out[0] < 0.0 || out[1] < 0.0) {
    throw UsageError("--x0 expects two non-negative comma-separated numbers");
  }
  return out;
}

int cmd_fit(const std::vector<std::string>& args, const DataOptions& d, const NmfConfig& cfg,
            const std::string& solver, const fs::path& out_dir, std::ostream& out,
            std::ostream& err) {
  const io::DatasetSpec spec = resolve_dataset(d);
  const DataMatrix v = io::load(spec);
  if (cfg.rank > std::min(rows_of(v), cols_of(v)) && rows_of(v) > 0) {
    err << "note: rank " << cfg.rank << " exceeds min(n, m)\n";
  }
  NmfModel init = initialize(v, cfg);
  FitResult result = run_solver(solver, v, cfg, std::move(init));

  fs::create_directories(out_dir);
  io::write_csv_dense(out_dir / "G.csv", result.model.G);
  io::write_csv_dense(out_dir / "F.csv", result.model.F);
  io::write_log(result.log, out_dir / "log.csv");
  Manifest manifest = base_manifest(args, spec, cfg);
  manifest.set("solver", solver);
  manifest.set("outputs", std::string("G.csv F.csv log.csv"));
  manifest.write(out_dir / "manifest.txt");

  const Index n = rows_of(v);
  const Index m = cols_of(v);
  if (result.failure) {
    err << "error: numerical failure at " << result.failure->what() << '\n';
    return kNumericalFailure;
  }
  const double final_obj =
      result.log.records.empty() ? result.log.initial_objective : result.log.records.back().objective;
  out << "solver=" << solver << " n=" << n << " m=" << m << " nnz=" << nnz_of(v)
      << " iterations=" << result.log.records.size() << " objective=" << io::format_real(final_obj)
      << " k_bar=" << io::format_real(overall_k_bar(result.log, m, n)) << '\n';
  return kOk;
}

int cmd_bench(const std::vector<std::string>& args, const DataOptions& d, const NmfConfig& cfg,
              const std::vector<std::string>& solvers, const fs::path& out_dir,
              std::ostream& out, std::ostream& err) {
  const io::DatasetSpec spec = resolve_dataset(d);
  const DataMatrix v = io::load(spec);
  const NmfModel init = initialize(v, cfg);
  const Index n = rows_of(v);
  const Index m = cols_of(v);

  fs::create_directories(out_dir);
  std::ostringstream summary;
  summary << "solver,final_objective,k_bar,seconds\n";
  std::map<std::string, int> seen;
  int status = kOk;
  for (const auto& solver : solvers) {
    const int count = ++seen[solver];
    const std::string label = count == 1 ? solver : solver + "-" + std::to_string(count);
    FitResult result = run_solver(solver, v, cfg, init);
    fs::create_directories(out_dir / label);
    io::write_log(result.log, out_dir / label / "log.csv");
    const double final_obj = result.log.records.empty() ? result.log.initial_objective
                                                        : result.log.records.back().objective;
    const double seconds = result.log.records.empty() ? 0.0 : result.log.records.back().seconds;
    const double k_bar = overall_k_bar(result.log, m, n);
    summary << label << ',' << io::format_real(final_obj) << ',' << io::format_real(k_bar) << ','
            << io::format_real(seconds) << '\n';
    out << std::left << std::setw(8) << label << " objective=" << io::format_real(final_obj)
        << " k_bar=" << io::format_real(k_bar) << " seconds=" << io::format_real(seconds) << '\n';
    if (result.failure) {
      err << "error: " << label << ": numerical failure at " << result.failure->what() << '\n';
      status = kNumericalFailure;
    }
  }
  {
    std::ofstream f(out_dir / "summary.csv", std::ios::binary);
    if (!f) throw IoError("cannot write summary.csv");
    f << summary.str();
  }
  Manifest manifest = base_manifest(args, spec, cfg);
  std::string joined;
  for (const auto& s : solvers) joined += (joined.empty() ? "" : ",") + s;
  manifest.set("solvers", joined);
  manifest.set("initialization", std::string("shared G0/F0 from seed"));
  manifest.write(out_dir / "manifest.txt");
  return status;
}

int cmd_nqp_demo(double tol, const std::string& x0_text, Index max_iter, std::ostream& out) {
  const std::vector<double> x0 = parse_pair(x0_text);
  NqpProblem p{DenseMatrix(2, 2, {1.0, 0.1, 0.1, 10.0}), {-80.0, -100.0}, x0};

  const NqpSolution plain = plain_els_solve(p, p.x0, tol, max_iter);
  StopState stop;
  stop.epsilon = tol;
  const NqpSolution alo = solve(p, stop, max_iter);

  out << "f(x) = 1/2 x'[[1, 0.1], [0.1, 10]]x + [-80, -100]x, x0 = [" << io::format_real(x0[0])
      << ", " << io::format_real(x0[1]) << "], tol = " << io::format_real(tol) << '\n';
  out << std::left << std::setw(12) << "method" << std::setw(12) << "iterations" << std::setw(22)
      << "x1" << "x2\n";
  auto row = [&](const char* name, const NqpSolution& s) {
    out << std::left << std::setw(12) << name << std::setw(12) << s.inner_iterations
        << std::setw(22) << io::format_real(s.x[0]) << io::format_real(s.x[1]) << '\n';
  };
  row("plain-els", plain);
  row("alo", alo);
  return kOk;
}

int cmd_convert(const DataOptions& d, const std::string& out_format, const fs::path& out_path,
                std::ostream& out) {
  const io::DatasetSpec spec = resolve_dataset(d);
  const DataMatrix v = io::load(spec);
  const auto fmt = io::parse_format(out_format);
  if (!fmt || *fmt == io::Format::kUciBow) {
    throw UsageError("--out-format must be matrix-market or csv-dense");
  }
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  if (*fmt == io::Format::kMatrixMarket) {
    const SparseMatrix s = std::holds_alternative<SparseMatrix>(v)
                               ? std::get<SparseMatrix>(v)
                               : SparseMatrix::from_dense(std::get<DenseMatrix>(v));
    io::write_matrix_market(out_path, s);
  } else {
    const DenseMatrix dm = std::holds_alternative<DenseMatrix>(v)
                               ? std::get<DenseMatrix>(v)
                               : std::get<SparseMatrix>(v).to_dense();
    io::write_csv_dense(out_path, dm);
  }
  out << "wrote " << rows_of(v) << "x" << cols_of(v) << " (nnz " << nnz_of(v) << ") to "
      << out_path.string() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Accelerated NMF via anti-lopsided NQP subproblems", "alo"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ALO_VERSION_STRING);

  DataOptions data;
  NmfConfig cfg;
  std::string solver = "alo";
  std::string out_dir;

  auto* fit_cmd = app.add_subcommand("fit", "Factorize a dataset and write G, F, and the log");
  add_data_options(fit_cmd, data);
  add_config_options(fit_cmd, cfg);
  fit_cmd->add_option("--max-iter", cfg.max_outer, "Outer alternations")->capture_default_str();
  fit_cmd->add_option("--solver", solver, "alo | mur")
      ->check(CLI::IsMember({"alo", "mur"}));
  fit_cmd->add_option("--out", out_dir, "Output directory")->required();

  NmfConfig bench_cfg;
  bench_cfg.max_outer = 100;
  DataOptions bench_data;
  std::vector<std::string> solvers{"alo", "mur"};
  std::string bench_out;
  auto* bench_cmd = app.add_subcommand("bench", "Run several solvers from one shared initialization");
  add_data_options(bench_cmd, bench_data);
  add_config_options(bench_cmd, bench_cfg);
  bench_cmd->add_option("--max-iter", bench_cfg.max_outer, "Outer alternations")
      ->capture_default_str();
  bench_cmd->add_option("--solvers", solvers, "Solvers to compare")
      ->delimiter(',')
      ->check(CLI::IsMember({"alo", "mur"}));
  bench_cmd->add_option("--out", bench_out, "Output directory")->required();

  double demo_tol = 1e-10;
  std::string demo_x0 = "200,20";
  Index demo_max = 10000;
  auto* demo_cmd = app.add_subcommand("nqp-demo", "Plain exact line search vs. rescaled solver on a 2-D toy problem");
  demo_cmd->add_option("--tol", demo_tol, "Relative passive-gradient tolerance")
      ->check(CLI::PositiveNumber);
  demo_cmd->add_option("--x0", demo_x0, "Starting point 'x1,x2'");
  demo_cmd->add_option("--max-iter", demo_max, "Iteration cap")->check(CLI::PositiveNumber);

  DataOptions conv_data;
  std::string conv_format = "matrix-market";
  std::string conv_out;
  auto* conv_cmd = app.add_subcommand("convert", "Convert between data formats");
  add_data_options(conv_cmd, conv_data);
  conv_cmd->add_option("--out-format", conv_format, "matrix-market | csv-dense");
  conv_cmd->add_option("--out", conv_out, "Output file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadFlags;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == fit_cmd) {
      cfg.validate();
      return cmd_fit(args, data, cfg, solver, out_dir, out, err);
    }
    if (active == bench_cmd) {
      bench_cfg.validate();
      return cmd_bench(args, bench_data, bench_cfg, solvers, bench_out, out, err);
    }
    if (active == demo_cmd) return cmd_nqp_demo(demo_tol, demo_x0, demo_max, out);
    return cmd_convert(conv_data, conv_format, conv_out, out);
  } catch (const std::invalid_argument& e) {
    // UsageError and NmfConfig::validate; SizeError is a data problem.
    if (dynamic_cast<const SizeError*>(&e) == nullptr) {
      err << "error: " << e.what() << "\n\n" << active->help();
      return kBadFlags;
    }
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericalFailure& e) {
    err << "error: numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace alo::cli
