// Command-line front end: solve, reconstruct, bench, coherence, noise, plus
// small helpers (operator, measure, phantom) for producing inputs.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 solver divergence.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "palm/palm.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDiverged = 3;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
  bool trace = false;
};

class DataError : public palm::Error {
public:
  using palm::Error::Error;
};

palm::Vec read_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  palm::Vec v;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double d = 0;
    try {
      d = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw DataError("'" + path + "': not a number: '" + tok + "'");
    v.push_back(d);
  }
  if (v.empty()) throw DataError("'" + path + "' holds no values");
  return v;
}

void write_vector(std::ostream& out, const palm::Vec& v) {
  char buf[32];
  for (double e : v) {
    std::snprintf(buf, sizeof buf, "%.17g\n", e);
    out << buf;
  }
}

void write_vector_to(const std::string& path, const palm::Vec& v) {
  if (path.empty() || path == "-") {
    write_vector(std::cout, v);
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_vector(out, v);
}

palm::SensingOperator load_operator(const std::string& path) {
  return palm::deserialize_operator(palm::read_file_bytes(path));
}

struct SolverFlags {
  std::optional<double> mu, beta;
  double mu_relative = 1e-3;
  double tau = 1.0, gamma = 1.0;
  std::size_t max_iter = 5000;
  double tol_feasibility = 1e-6, tol_x_change = 1e-6;

  void attach(CLI::App* cmd) {
    cmd->add_option("--mu", mu, "Residual weight (default 1e-3 * ||b||_inf)");
    cmd->add_option("--mu-relative", mu_relative, "mu = factor * ||b||_inf when --mu is absent")->capture_default_str();
    cmd->add_option("--beta", beta, "Penalty parameter (default m / ||b||_1)");
    cmd->add_option("--tau", tau, "Proximal step")->capture_default_str();
    cmd->add_option("--gamma", gamma, "Multiplier step, in (0, 2)")->capture_default_str();
    cmd->add_option("--max-iter", max_iter, "Iteration cap")->capture_default_str();
    cmd->add_option("--tol-feasibility", tol_feasibility, "Relative feasibility tolerance")->capture_default_str();
    cmd->add_option("--tol-x", tol_x_change, "Relative x-change tolerance")->capture_default_str();
  }

  palm::PalmSettings settings() const {
    palm::PalmSettings s;
    s.mu = mu;
    s.beta = beta;
    s.mu_relative = mu_relative;
    s.tau = tau;
    s.gamma = gamma;
    s.max_iter = max_iter;
    s.tol_feasibility = tol_feasibility;
    s.tol_x_change = tol_x_change;
    return s;
  }
};

int run_solve(const Globals& g, const std::string& op_path, const std::string& b_path, const SolverFlags& flags) {
  const palm::SensingOperator a = load_operator(op_path);
  const palm::Vec b = read_vector(b_path);
  if (b.size() != a.rows()) throw palm::DimensionError("measurement length must equal operator rows", a.rows(), b.size());
  const palm::PalmParams params = flags.settings().resolve(b);

  palm::SolveOptions opts;
  if (g.trace) opts.trace = &std::cerr;
  if (!g.quiet) opts.warnings = &std::cerr;
  const palm::PalmResult res = palm::solve(a, b, params, opts);
  const palm::KktReport kkt = palm::kkt_report(a, b, res, params.mu);

  std::cout << std::setprecision(10) << "iterations " << res.iterations << '\n'
            << "converged " << (res.converged ? "true" : "false") << '\n'
            << "nonzeros " << std::count_if(res.x.begin(), res.x.end(), [](double e) { return e != 0.0; }) << '\n'
            << "dual_feasibility " << kkt.dual_feasibility << '\n'
            << "complementarity " << kkt.complementarity << '\n'
            << "primal_feasibility " << kkt.primal_feasibility << '\n'
            << "multiplier_consistency " << kkt.multiplier_consistency << '\n';
  if (g.out.empty()) std::cout << "x\n";
  write_vector_to(g.out, res.x);
  return 0;
}

int run_reconstruct(const Globals& g, const std::string& image_path, double ratio, const std::string& op_kind,
                    const std::string& noise, const SolverFlags& flags, bool flags_given) {
  palm::ExperimentConfig cfg;
  cfg.measurement_ratio = ratio;
  cfg.operator_kind = palm::parse_operator_kind(op_kind);
  cfg.master_seed = g.seed.value_or(0);
  if (flags_given) cfg.solver = flags.settings();

  const palm::GrayImage img = palm::load_pgm(image_path);
  palm::GrayImage input = img;
  if (!noise.empty()) {
    const auto grid = palm::parse_noise_grid(noise);
    if (grid.size() != 1) throw DataError("--noise takes exactly one kind:level cell");
    palm::NoiseSpec spec = grid.front();
    spec.seed = palm::noise_seed(cfg.master_seed, 0, 0);
    input = palm::apply_noise(img, spec);
  }
  const palm::Reconstruction rec = palm::reconstruct_image(input, img, cfg);
  palm::save_pgm(g.out.empty() ? "reconstruction.pgm" : g.out, rec.image);
  if (!g.quiet) {
    std::cout << std::fixed << std::setprecision(4) << "psnr_db " << rec.quality.psnr_db << '\n'
              << "rmse " << rec.quality.rmse << '\n'
              << std::setprecision(3) << "time_sec " << rec.quality.elapsed_seconds << '\n'
              << "mean_iterations " << static_cast<double>(rec.total_iterations) / static_cast<double>(img.width())
              << '\n';
    if (rec.unconverged_blocks) std::cout << "unconverged_blocks " << rec.unconverged_blocks << '\n';
  }
  if (rec.failed_blocks) {
    std::cerr << "error: solver diverged on " << rec.failed_blocks << " block(s)\n";
    return kExitDiverged;
  }
  return 0;
}

int run_bench(const Globals& g, const std::string& config_path) {
  palm::ExperimentConfig cfg = palm::load_config(config_path);
  if (!g.out.empty()) cfg.output_dir = g.out;
  if (g.seed) cfg.master_seed = *g.seed;
  const palm::ExperimentReport report = palm::run_experiment(cfg);
  for (const auto& e : report.errors) std::cerr << "error: " << e << '\n';
  if (!g.quiet) {
    std::cout << palm::format_csv(report.rows);
    std::cout << "wrote " << report.csv_path << '\n';
  }
  if (report.any(palm::RowStatus::ReadError)) return kExitData;
  if (report.any(palm::RowStatus::SolverFailed)) return kExitDiverged;
  return 0;
}

// "name" or "name<size>", e.g. "hadamard4".
std::pair<std::string, std::size_t> split_basis(const std::string& spec) {
  std::size_t i = spec.size();
  while (i > 0 && std::isdigit(static_cast<unsigned char>(spec[i - 1]))) --i;
  return {spec.substr(0, i), i < spec.size() ? std::stoul(spec.substr(i)) : 0};
}

int run_coherence(const Globals& g, const std::string& pair, std::size_t size) {
  const auto colon = pair.find(':');
  if (colon == std::string::npos) throw DataError("--pair must look like identity:hadamard4");
  auto [name_a, size_a] = split_basis(pair.substr(0, colon));
  auto [name_b, size_b] = split_basis(pair.substr(colon + 1));
  std::size_t n = size;
  for (std::size_t s : {size_a, size_b}) {
    if (s == 0) continue;
    if (n != 0 && n != s) throw DataError("basis sizes disagree in '" + pair + "'");
    n = s;
  }
  if (n == 0) n = 8;
  const std::uint64_t seed = g.seed.value_or(0);
  const palm::BasisPair bases(palm::named_basis(name_a, n, seed), palm::named_basis(name_b, n, palm::derive_seed(seed, 1)));
  std::cout << std::fixed << std::setprecision(6) << palm::mutual_coherence(bases) << '\n';
  return 0;
}

int run_noise(const Globals& g, const std::string& image_path, const std::string& kind, double level) {
  const palm::GrayImage img = palm::load_pgm(image_path);
  const palm::NoiseSpec spec{palm::parse_noise_kind(kind), level, g.seed.value_or(0)};
  palm::save_pgm(g.out.empty() ? "noisy.pgm" : g.out, palm::apply_noise(img, spec));
  return 0;
}

int run_operator(const Globals& g, const std::string& kind, std::size_t m, std::size_t n) {
  const std::uint64_t seed = g.seed.value_or(0);
  const palm::SensingOperator a = palm::parse_operator_kind(kind) == palm::OperatorKind::PartialDct
                                      ? palm::make_partial_dct(m, n, seed)
                                      : palm::make_gaussian_orthonormal(m, n, seed);
  palm::write_file_bytes(g.out.empty() ? "operator.bin" : g.out, palm::serialize_operator(a));
  return 0;
}

int run_measure(const Globals& g, const std::string& op_path, const std::string& signal_path) {
  const palm::SensingOperator a = load_operator(op_path);
  write_vector_to(g.out, palm::matvec(a, read_vector(signal_path)));
  return 0;
}

int run_phantom(const Globals& g, std::size_t width, std::size_t height) {
  palm::save_pgm(g.out.empty() ? "phantom.pgm" : g.out, palm::synthetic_scene(width, height, g.seed.value_or(0)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PALM l1 sparse recovery and compressive-sensing image experiments", "palm_cli"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Master seed");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_flag("--quiet", g.quiet, "Suppress informational output");
  app.add_flag("--trace", g.trace, "Per-iteration solver trace on stderr");

  std::string op_path, b_path, image_path, config_path, pair, kind = "gaussian", noise, noise_kind;
  double ratio = 0.5, level = 0.0;
  std::size_t size = 0, rows = 0, cols = 0, width = 256, height = 256;
  SolverFlags solve_flags, recon_flags;

  auto* solve = app.add_subcommand("solve", "Solve for x from a serialized operator and a measurement vector");
  solve->add_option("--operator", op_path, "Operator container file")->required();
  solve->add_option("--measurements", b_path, "Measurement vector (whitespace-separated numbers)")->required();
  solve_flags.attach(solve);

  auto* recon = app.add_subcommand("reconstruct", "Sense and reconstruct one PGM image");
  recon->add_option("--image", image_path, "Input PGM")->required();
  recon->add_option("--ratio", ratio, "Measurements per pixel, in (0, 1]")->capture_default_str();
  recon->add_option("--operator", kind, "gaussian or dct")->capture_default_str();
  recon->add_option("--noise", noise, "Corrupt the input first, e.g. salt_pepper:0.05");
  recon_flags.tol_feasibility = recon_flags.tol_x_change = palm::sweep_solver_defaults().tol_feasibility;
  recon_flags.attach(recon);

  auto* bench = app.add_subcommand("bench", "Run a noise sweep from a config file");
  bench->add_option("--config", config_path, "key = value config file")->required();

  auto* coh = app.add_subcommand("coherence", "Mutual coherence of a named basis pair");
  coh->add_option("--pair", pair, "e.g. identity:hadamard4, dct:identity, random:dct")->required();
  coh->add_option("--size", size, "Basis size when the names carry none (default 8)");

  auto* noise_cmd = app.add_subcommand("noise", "Apply a noise model to a PGM image");
  noise_cmd->add_option("--image", image_path, "Input PGM")->required();
  noise_cmd->add_option("--kind", noise_kind, "gaussian, salt_pepper or speckle")->required();
  noise_cmd->add_option("--level", level, "Noise level in (0, 1]")->required();

  auto* op_cmd = app.add_subcommand("operator", "Write a sensing operator container");
  op_cmd->add_option("--kind", kind, "gaussian or dct")->capture_default_str();
  op_cmd->add_option("-m,--rows", rows, "Measurements")->required();
  op_cmd->add_option("-n,--cols", cols, "Signal length")->required();

  auto* measure = app.add_subcommand("measure", "Apply a serialized operator to a signal vector");
  measure->add_option("--operator", op_path, "Operator container file")->required();
  measure->add_option("--signal", b_path, "Signal vector")->required();

  auto* phantom = app.add_subcommand("phantom", "Write a deterministic synthetic test image");
  phantom->add_option("--width", width)->capture_default_str();
  phantom->add_option("--height", height)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (*solve) return run_solve(g, op_path, b_path, solve_flags);
    if (*recon) {
      bool given = false;
      for (const char* name : {"--mu", "--mu-relative", "--beta", "--tau", "--gamma", "--max-iter", "--tol-feasibility", "--tol-x"})
        given = given || recon->count(name) > 0;
      return run_reconstruct(g, image_path, ratio, kind, noise, recon_flags, given);
    }
    if (*bench) return run_bench(g, config_path);
    if (*coh) return run_coherence(g, pair, size);
    if (*noise_cmd) return run_noise(g, image_path, noise_kind, level);
    if (*op_cmd) return run_operator(g, kind, rows, cols);
    if (*measure) return run_measure(g, op_path, b_path);
    if (*phantom) return run_phantom(g, width, height);
  } catch (const palm::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
