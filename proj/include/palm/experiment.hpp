#pragma once

// Image reconstruction pipeline and the sweep harness.
//
// Every image column s (length n = height) is treated as s = Psi theta with
// Psi the inverse orthonormal DCT. The column is measured as b = Phi s with
// an m x n operator Phi (m = round(ratio * n)), PALM recovers theta from
// b = (Phi Psi) theta, and the column is resynthesized as Psi theta.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "palm/error.hpp"
#include "palm/imageio.hpp"
#include "palm/linops.hpp"
#include "palm/metrics.hpp"
#include "palm/noise.hpp"
#include "palm/rng.hpp"
#include "palm/sensing.hpp"
#include "palm/solver.hpp"

namespace palm {

enum class OperatorKind { GaussianOrthonormal, PartialDct };

inline OperatorKind parse_operator_kind(std::string_view s) {
  if (s == "gaussian") return OperatorKind::GaussianOrthonormal;
  if (s == "dct") return OperatorKind::PartialDct;
  throw std::invalid_argument("unknown operator kind '" + std::string(s) + "' (expected gaussian or dct)");
}

inline std::string_view to_string(OperatorKind k) noexcept {
  return k == OperatorKind::PartialDct ? "dct" : "gaussian";
}

// Seed streams split off the master seed.
inline constexpr std::uint64_t kOperatorStream = 1;
inline constexpr std::uint64_t kNoiseStream = 2;

inline std::uint64_t noise_seed(std::uint64_t master, std::size_t image_index, std::size_t cell_index) {
  return derive_seed(derive_seed(derive_seed(master, kNoiseStream), image_index), cell_index);
}

// Solver defaults for whole-image sweeps: the image-level error stops
// improving long before the 1e-6 library tolerances are met.
inline PalmSettings sweep_solver_defaults() {
  PalmSettings s;
  s.tol_feasibility = 1e-3;
  s.tol_x_change = 1e-3;
  return s;
}

struct ExperimentConfig {
  std::vector<std::string> image_paths;
  std::vector<NoiseSpec> noise_grid;  // empty: clean rows only
  bool include_clean = true;
  double measurement_ratio = 0.5;
  OperatorKind operator_kind = OperatorKind::GaussianOrthonormal;
  PalmSettings solver = sweep_solver_defaults();
  std::uint64_t master_seed = 0;
  std::string output_dir = ".";
  unsigned threads = 1;
  bool save_images = true;

  void validate() const {
    if (!(measurement_ratio > 0 && measurement_ratio <= 1)) throw std::invalid_argument("measurement ratio must lie in (0, 1]");
    if (threads < 1) throw std::invalid_argument("threads must be at least 1");
    for (const auto& n : noise_grid)
      if (!(n.level > 0 && n.level <= 1)) throw std::invalid_argument("noise level must lie in (0, 1]");
  }
};

// All 12 cells of the noise table (3 kinds x 4 levels). Seeds are filled in
// per image by run_experiment.
inline std::vector<NoiseSpec> table_noise_grid() {
  std::vector<NoiseSpec> grid;
  for (NoiseKind k : {NoiseKind::Gaussian, NoiseKind::SaltPepper, NoiseKind::Speckle})
    for (double level : kTableLevels) grid.push_back({k, level, 0});
  return grid;
}

// A = Phi * Psi for n-pixel columns, plus the synthesis basis.
struct ColumnSensing {
  SensingOperator a;
  SensingOperator dct;  // rows are DCT atoms; Psi = dct^T
  SensingOperator phi;
};

inline ColumnSensing make_column_sensing(std::size_t n, double ratio, OperatorKind kind, std::uint64_t master_seed) {
  const auto m = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n))), 1, n);
  const std::uint64_t seed = derive_seed(master_seed, kOperatorStream);
  SensingOperator phi = kind == OperatorKind::PartialDct ? make_partial_dct(m, n, seed) : make_gaussian_orthonormal(m, n, seed);
  const Mat d = dct_matrix(n);
  SensingOperator a(multiply(phi.matrix(), d.transpose()), true);
  return {std::move(a), SensingOperator(d, true), std::move(phi)};
}

struct Reconstruction {
  GrayImage image;
  std::vector<double> field;  // column-major, before quantization
  QualityReport quality;
  std::size_t failed_blocks = 0;
  std::size_t unconverged_blocks = 0;
  std::size_t total_iterations = 0;
};

namespace detail {

// Runs body(i) for i in [0, count) on `threads` workers. Each index is
// handled exactly once; results must be written to per-index slots.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, count); ++t)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
}

}  // namespace detail

// Reconstructs `input` column by column and scores it against `reference`
// (normally the image before noise was added).
inline Reconstruction reconstruct_image(const GrayImage& input, const GrayImage& reference, const ExperimentConfig& cfg,
                                        const ColumnSensing& sensing) {
  cfg.validate();
  if (input.width() != reference.width() || input.height() != reference.height())
    throw DimensionError("reference image size", reference.size(), input.size());
  if (sensing.a.cols() != input.height()) throw DimensionError("sensing operator columns vs image height", input.height(), sensing.a.cols());

  const std::vector<Vec> blocks = image_to_blocks(input, input.height());
  std::vector<Vec> recovered(blocks.size());
  std::vector<std::size_t> iterations(blocks.size(), 0);
  std::vector<char> converged(blocks.size(), 0);
  std::vector<char> failed(blocks.size(), 0);

  Reconstruction out;
  out.quality.elapsed_seconds = time_block([&] {
    detail::parallel_for(blocks.size(), cfg.threads, [&](std::size_t i) {
      const Vec b = matvec(sensing.phi, blocks[i]);
      try {
        const PalmResult res = solve(sensing.a, b, cfg.solver.resolve(b));
        recovered[i] = adjoint_matvec(sensing.dct, res.x);
        iterations[i] = res.iterations;
        converged[i] = res.converged ? 1 : 0;
      } catch (const DivergenceError&) {
        recovered[i] = Vec(blocks[i].size(), 0.0);
        failed[i] = 1;
      }
    });
  });

  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out.total_iterations += iterations[i];
    out.failed_blocks += failed[i] ? 1 : 0;
    out.unconverged_blocks += (!failed[i] && !converged[i]) ? 1 : 0;
  }
  out.field = blocks_to_field(recovered, input.width(), input.height());
  out.image = field_to_image(out.field, input.width(), input.height());
  out.quality.rmse = rmse(reference, out.field);
  out.quality.psnr_db = psnr_from_rmse(out.quality.rmse);
  return out;
}

inline Reconstruction reconstruct_image(const GrayImage& input, const GrayImage& reference, const ExperimentConfig& cfg) {
  return reconstruct_image(input, reference, cfg,
                           make_column_sensing(input.height(), cfg.measurement_ratio, cfg.operator_kind, cfg.master_seed));
}

inline Reconstruction reconstruct_image(const GrayImage& img, const ExperimentConfig& cfg) {
  return reconstruct_image(img, img, cfg);
}

enum class RowStatus { Ok, SolverFailed, ReadError };

inline std::string_view to_string(RowStatus s) noexcept {
  switch (s) {
    case RowStatus::Ok: return "ok";
    case RowStatus::SolverFailed: return "solver_failed";
    case RowStatus::ReadError: return "read_error";
  }
  return "unknown";
}

struct ExperimentRow {
  std::string image_name;
  std::string noise_kind;  // "none" for clean rows
  double level_percent = 0;
  double psnr_db = 0;
  double rmse = 0;
  double elapsed_seconds = 0;
  RowStatus status = RowStatus::Ok;
};

inline constexpr std::string_view kCsvHeader = "image,noise,level_percent,psnr_db,rmse,time_sec,status";

inline std::string format_csv_row(const ExperimentRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%g,%.6f,%.6f,%.6f,%s", row.image_name.c_str(), row.noise_kind.c_str(),
                row.level_percent, row.psnr_db, row.rmse, row.elapsed_seconds, std::string(to_string(row.status)).c_str());
  return buf;
}

inline std::string format_csv(std::span<const ExperimentRow> rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) out += format_csv_row(r) + '\n';
  return out;
}

// "<image>_<noise>_<level%>_s<seed>.pgm", e.g. "lena_salt_pepper_05_s42.pgm".
inline std::string reconstruction_filename(std::string_view image_name, std::string_view noise_kind, double level_percent,
                                           std::uint64_t seed) {
  char level[16];
  std::snprintf(level, sizeof level, "%02d", static_cast<int>(std::lround(level_percent)));
  return std::string(image_name) + "_" + std::string(noise_kind) + "_" + level + "_s" + std::to_string(seed) + ".pgm";
}

struct ExperimentReport {
  std::vector<ExperimentRow> rows;
  std::vector<std::string> errors;
  std::string csv_path;

  bool any(RowStatus s) const {
    return std::any_of(rows.begin(), rows.end(), [s](const ExperimentRow& r) { return r.status == s; });
  }
};

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.image_paths.empty()) throw std::invalid_argument("experiment needs at least one image");
  std::filesystem::create_directories(cfg.output_dir);

  ExperimentReport report;
  const bool clean = cfg.include_clean || cfg.noise_grid.empty();
  std::optional<ColumnSensing> sensing;

  for (std::size_t i = 0; i < cfg.image_paths.size(); ++i) {
    const std::string& path = cfg.image_paths[i];
    const std::string name = std::filesystem::path(path).stem().string();
    GrayImage img;
    try {
      img = load_pgm(path);
    } catch (const Error& e) {
      report.errors.push_back(path + ": " + e.what());
      report.rows.push_back({name, "none", 0, std::nan(""), std::nan(""), 0, RowStatus::ReadError});
      continue;
    }
    if (!sensing || sensing->a.cols() != img.height())
      sensing = make_column_sensing(img.height(), cfg.measurement_ratio, cfg.operator_kind, cfg.master_seed);

    auto run_cell = [&](const GrayImage& input, std::string noise_name, double level) {
      const Reconstruction rec = reconstruct_image(input, img, cfg, *sensing);
      ExperimentRow row{name, std::move(noise_name), level * 100.0, rec.quality.psnr_db, rec.quality.rmse,
                        rec.quality.elapsed_seconds, rec.failed_blocks ? RowStatus::SolverFailed : RowStatus::Ok};
      if (cfg.save_images)
        save_pgm((std::filesystem::path(cfg.output_dir) /
                  reconstruction_filename(name, row.noise_kind, row.level_percent, cfg.master_seed))
                     .string(),
                 rec.image);
      report.rows.push_back(std::move(row));
    };

    if (clean) run_cell(img, "none", 0.0);
    for (std::size_t c = 0; c < cfg.noise_grid.size(); ++c) {
      NoiseSpec spec = cfg.noise_grid[c];
      spec.seed = noise_seed(cfg.master_seed, i, c);
      run_cell(apply_noise(img, spec), std::string(to_string(spec.kind)), spec.level);
    }
  }

  report.csv_path = (std::filesystem::path(cfg.output_dir) / "results.csv").string();
  std::ofstream csv(report.csv_path, std::ios::binary);
  if (!csv) throw Error("cannot write '" + report.csv_path + "'");
  csv << format_csv(report.rows);
  return report;
}

// Flat "key = value" configuration, '#' starts a comment.
//
//   images          comma-separated PGM paths, relative to the config file
//   noise           none | table | comma-separated kind:level (e.g. gaussian:0.05)
//   include_clean   true | false
//   ratio           measurements per pixel, in (0, 1]
//   operator        gaussian | dct
//   seed            master seed
//   output_dir      where results.csv and reconstructions go (relative to cwd)
//   threads         worker threads per image
//   save_images     true | false
//   mu, beta        solver parameters (data-dependent default when omitted)
//   mu_relative     mu = mu_relative * ||b||_inf per block when mu is omitted
//   tau, gamma, max_iter, tol_feasibility, tol_x_change
namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || used == 0) throw Error("config key '" + key + "': not a number: '" + v + "'");
  return d;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw Error("config key '" + key + "': not an unsigned integer: '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config key '" + key + "': expected true or false, got '" + v + "'");
}

}  // namespace detail

inline std::vector<NoiseSpec> parse_noise_grid(std::string_view text) {
  const std::string t = detail::trim(text);
  if (t.empty() || t == "none") return {};
  if (t == "table") return table_noise_grid();
  std::vector<NoiseSpec> grid;
  for (const auto& item : detail::split_list(t)) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error("noise cell '" + item + "' must be kind:level");
    NoiseSpec spec;
    try {
      spec.kind = parse_noise_kind(detail::trim(item.substr(0, colon)));
    } catch (const std::invalid_argument& e) {
      throw Error(e.what());
    }
    spec.level = detail::parse_double("noise", detail::trim(item.substr(colon + 1)));
    if (!(spec.level > 0 && spec.level <= 1)) throw Error("noise level in '" + item + "' must lie in (0, 1]");
    grid.push_back(spec);
  }
  return grid;
}

inline ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string stripped = detail::trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));

    if (key == "images") {
      cfg.image_paths.clear();
      for (const auto& p : detail::split_list(value)) {
        const std::filesystem::path path(p);
        cfg.image_paths.push_back((path.is_absolute() || base_dir.empty() ? path : base_dir / path).string());
      }
    } else if (key == "noise") {
      cfg.noise_grid = parse_noise_grid(value);
    } else if (key == "include_clean") {
      cfg.include_clean = detail::parse_bool(key, value);
    } else if (key == "ratio") {
      cfg.measurement_ratio = detail::parse_double(key, value);
    } else if (key == "operator") {
      try {
        cfg.operator_kind = parse_operator_kind(value);
      } catch (const std::invalid_argument& e) {
        throw Error(e.what());
      }
    } else if (key == "seed") {
      cfg.master_seed = detail::parse_u64(key, value);
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else if (key == "threads") {
      cfg.threads = static_cast<unsigned>(detail::parse_u64(key, value));
    } else if (key == "save_images") {
      cfg.save_images = detail::parse_bool(key, value);
    } else if (key == "mu") {
      cfg.solver.mu = detail::parse_double(key, value);
    } else if (key == "mu_relative") {
      cfg.solver.mu_relative = detail::parse_double(key, value);
    } else if (key == "beta") {
      cfg.solver.beta = detail::parse_double(key, value);
    } else if (key == "tau") {
      cfg.solver.tau = detail::parse_double(key, value);
    } else if (key == "gamma") {
      cfg.solver.gamma = detail::parse_double(key, value);
    } else if (key == "max_iter") {
      cfg.solver.max_iter = detail::parse_u64(key, value);
    } else if (key == "tol_feasibility") {
      cfg.solver.tol_feasibility = detail::parse_double(key, value);
    } else if (key == "tol_x_change") {
      cfg.solver.tol_x_change = detail::parse_double(key, value);
    } else {
      throw Error("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw Error(std::string("invalid config: ") + e.what());
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                      std::filesystem::path(path).parent_path());
}

}  // namespace palm
