// psdpoly command-line driver.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "psdpoly/psdpoly.hpp"

namespace fs = std::filesystem;
using namespace psdpoly;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::string out;
};

// Writes to --out, or stdout when it is empty or "-".
void emit(const Globals& g, const std::string& text) {
  if (g.out.empty() || g.out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(g.out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + g.out + "'");
  os << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

ErrorCertificate certify(const CompositeFilter& f, bool full, std::size_t grid_n, unsigned threads) {
  if (full) return e_float_full(f, threads);
  return e_float_grid(f, SampleGrid::make(GridScheme::Mixed, grid_n));
}

SymmetricMatrix load_symmetric(const fs::path& p, bool fix) {
  Matrix m = load_matrix(p);
  if (!m.square()) throw std::invalid_argument("matrix '" + p.string() + "' is not square");
  if (fix) return symmetrize(m);
  try {
    return SymmetricMatrix(std::move(m));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string(e.what()) + " (pass --symmetrize to use (A + A^T) / 2)");
  }
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
  return v;
}

// ---------------------------------------------------------------------------
// bench

struct BenchmarkRow {
  std::string dataset;
  std::size_t n = 0;
  std::string method;
  double rel_error = 0.0;
  std::size_t gemm_count = 0;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
};

struct BenchTask {
  DatasetSpec spec;
  std::string label;
  std::string method;
};

struct BenchFilters {
  CompositeFilter half, single;
};

std::function<Projection(const SymmetricMatrix&)> bench_method(const std::string& m,
                                                                const BenchFilters& f,
                                                                std::uint64_t seed) {
  if (m == "composite-half") {
    auto cfg = ProjectionConfig::half(f.half);
    cfg.seed = seed;
    return [cfg](const SymmetricMatrix& x) { return project_psd(x, cfg); };
  }
  if (m == "composite-single") {
    auto cfg = ProjectionConfig::single(f.single);
    cfg.seed = seed;
    return [cfg](const SymmetricMatrix& x) { return project_psd(x, cfg); };
  }
  if (m.rfind("newton-schulz-", 0) == 0) {
    ProjectionConfig cfg{newton_schulz_filter(std::stoi(m.substr(14))), PrecisionMode::f32(),
                         Stabilization::None};
    cfg.seed = seed;
    return [cfg](const SymmetricMatrix& x) { return project_psd(x, cfg); };
  }
  if (m == "eig-oracle")
    return [](const SymmetricMatrix& x) { return Projection{eig_project(x), {}}; };
  throw std::invalid_argument("bench: unknown method '" + m + "'");
}

BenchmarkRow run_bench_task(const BenchTask& t, const BenchFilters& f, int runs) {
  const auto x = generate(t.spec);
  const auto method = bench_method(t.method, f, t.spec.seed);
  Projection p;
  double total = 0.0;
  for (int r = 0; r < runs; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    p = method(x);
    total += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  BenchmarkRow row;
  row.dataset = t.label;
  row.n = t.spec.n;
  row.method = t.method;
  row.rel_error = rel_error(p.result, x);
  row.gemm_count = p.report.gemm_count;
  row.wall_ms = total / runs;
  row.seed = t.spec.seed;
  return row;
}

// Spec: {"datasets": [{"family": "...", "n": 200, "seeds": [..], "spectrum": [..], "gap": g}],
//        "methods": [...], "filter_half": path, "filter_single": path, "runs": 5}
std::string cmd_bench(const fs::path& spec_path, const Globals& g) {
  nlohmann::json j = nlohmann::json::parse(read_text(spec_path));
  const fs::path base = spec_path.parent_path();
  // Without explicit files the stage-I designs are used.
  auto resolve = [&](const std::string& key) -> CompositeFilter {
    if (j.contains(key)) {
      fs::path p = j.at(key).get<std::string>();
      return load_filter(p.is_absolute() ? p : base / p);
    }
    return key == "filter_half" ? sequential_remez(7, 5, 1e-3).filter
                                : sequential_remez(10, 5, 1e-4).filter;
  };
  const BenchFilters filters{resolve("filter_half"), resolve("filter_single")};
  const int runs = j.value("runs", 5);
  if (runs < 1) throw std::invalid_argument("bench: runs must be >= 1");
  const auto methods = j.at("methods").get<std::vector<std::string>>();

  std::vector<BenchTask> tasks;
  for (const auto& d : j.at("datasets")) {
    DatasetSpec spec;
    spec.family = parse_dataset_family(d.at("family").get<std::string>());
    spec.n = d.at("n").get<std::size_t>();
    if (d.contains("spectrum")) spec.spectrum.values = d.at("spectrum").get<std::vector<double>>();
    spec.spectrum.gap = d.value("gap", 1e-3);
    std::vector<std::uint64_t> seeds{g.seed};
    if (d.contains("seeds")) seeds = d.at("seeds").get<std::vector<std::uint64_t>>();
    const std::string label = d.value("label", std::string(to_string(spec.family)));
    for (const auto& m : methods)
      for (auto s : seeds) {
        spec.seed = s;
        tasks.push_back({spec, label, m});
      }
  }
  std::stable_sort(tasks.begin(), tasks.end(), [](const BenchTask& a, const BenchTask& b) {
    return std::tie(a.label, a.method, a.spec.seed) < std::tie(b.label, b.method, b.spec.seed);
  });

  std::vector<BenchmarkRow> rows(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < tasks.size();) {
      try {
        rows[i] = run_bench_task(tasks[i], filters, runs);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < std::min<std::size_t>(g.threads, tasks.size()); ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (!errors[i].empty()) throw std::runtime_error("bench task " + tasks[i].label + "/" + tasks[i].method + ": " + errors[i]);

  std::ostringstream os;
  os << "dataset,n,method,rel_error,gemm_count,wall_ms,seed\n";
  for (const auto& r : rows) {
    char ms[32];
    std::snprintf(ms, sizeof ms, "%.3f", r.wall_ms);
    os << r.dataset << ',' << r.n << ',' << r.method << ',' << format_g17(r.rel_error) << ','
       << r.gemm_count << ',' << ms << ',' << r.seed << '\n';
  }
  return os.str();
}

std::string report_json(const ProjectionReport& r, const CompositeFilter& f) {
  std::ostringstream os;
  os << "{\n  \"lambda_tilde\": " << format_g17(r.lambda_tilde) << ",\n  \"gemm_count\": " << r.gemm_count
     << ",\n  \"overflow_flag\": " << (r.overflow_flag ? "true" : "false")
     << ",\n  \"filter_hash\": \"" << filter_hash(f) << "\",\n  \"stage_norms\": [";
  for (std::size_t i = 0; i < r.stage_norms.size(); ++i) os << (i ? ", " : "") << format_g17(r.stage_norms[i]);
  os << "]\n}\n";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composite polynomial filters for PSD projection"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Globals g;
  app.add_option("--seed", g.seed, "RNG seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output file (default stdout)");

  // design
  auto* design = app.add_subcommand("design", "Stage-wise minimax design");
  double d_eps = 1e-3;
  int d_T = 7, d_degree = 5;
  std::vector<int> d_degrees;
  design->add_option("--epsilon", d_eps)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  design->add_option("--T", d_T)->check(CLI::PositiveNumber)->capture_default_str();
  design->add_option("--degree", d_degree)->capture_default_str();
  design->add_option("--degrees", d_degrees, "One odd degree per stage")->delimiter(',');

  // refine
  auto* refine_cmd = app.add_subcommand("refine", "Adam refinement of a coefficient file");
  std::string r_in, r_cert, r_grid = "Mixed";
  RefineConfig r_cfg;
  std::size_t r_grid_n = 16384, r_cert_grid = 1u << 20;
  bool r_full = false;
  refine_cmd->add_option("input", r_in)->required()->check(CLI::ExistingFile);
  refine_cmd->add_option("--max-iters", r_cfg.max_iters)->check(CLI::NonNegativeNumber)->capture_default_str();
  refine_cmd->add_option("--step", r_cfg.step_size)->capture_default_str();
  refine_cmd->add_option("--hard-tail", r_cfg.hard_max_tail)->capture_default_str();
  refine_cmd->add_option("--grid", r_grid, "Uniform, Chebyshev or Mixed")->capture_default_str();
  refine_cmd->add_option("--grid-size", r_grid_n)->capture_default_str();
  refine_cmd->add_option("--cert", r_cert, "Certificate output path");
  refine_cmd->add_flag("--full-enum", r_full, "Certify by full float32 enumeration");
  refine_cmd->add_option("--cert-grid", r_cert_grid, "Grid size for the certificate")->capture_default_str();

  // eval-error
  auto* eval = app.add_subcommand("eval-error", "Certify e_float of a coefficient file");
  std::string e_in;
  bool e_full = false;
  std::size_t e_grid = 0;
  eval->add_option("input", e_in)->required()->check(CLI::ExistingFile);
  auto* e_full_opt = eval->add_flag("--full-enum", e_full);
  eval->add_option("--grid", e_grid, "Mixed grid of N points")->excludes(e_full_opt);

  // project
  auto* project = app.add_subcommand("project", "PSD projection of a matrix file");
  std::string p_matrix, p_coeffs, p_mode = "f64", p_stab = "none", p_report;
  bool p_sym = false;
  int p_steps = 20;
  project->add_option("matrix", p_matrix)->required()->check(CLI::ExistingFile);
  project->add_option("coeffs", p_coeffs)->required()->check(CLI::ExistingFile);
  project->add_option("--mode", p_mode, "f64, f32 or f16emu")->capture_default_str();
  project->add_option("--stabilization", p_stab, "none, half or single")->capture_default_str();
  project->add_flag("--symmetrize", p_sym, "Accept a nonsymmetric input as (A + A^T) / 2");
  project->add_option("--lanczos-steps", p_steps)->capture_default_str();
  project->add_option("--report", p_report, "ProjectionReport JSON path (default stderr)");

  // bench
  auto* bench = app.add_subcommand("bench", "Benchmark suite to CSV");
  std::string b_spec;
  bench->add_option("spec", b_spec)->required()->check(CLI::ExistingFile);

  // sdp-solve
  auto* sdp_cmd = app.add_subcommand("sdp-solve", "ADMM for a standard-form SDP");
  std::string s_problem, s_warm = "none", s_filter, s_trace;
  SolveSchedule s_sched;
  sdp_cmd->add_option("problem", s_problem)->required();
  sdp_cmd->add_option("--warm", s_warm, "half, single or none")
      ->check(CLI::IsMember({"half", "single", "none"}))
      ->capture_default_str();
  sdp_cmd->add_option("--filter", s_filter, "Coefficient file for the warm phase");
  sdp_cmd->add_option("--threshold", s_sched.warm_threshold)->capture_default_str();
  sdp_cmd->add_option("--tol", s_sched.final_tol)->capture_default_str();
  sdp_cmd->add_option("--max-iters", s_sched.max_iters)->capture_default_str();
  sdp_cmd->add_option("--sigma", s_sched.sigma)->capture_default_str();
  sdp_cmd->add_option("--trace", s_trace, "Trace CSV path (default stderr)");

  // gen-matrix
  auto* gen = app.add_subcommand("gen-matrix", "Synthetic test matrix");
  std::string gm_family = "GaussianSym", gm_spectrum;
  std::size_t gm_n = 100;
  double gm_gap = 1e-3;
  gen->add_option("--family", gm_family)->capture_default_str();
  gen->add_option("--n", gm_n)->capture_default_str();
  gen->add_option("--spectrum", gm_spectrum, "Comma-separated eigenvalues (HaarSpectrum)");
  gen->add_option("--gap", gm_gap)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (design->parsed()) {
      const auto d = d_degrees.empty() ? sequential_remez(d_T, d_degree, d_eps)
                                       : sequential_remez(d_T, d_degrees, d_eps);
      emit(g, filter_to_json(d.filter));
    } else if (refine_cmd->parsed()) {
      r_cfg.grid = SampleGrid::make(parse_grid_scheme(r_grid), r_grid_n);
      r_cfg.seed = g.seed;
      RefineReport rep;
      const auto out = refine(load_filter(r_in), r_cfg, &rep);
      emit(g, filter_to_json(out));
      std::fprintf(stderr, "refine: grid loss %.10e -> %.10e (best iteration %d of %d)\n",
                   rep.initial_loss, rep.final_loss, rep.best_iteration, rep.iterations_run);
      if (!r_cert.empty()) save_certificate(r_cert, certify(out, r_full, r_cert_grid, g.threads));
    } else if (eval->parsed()) {
      const auto f = load_filter(e_in);
      emit(g, certificate_to_json(certify(f, e_full, e_grid ? e_grid : (1u << 20), g.threads)));
    } else if (project->parsed()) {
      if (g.out.empty() || g.out == "-") throw std::invalid_argument("project: --out is required");
      const auto x = load_symmetric(p_matrix, p_sym);
      ProjectionConfig cfg{load_filter(p_coeffs), PrecisionMode::from_tag(parse_precision(p_mode)),
                           parse_stabilization(p_stab), p_steps, g.seed};
      const auto p = project_psd(x, cfg);
      save_matrix(g.out, p.result.matrix());
      const auto rep = report_json(p.report, cfg.filter);
      if (p_report.empty()) {
        std::cerr << rep;
      } else {
        std::ofstream os(p_report);
        if (!os) throw std::runtime_error("cannot write '" + p_report + "'");
        os << rep;
      }
    } else if (bench->parsed()) {
      emit(g, cmd_bench(b_spec, g));
    } else if (sdp_cmd->parsed()) {
      const auto prob = load_sdp(s_problem);
      if (s_warm != "none") {
        const bool half = s_warm == "half";
        CompositeFilter f = !s_filter.empty() ? load_filter(s_filter)
                            : half            ? sequential_remez(7, 5, 1e-3).filter
                                              : sequential_remez(10, 5, 1e-4).filter;
        auto cfg = half ? ProjectionConfig::half(std::move(f)) : ProjectionConfig::single(std::move(f));
        cfg.seed = g.seed;
        s_sched.warm_projector = [cfg](const SymmetricMatrix& v) { return project_psd(v, cfg).result; };
        s_sched.warm_name = "composite-" + s_warm;
      }
      const auto res = solve(prob, s_sched);
      std::ostringstream trace;
      write_trace_csv(trace, res.trace);
      if (s_trace.empty()) {
        std::cerr << trace.str();
      } else {
        std::ofstream os(s_trace);
        if (!os) throw std::runtime_error("cannot write '" + s_trace + "'");
        os << trace.str();
      }
      nlohmann::json sol;
      sol["objective"] = res.objective;
      sol["converged"] = res.converged;
      sol["iterations"] = res.state.iteration;
      sol["switch_iteration"] = res.switch_iteration;
      sol["eta"] = res.final_residual.eta;
      sol["y"] = res.state.y;
      auto xv = res.state.X.matrix().values();
      sol["X"] = std::vector<double>(xv.begin(), xv.end());
      emit(g, sol.dump(2) + "\n");
      if (!res.converged) {
        std::fprintf(stderr, "sdp-solve: not converged after %d iterations\n", res.state.iteration);
        return 3;
      }
    } else if (gen->parsed()) {
      if (g.out.empty() || g.out == "-") throw std::invalid_argument("gen-matrix: --out is required");
      DatasetSpec spec{parse_dataset_family(gm_family), gm_n, g.seed};
      if (!gm_spectrum.empty()) spec.spectrum.values = parse_list(gm_spectrum);
      spec.spectrum.gap = gm_gap;
      save_matrix(g.out, generate(spec).matrix());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "psdpoly: %s\n", e.what());
    return 1;
  }
  return 0;
}
