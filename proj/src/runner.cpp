#include "mstnpi/runner.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <unsupported/Eigen/KroneckerProduct>

#include "mstnpi/oracles.hpp"

namespace mstnpi {

OracleKind parse_oracle_kind(const std::string& name) {
  if (name == "none") return OracleKind::None;
  if (name == "path-sum") return OracleKind::PathSum;
  if (name == "dense") return OracleKind::Dense;
  if (name == "exact-diag") return OracleKind::ExactDiag;
  throw ParameterError("--oracle: unknown oracle '" + name + "' (expected none|path-sum|dense|exact-diag)");
}

std::string to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::None: return "none";
    case OracleKind::PathSum: return "path-sum";
    case OracleKind::Dense: return "dense";
    case OracleKind::ExactDiag: return "exact-diag";
  }
  return "?";
}

MatrixProductState resolve_initial_state(const SimulationConfig& config) {
  const std::string& s = config.initial_state;
  if (s == "all_up" || s == "all_down" || s == "neel") return named_initial_state(s, config.model.num_sites);
  MatrixProductState st = load_mps(s);
  if (st.length() != config.model.num_sites)
    throw ParameterError("initial_state: MPS file has " + std::to_string(st.length()) + " sites, config has P=" +
                         std::to_string(config.model.num_sites));
  return st;
}

std::vector<StepRecord> run_engine(const SimulationConfig& config) {
  Engine engine(config, resolve_initial_state(config));
  engine.run();
  return engine.history();
}

namespace {

CMatrix site_operator(const CMatrix& op, std::size_t site, std::size_t num_sites) {
  const auto left = static_cast<Eigen::Index>(std::size_t{1} << site);
  const auto right = static_cast<Eigen::Index>(std::size_t{1} << (num_sites - site - 1));
  return Eigen::kroneckerProduct(Eigen::kroneckerProduct(CMatrix::Identity(left, left), op).eval(),
                                 CMatrix::Identity(right, right))
      .eval();
}

std::vector<StepRecord> records_from_states(const SimulationConfig& config, const std::vector<CMatrix>& states) {
  std::vector<StepRecord> out;
  const std::size_t p = config.model.num_sites;
  for (std::size_t n = 1; n < states.size(); ++n) {
    StepRecord rec;
    rec.step = n;
    rec.time = config.dt * static_cast<double>(n);
    rec.trace = states[n].trace();
    for (const auto& o : config.observables)
      rec.observables.push_back((states[n] * site_operator(observable_matrix(o.op), o.site, p)).trace());
    out.push_back(std::move(rec));
  }
  return out;
}

CMatrix dense_initial(const SimulationConfig& config) {
  const MatrixProductState st = resolve_initial_state(config);
  return density_matrix(to_dense(st), config.model.num_sites, 2);
}

std::vector<CMatrix> exact_diag_states(const SimulationConfig& config, const std::vector<std::size_t>& levels) {
  const BathModel& bath = *config.bath;
  return exact_diag_system_bath(config.model, bath.modes, levels, bath.beta, dense_initial(config), config.dt,
                                config.num_steps, bath.coupling_operator);
}

}  // namespace

ExactDiagRun converged_exact_diag(const SimulationConfig& config, std::size_t start, double tolerance) {
  if (!config.bath || config.bath->spectral != SpectralKind::Discrete)
    throw ParameterError("exact-diag oracle: needs a discrete bath (set bath_modes = w:c, ...)");
  if (config.model.num_sites > 2) throw ParameterError("exact-diag oracle: P must be <= 2");
  auto change_between = [](const std::vector<CMatrix>& a, const std::vector<CMatrix>& b) {
    double change = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) change = std::max(change, (a[n] - b[n]).cwiseAbs().maxCoeff());
    return change;
  };
  // Grow one mode at a time: a mode is settled once two more levels on it
  // move no density-matrix element by more than the tolerance.
  ExactDiagRun run;
  run.levels.assign(config.bath->modes.size(), start);
  run.states = exact_diag_states(config, run.levels);
  for (bool grew = true; grew;) {
    grew = false;
    run.level_change = 0.0;
    for (std::size_t l = 0; l < run.levels.size(); ++l) {
      std::vector<std::size_t> finer = run.levels;
      finer[l] += 2;
      std::vector<CMatrix> next = exact_diag_states(config, finer);
      const double change = change_between(next, run.states);
      if (change > tolerance) {
        run.levels = std::move(finer);
        run.states = std::move(next);
        grew = true;
      } else {
        run.level_change = std::max(run.level_change, change);
      }
    }
  }
  return run;
}

std::vector<StepRecord> run_oracle(const SimulationConfig& config, OracleKind kind) {
  config.validate();
  const std::size_t p = config.model.num_sites;
  switch (kind) {
    case OracleKind::None: return {};
    case OracleKind::Dense: {
      if (config.bath) throw ParameterError("dense oracle: the config has a bath; use --oracle path-sum or exact-diag");
      if (p > 7) throw ParameterError("dense oracle: P must be <= 7");
      return records_from_states(config, dense_liouville_propagate(config.model, dense_initial(config), config.dt,
                                                                   config.num_steps));
    }
    case OracleKind::PathSum: {
      if (p > 2) throw ParameterError("path-sum oracle: P must be <= 2");
      if (config.num_steps > 6) throw ParameterError("path-sum oracle: nsteps must be <= 6");
      EtaTable eta = config.bath ? eta_coefficients(*config.bath, config.dt, config.memory_length)
                                 : EtaTable(config.dt, config.memory_length);
      return records_from_states(config, brute_force_path_sum(dense_trotter_unitary(config.model, config.dt), p, eta,
                                                               dense_initial(config), config.num_steps));
    }
    case OracleKind::ExactDiag: return records_from_states(config, converged_exact_diag(config).states);
  }
  return {};
}

ScanSpec parse_scan(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ParameterError("--scan: expected PARAM=v1,v2,... (PARAM is dt, L or chi)");
  ScanSpec s;
  s.parameter = text.substr(0, eq);
  if (s.parameter != "dt" && s.parameter != "L" && s.parameter != "chi")
    throw ParameterError("--scan: unknown parameter '" + s.parameter + "' (expected dt|L|chi)");
  std::stringstream ss(text.substr(eq + 1));
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) s.values.push_back(item);
  if (s.values.empty()) throw ParameterError("--scan: no values given");
  return s;
}

SimulationConfig with_scan_value(const SimulationConfig& config, const std::string& parameter, const std::string& value) {
  SimulationConfig c = config;
  try {
    std::size_t used = 0;
    if (parameter == "L") {
      const long v = std::stol(value, &used);
      if (v < 1) throw ParameterError("memory_L: L out of range (need 1 <= L <= nsteps)");
      c.memory_length = static_cast<std::size_t>(v);
    } else {
      const double v = std::stod(value, &used);
      if (parameter == "dt") c.dt = v;
      else c.cutoff = v;
    }
    if (used != value.size()) throw std::invalid_argument("trailing characters");
  } catch (const ParameterError&) {
    throw;
  } catch (const std::exception&) {
    throw ParameterError("--scan: bad value '" + value + "' for " + parameter);
  }
  c.validate();
  return c;
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("MSTNPI_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RunManifest run_command(const RunOptions& options, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  std::ifstream in(options.config_path);
  if (!in) throw ParameterError("--config: cannot open '" + options.config_path + "'");
  std::stringstream text;
  text << in.rdbuf();
  const SimulationConfig base = parse_config(text.str());
  const std::filesystem::path dir(options.output_dir);
  std::filesystem::create_directories(dir);
  const std::string stem = std::filesystem::path(options.config_path).stem().string();

  struct Job {
    SimulationConfig config;
    std::string label;
  };
  std::vector<Job> jobs;
  if (options.scan) {
    for (const auto& v : options.scan->values)
      jobs.push_back({with_scan_value(base, options.scan->parameter, v), stem + "_" + options.scan->parameter + "=" + v});
  } else {
    jobs.push_back({base, stem});
  }

  std::vector<std::vector<std::string>> outputs(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < jobs.size(); k = next++) {
      try {
        const Job& job = jobs[k];
        const auto history = run_engine(job.config);
        const auto traj = (dir / (job.label + ".csv")).string();
        const auto bonds = (dir / (job.label + "_bonds.csv")).string();
        std::ofstream(traj) << [&] {
          std::ostringstream os;
          write_trajectory_csv(os, job.config, history);
          return os.str();
        }();
        std::ofstream(bonds) << [&] {
          std::ostringstream os;
          write_bond_csv(os, history);
          return os.str();
        }();
        outputs[k] = {traj, bonds};
        if (options.oracle != OracleKind::None) {
          const auto ref = run_oracle(job.config, options.oracle);
          const auto path = (dir / (job.label + "_" + to_string(options.oracle) + ".csv")).string();
          std::ofstream os(path);
          write_trajectory_csv(os, job.config, ref);
          outputs[k].push_back(path);
          double dev = 0.0;
          for (std::size_t n = 0; n < ref.size() && n < history.size(); ++n)
            for (std::size_t o = 0; o < ref[n].observables.size(); ++o)
              dev = std::max(dev, std::abs(ref[n].observables[o] - history[n].observables[o]));
          std::lock_guard<std::mutex> lock(log_mutex);
          log << job.label << ": max |engine - " << to_string(options.oracle) << "| = " << dev << "\n";
        }
        std::lock_guard<std::mutex> lock(log_mutex);
        log << job.label << ": wrote " << traj << "\n";
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t nthreads = std::min(worker_threads(), jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  RunManifest m;
  m.config_text = format_config(base);
  m.version = MSTNPI_VERSION;
  m.dt = base.dt;
  m.memory_length = base.memory_length;
  m.cutoff = base.cutoff;
  m.oracle = to_string(options.oracle);
  if (options.scan) {
    m.scan = options.scan->parameter + "=";
    for (std::size_t k = 0; k < options.scan->values.size(); ++k) m.scan += (k ? "," : "") + options.scan->values[k];
  }
  for (auto& o : outputs) m.outputs.insert(m.outputs.end(), o.begin(), o.end());
  m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto manifest_path = (dir / (stem + ".manifest.json")).string();
  std::ofstream(manifest_path) << manifest_to_json(m);
  log << "manifest: " << manifest_path << "\n";
  return m;
}

}  // namespace mstnpi
