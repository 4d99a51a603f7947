#include "asub/app.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "asub/estimator.hpp"
#include "asub/io.hpp"
#include "asub/surrogate.hpp"

namespace asub::app {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

/// Typed access to one JSON object with errors naming the full key path.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + path_ + "' must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string key(const char* k) const { return path_.empty() ? k : path_ + "." + k; }
  const json& raw(const char* k) const {
    if (!has(k)) throw ConfigError("missing key '" + key(k) + "'");
    return j_.at(k);
  }

  Section sub(const char* k) const { return Section(raw(k), key(k)); }
  Section sub_or_empty(const char* k) const { return has(k) ? sub(k) : Section(empty(), key(k)); }

  double number(const char* k, std::optional<double> fallback = std::nullopt) const {
    if (!has(k)) {
      if (fallback) return *fallback;
      raw(k);
    }
    const json& v = j_.at(k);
    if (!v.is_number()) throw ConfigError("'" + key(k) + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError("'" + key(k) + "' must be finite");
    return d;
  }

  Index integer(const char* k, std::optional<Index> fallback = std::nullopt) const {
    if (!has(k)) {
      if (fallback) return *fallback;
      raw(k);
    }
    const json& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError("'" + key(k) + "' must be an integer");
    return v.get<Index>();
  }

  Index integer_in(const char* k, Index lo, Index hi, std::optional<Index> fallback = std::nullopt) const {
    const Index v = integer(k, fallback);
    if (v < lo || v > hi)
      throw ConfigError("'" + key(k) + "' = " + std::to_string(v) + " is outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
    return v;
  }

  double positive(const char* k, std::optional<double> fallback = std::nullopt) const {
    const double v = number(k, fallback);
    if (!(v > 0)) throw ConfigError("'" + key(k) + "' must be positive");
    return v;
  }

  std::string string(const char* k, std::optional<std::string> fallback = std::nullopt) const {
    if (!has(k)) {
      if (fallback) return *fallback;
      raw(k);
    }
    if (!j_.at(k).is_string()) throw ConfigError("'" + key(k) + "' must be a string");
    return j_.at(k).get<std::string>();
  }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  const json& j_;
  std::string path_;
};

constexpr Index kMax = Index(1) << 40;

Field field_ref(const json& ref, const std::string& key, const RunConfig& cfg, const fs::path& base) {
  if (ref.is_string()) {
    const fs::path p = base / ref.get<std::string>();
    if (!fs::exists(p)) throw ConfigError("'" + key + "': file " + p.string() + " does not exist");
    try {
      return io::field_from_json(io::read_json(p), cfg.space);
    } catch (const Error& e) {
      throw ConfigError("'" + key + "': " + e.what());
    }
  }
  Section s(ref, key);
  const auto& kl = cfg.measure->kl_functions();
  const Index mode = s.integer_in("kl_mode", 0, kl.dim() - 1);
  return s.number("scale", 1.0) * kl[mode];
}

FunctionalPtr make_functional(const Section& s, const RunConfig& cfg, const fs::path& base) {
  const std::string type = s.string("type");
  if (type == "linear") {
    return std::make_shared<LinearFunctional>(field_ref(s.raw("h1"), s.key("h1"), cfg, base),
                                              field_ref(s.raw("h2"), s.key("h2"), cfg, base));
  }
  if (type == "quadratic") {
    if (s.has("lambdas")) {
      const json& l = s.raw("lambdas");
      if (!l.is_array() || l.empty()) throw ConfigError("'" + s.key("lambdas") + "' must be a nonempty array");
      const auto& m = *cfg.measure;
      if (Index(l.size()) > m.kl_values().size())
        throw ConfigError("'" + s.key("lambdas") + "' has more entries than the measure has KL modes");
      Eigen::VectorXd a(Index(l.size()));
      for (std::size_t j = 0; j < l.size(); ++j) {
        if (!l[j].is_number() || !(l[j].get<double>() >= 0))
          throw ConfigError("'" + s.key("lambdas") + "' must contain nonnegative numbers");
        a[Index(j)] = std::sqrt(l[j].get<double>() / m.kl_values()[Index(j)]);
      }
      return std::make_shared<QuadraticFunctional>(m.kl_functions().leading(a.size()), a);
    }
    const json& terms = s.raw("terms");
    if (!terms.is_array() || terms.empty()) throw ConfigError("'" + s.key("terms") + "' must be a nonempty array");
    std::vector<std::pair<Field, double>> pairs;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const Section t(terms[i], s.key("terms") + "[" + std::to_string(i) + "]");
      pairs.emplace_back(field_ref(t.raw("field"), t.key("field"), cfg, base), t.number("a"));
    }
    try {
      return std::make_shared<QuadraticFunctional>(pairs);
    } catch (const NotOrthonormalError& e) {
      throw ConfigError("'" + s.key("terms") + "': " + e.what());
    }
  }
  if (type == "ridge") {
    const json& dirs = s.raw("directions");
    if (!dirs.is_array() || dirs.empty()) throw ConfigError("'" + s.key("directions") + "' must be a nonempty array");
    std::vector<Field> fields;
    for (std::size_t i = 0; i < dirs.size(); ++i)
      fields.push_back(field_ref(dirs[i], s.key("directions") + "[" + std::to_string(i) + "]", cfg, base));
    Subspace w = orthonormalize(fields);
    if (w.dropped() > 0) throw ConfigError("'" + s.key("directions") + "' are linearly dependent");
    const std::string profile = s.string("profile", "sinusoidal");
    RidgeProfile p = RidgeProfile::sum();
    if (profile == "sum") {
    } else if (profile == "half_squared_norm") {
      p = RidgeProfile::half_squared_norm();
    } else if (profile == "sinusoidal") {
      p = RidgeProfile::sinusoidal(s.positive("scale", 0.3));
    } else {
      throw ConfigError("'" + s.key("profile") + "' must be sum, half_squared_norm or sinusoidal");
    }
    return std::make_shared<RidgeFunctional>(std::move(w), std::move(p));
  }
  if (type == "poisson_control") {
    auto problem = PoissonControlProblem::with_defaults(cfg.space);
    problem.alpha = s.positive("alpha", problem.alpha);
    problem.solver_tol = s.positive("solver_tol", problem.solver_tol);
    problem.solver_max_iter = int(s.integer_in("solver_max_iter", 1, 100000000, problem.solver_max_iter));
    if (s.has("target")) problem.desired_state = field_ref(s.raw("target"), s.key("target"), cfg, base);
    return std::make_shared<PoissonControl>(std::move(problem));
  }
  throw ConfigError("'" + s.key("type") + "' must be linear, quadratic, ridge or poisson_control");
}

/// Registers output files and deletes them unless commit() is reached.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  Outputs(const Outputs&) = delete;
  Outputs& operator=(const Outputs&) = delete;
  ~Outputs() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : files_) fs::remove(p, ec);
  }

  fs::path add(const std::string& name) {
    if (files_.empty()) fs::create_directories(dir_);
    files_.push_back(dir_ / name);
    return files_.back();
  }
  std::vector<fs::path> commit() {
    committed_ = true;
    return files_;
  }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
  bool committed_ = false;
};

const GaussianMeasure& measure_of(const RunConfig& cfg) {
  if (!cfg.measure) throw ConfigError("missing key 'measure'");
  return *cfg.measure;
}

const Functional& functional_of(const RunConfig& cfg) {
  if (!cfg.functional) throw ConfigError("missing key 'functional'");
  return *cfg.functional;
}

struct LoadedEstimate {
  io::StoredEstimate estimate;
  GradientSampleSet samples;
};

LoadedEstimate load_estimate(const RunConfig& cfg, const fs::path& path) {
  if (path.empty()) throw ConfigError("an estimate file is required (--estimate)");
  if (!fs::exists(path)) throw ConfigError("estimate file " + path.string() + " does not exist");
  LoadedEstimate out{io::read_estimate_json(path), {}};
  if (!out.estimate.space->same_as(*cfg.space)) throw ConfigError("estimate grid does not match 'grid'");
  const auto& meta = out.estimate.metadata;
  if (meta.contains("samples") && meta["samples"].is_string()) {
    const fs::path sidecar = path.parent_path() / meta["samples"].get<std::string>();
    if (fs::exists(sidecar)) out.samples = io::read_samples_json(sidecar);
  }
  return out;
}

Subspace leading_or_throw(const io::StoredEstimate& e, Index n, const std::string& key) {
  if (n > e.eigenfunctions.dim())
    throw ConfigError("'" + key + "' = " + std::to_string(n) + " exceeds the available rank " +
                      std::to_string(e.eigenfunctions.dim()));
  return e.eigenfunctions.leading(n);
}

}  // namespace

RunConfig parse_config(const json& j, const fs::path& base) {
  const Section root(j, "");
  RunConfig cfg;

  for (const auto& [k, v] : j.items()) {
    static const std::vector<std::string> known{"seed",     "grid", "measure",     "functional", "estimator", "project",
                                                "knn",      "bo",   "convergence", "gradcheck",  "output"};
    if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown key '" + k + "'");
  }

  const Section grid = root.sub("grid");
  const Index nx = grid.integer_in("nx", 3, 4097);
  const Index ny = grid.integer_in("ny", 3, 4097, nx);
  cfg.space = FunctionSpace::unit_square(nx, ny);

  if (root.has("measure")) {
    const Section m = root.sub("measure");
    if (m.string("type", "separable_sine") != "separable_sine")
      throw ConfigError("'measure.type' must be separable_sine");
    const Index per_axis = m.integer_in("m_per_axis", 1, std::min(nx, ny) - 2, std::min<Index>(8, std::min(nx, ny) - 2));
    const double decay = m.number("decay", 2.0);
    if (!(decay > 1)) throw ConfigError("'measure.decay' must exceed 1");
    cfg.measure = separable_sine_measure(cfg.space, int(per_axis), decay, m.positive("amplitude", 1.0));
    if (m.has("seed")) cfg.seed = std::uint64_t(m.integer_in("seed", 0, std::numeric_limits<Index>::max()));
  }
  if (root.has("seed")) cfg.seed = std::uint64_t(root.integer_in("seed", 0, std::numeric_limits<Index>::max()));

  if (root.has("functional")) {
    if (!cfg.measure) throw ConfigError("'functional' needs a 'measure' section");
    cfg.functional_spec = j.at("functional");
    cfg.functional = make_functional(root.sub("functional"), cfg, base);
  }

  const Section est = root.sub_or_empty("estimator");
  cfg.B = est.integer_in("B", 1, kMax, cfg.B);
  cfg.rank_tol = est.number("rank_tol", cfg.rank_tol);
  if (!(cfg.rank_tol > 0 && cfg.rank_tol < 1)) throw ConfigError("'estimator.rank_tol' must lie in (0, 1)");

  const Section proj = root.sub_or_empty("project");
  cfg.project_n = proj.integer_in("n", 1, kMax, cfg.project_n);
  cfg.grid_res = proj.integer_in("grid_res", 2, 4096, cfg.grid_res);

  const Section knn = root.sub_or_empty("knn");
  cfg.knn_N = knn.integer_in("N", 2, kMax, cfg.knn_N);
  cfg.knn_n = knn.integer_in("n", 1, kMax, cfg.knn_n);
  if (knn.has("K_range")) {
    const json& r = knn.raw("K_range");
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer())
      throw ConfigError("'knn.K_range' must be [lo, hi] with integers");
    cfg.K_lo = r[0].get<Index>();
    cfg.K_hi = r[1].get<Index>();
  }
  if (cfg.K_lo < 1 || cfg.K_hi < cfg.K_lo) throw ConfigError("'knn.K_range' must satisfy 1 <= lo <= hi");
  if (cfg.K_hi + 1 > cfg.knn_N) throw ConfigError("'knn.K_range' upper end must be below 'knn.N'");

  const Section bo = root.sub_or_empty("bo");
  cfg.bo.R = bo.integer_in("R", 1, kMax, cfg.bo.R);
  cfg.bo.n_init = bo.integer_in("n_init", 2, kMax, cfg.bo.n_init);
  cfg.bo.n_seq = bo.integer_in("n_seq", 0, kMax, cfg.bo.n_seq);
  cfg.bo.repetitions = int(bo.integer_in("repetitions", 1, 100000, cfg.bo.repetitions));
  cfg.bo.bo.candidates = bo.integer_in("candidates", 1, kMax, cfg.bo.bo.candidates);

  const Section conv = root.sub_or_empty("convergence");
  if (conv.has("B_grid")) {
    const json& g = conv.raw("B_grid");
    if (!g.is_array() || g.size() < 4) throw ConfigError("'convergence.B_grid' must list at least four sample sizes");
    cfg.B_grid.clear();
    for (const auto& v : g) {
      if (!v.is_number_integer() || v.get<Index>() < 1)
        throw ConfigError("'convergence.B_grid' must contain positive integers");
      cfg.B_grid.push_back(v.get<Index>());
    }
    if (!std::is_sorted(cfg.B_grid.begin(), cfg.B_grid.end()) ||
        std::adjacent_find(cfg.B_grid.begin(), cfg.B_grid.end()) != cfg.B_grid.end())
      throw ConfigError("'convergence.B_grid' must be strictly increasing");
  }
  cfg.convergence_seeds = int(conv.integer_in("seeds", 1, 100000, cfg.convergence_seeds));
  cfg.track = int(conv.integer_in("track", 1, 1000, cfg.track));

  const Section gc = root.sub_or_empty("gradcheck");
  cfg.gradcheck_directions = gc.integer_in("directions", 1, 100000, cfg.gradcheck_directions);
  cfg.gradcheck_step = gc.positive("step", cfg.gradcheck_step);

  const Section out = root.sub_or_empty("output");
  cfg.out_dir = out.string("dir", cfg.out_dir.string());
  if (cfg.out_dir.is_relative() && !base.empty()) cfg.out_dir = (base / cfg.out_dir).lexically_normal();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file " + path.string() + " does not exist");
  json j;
  try {
    j = io::read_json(path);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(j, path.parent_path());
}

std::vector<fs::path> cmd_estimate(const RunConfig& cfg) {
  const auto& f = functional_of(cfg);
  const auto& m = measure_of(cfg);
  auto samples = collect_gradients(f, m, cfg.B, cfg.seed);
  const auto est = eigendecompose(std::move(samples), cfg.rank_tol);

  Outputs out(cfg.out_dir);
  const json meta = {{"functional", cfg.functional_spec}, {"samples", "samples.json"}};
  io::write_estimate_json(out.add("estimate.json"), est, cfg.seed, meta);
  io::write_samples_json(out.add("samples.json"), est.samples());
  io::CsvWriter csv(out.add("spectrum.csv"), {"index", "eigenvalue"});
  for (Index i = 0; i < std::min<Index>(10, est.rank()); ++i) {
    csv.cell(long(i + 1)).cell(est.eigenvalues()[i]);
    csv.end_row();
  }
  csv.close();
  return out.commit();
}

std::vector<fs::path> cmd_project(const RunConfig& cfg, const fs::path& estimate, std::optional<Index> n_override) {
  const Index n = n_override.value_or(cfg.project_n);
  if (n < 1) throw ConfigError("'project.n' must be at least 1");
  const auto loaded = load_estimate(cfg, estimate);
  if (loaded.samples.size() < 1) throw ConfigError("estimate " + estimate.string() + " has no samples sidecar");
  const Subspace basis = leading_or_throw(loaded.estimate, n, "project.n");
  const auto data = reduce(loaded.samples, basis);

  std::optional<Surface> surface;
  if (n == 2) surface = gp_surface(data, cfg.grid_res);

  Outputs out(cfg.out_dir);
  std::vector<std::string> header;
  for (Index i = 0; i < n; ++i) header.push_back("x" + std::to_string(i + 1));
  header.push_back("f");
  io::CsvWriter scatter(out.add("scatter.csv"), header);
  for (Index b = 0; b < data.size(); ++b) {
    for (Index i = 0; i < n; ++i) scatter.cell(data.coords(b, i));
    scatter.cell(data.values[b]);
    scatter.end_row();
  }
  scatter.close();
  if (surface) {
    io::CsvWriter csv(out.add("surface.csv"), {"x1", "x2", "mean"});
    for (Index j = 0; j < cfg.grid_res; ++j)
      for (Index i = 0; i < cfg.grid_res; ++i) {
        csv.cell(surface->x1[i]).cell(surface->x2[j]).cell(surface->mean(i, j));
        csv.end_row();
      }
    csv.close();
  }
  return out.commit();
}

std::vector<fs::path> cmd_knn(const RunConfig& cfg, const fs::path& estimate) {
  const auto& f = functional_of(cfg);
  const auto& m = measure_of(cfg);
  const auto loaded = load_estimate(cfg, estimate);
  const Subspace basis = leading_or_throw(loaded.estimate, cfg.knn_n, "knn.n");

  const Eigen::MatrixXd u = m.sample_matrix(cfg.knn_N, derive_seed(cfg.seed, Stream::kKnn));
  Eigen::VectorXd y(cfg.knn_N);
  parallel_for(cfg.knn_N, [&](long b) { y[b] = f.evaluate(Field(cfg.space, u.col(b))); });
  if (!y.allFinite()) throw NumericalFailure("functional returned non-finite values on KNN samples");

  std::vector<Index> ks;
  for (Index k = cfg.K_lo; k <= cfg.K_hi; ++k) ks.push_back(k);
  const Eigen::VectorXd l2 = loo_cv(neighbor_set(cfg.space, u, y, Metric::kL2), ks);
  const Eigen::VectorXd as = loo_cv(neighbor_set(cfg.space, u, y, Metric::kActive, &basis), ks);

  Outputs out(cfg.out_dir);
  io::CsvWriter csv(out.add("knn.csv"), {"K", "mse_l2", "mse_as"});
  for (std::size_t i = 0; i < ks.size(); ++i) {
    csv.cell(long(ks[i])).cell(l2[Index(i)]).cell(as[Index(i)]);
    csv.end_row();
  }
  csv.close();
  return out.commit();
}

std::vector<fs::path> cmd_bo(const RunConfig& cfg) {
  functional_of(cfg);
  ComparisonOptions opt = cfg.bo;
  opt.seed = cfg.seed;
  const auto results = compare_methods(cfg.functional, measure_of(cfg), opt);

  Outputs out(cfg.out_dir);
  io::CsvWriter traces(out.add("bo_traces.csv"), {"iteration", "best", "method", "seed"});
  for (const auto& ms : results)
    for (const auto& t : ms.traces) {
      if (t.error) std::fprintf(stderr, "warning: %s trace (seed %llu) stopped early: %s\n", ms.method.c_str(),
                                static_cast<unsigned long long>(t.seed), t.error->c_str());
      for (std::size_t i = 0; i < t.best.size(); ++i) {
        traces.cell(long(i)).cell(t.best[i]).cell(ms.method).cell(std::to_string(t.seed));
        traces.end_row();
      }
    }
  traces.close();
  io::CsvWriter summary(out.add("bo_summary.csv"), {"iteration", "p10", "p50", "p90", "method"});
  for (const auto& ms : results)
    for (Index i = 0; i < ms.percentiles.rows(); ++i) {
      summary.cell(long(i)).cell(ms.percentiles(i, 0)).cell(ms.percentiles(i, 1)).cell(ms.percentiles(i, 2)).cell(ms.method);
      summary.end_row();
    }
  summary.close();
  return out.commit();
}

std::vector<fs::path> cmd_gradcheck(const RunConfig& cfg) {
  const auto& f = functional_of(cfg);
  const auto& m = measure_of(cfg);
  const std::uint64_t s = derive_seed(cfg.seed, Stream::kGradCheck);
  const Field u(cfg.space, m.sample_matrix(1, s).col(0));
  const Eigen::MatrixXd dirs = m.sample_matrix(cfg.gradcheck_directions, s, 1);
  std::vector<Field> h;
  for (Index k = 0; k < dirs.cols(); ++k) {
    Field d(cfg.space, dirs.col(k));
    h.push_back((1.0 / norm(d)) * d);
  }
  const auto report = check_gradient(f, u, h, cfg.gradcheck_step);

  Outputs out(cfg.out_dir);
  io::CsvWriter csv(out.add("gradcheck.csv"), {"direction", "finite_difference", "directional_derivative",
                                               "relative_error"});
  for (std::size_t k = 0; k < report.relative_errors.size(); ++k) {
    csv.cell(long(k)).cell(report.finite_differences[k]).cell(report.directional_derivatives[k]);
    csv.cell(report.relative_errors[k]);
    csv.end_row();
  }
  csv.close();
  return out.commit();
}

std::vector<fs::path> cmd_converge(const RunConfig& cfg) {
  const auto& f = functional_of(cfg);
  const auto& m = measure_of(cfg);
  ConvergenceOptions opt;
  opt.B_grid = cfg.B_grid;
  opt.seeds = cfg.convergence_seeds;
  opt.seed = cfg.seed;
  opt.track = cfg.track;
  if (const auto* q = dynamic_cast<const QuadraticFunctional*>(&f)) opt.reference = exact_operator(*q, m);
  if (const auto* l = dynamic_cast<const LinearFunctional*>(&f)) opt.reference = exact_operator(*l, cfg.space);
  const auto rep = convergence_diagnostic(f, m, opt);

  Outputs out(cfg.out_dir);
  io::CsvWriter csv(out.add("convergence.csv"), {"B", "mean_error", "min_error", "max_error"});
  for (std::size_t g = 0; g < rep.B_grid.size(); ++g) {
    const auto col = rep.errors.col(Index(g));
    csv.cell(long(rep.B_grid[g])).cell(rep.mean_error[Index(g)]).cell(col.minCoeff()).cell(col.maxCoeff());
    csv.end_row();
  }
  csv.close();
  json summary = {{"proxy_reference", rep.proxy_reference},
                  {"reference_B", rep.reference_B},
                  {"seeds", cfg.convergence_seeds},
                  {"slope", rep.slope ? json(*rep.slope) : json(nullptr)},
                  {"intercept", rep.intercept ? json(*rep.intercept) : json(nullptr)}};
  io::write_json(out.add("convergence.json"), summary);
  return out.commit();
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
      dynamic_cast<const FormatError*>(&e))
    return 2;
  if (dynamic_cast<const Error*>(&e)) return 3;
  return 1;
}

}  // namespace asub::app
