/**
 * Copyright 2026 The idslab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "idslab/lab.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "idslab/common.hpp"
#include "idslab/fields.hpp"
#include "idslab/pam.hpp"
#include "idslab/paths.hpp"
#include "idslab/rng.hpp"
#include "idslab/spectrum.hpp"
#include "idslab/stats.hpp"
#include "idslab/tauberian.hpp"
#include "idslab/variational.hpp"

namespace idslab::lab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

class Writer {
 public:
  explicit Writer(const fs::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
  }
  Writer& row(std::initializer_list<std::string> cells) {
    bool first = true;
    for (const auto& c : cells) {
      if (!first) out_ << ',';
      out_ << c;
      first = false;
    }
    out_ << '\n';
    return *this;
  }
  std::ofstream& stream() { return out_; }

 private:
  std::ofstream out_;
};

std::string num(double x) { return csv_number(x); }
std::string num(long long x) { return std::to_string(x); }
std::string num(int x) { return std::to_string(x); }

}  // namespace

// ---------------------------------------------------------------- config

ConfigError::ConfigError(std::vector<FieldError> errs)
    : std::runtime_error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& e : errs) msg += "\n  " + e.field + ": " + e.message;
        return msg;
      }()),
      errors(std::move(errs)) {}

double ExperimentConfig::number(const std::string& key) const {
  const auto it = params.find(key);
  double v = 0.0;
  if (it == params.end() || !parse_double(trim(it->second), v))
    throw ConfigError({{key, it == params.end() ? "missing" : "not a number"}});
  return v;
}

double ExperimentConfig::number(const std::string& key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

int ExperimentConfig::integer(const std::string& key) const {
  const double v = number(key);
  if (v != std::floor(v) || std::abs(v) > 2e9) throw ConfigError({{key, "not an integer"}});
  return static_cast<int>(v);
}

int ExperimentConfig::integer(const std::string& key, int fallback) const {
  return has(key) ? integer(key) : fallback;
}

std::vector<double> ExperimentConfig::list(const std::string& key) const {
  const auto it = params.find(key);
  if (it == params.end()) throw ConfigError({{key, "missing"}});
  std::vector<double> out;
  for (const auto& tok : tokens(it->second)) {
    if (std::count(tok.begin(), tok.end(), ':') == 2) {
      const auto p1 = tok.find(':'), p2 = tok.rfind(':');
      double lo = 0, hi = 0, step = 0;
      if (!parse_double(tok.substr(0, p1), lo) ||
          !parse_double(tok.substr(p1 + 1, p2 - p1 - 1), hi) ||
          !parse_double(tok.substr(p2 + 1), step) || !(step > 0.0) || hi < lo)
        throw ConfigError({{key, "bad range '" + tok + "' (lo:hi:step)"}});
      const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9)) + 1;
      if (count > 1000000) throw ConfigError({{key, "range too long"}});
      for (long long i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
    } else {
      double v = 0;
      if (!parse_double(tok, v)) throw ConfigError({{key, "not a number: '" + tok + "'"}});
      out.push_back(v);
    }
  }
  if (out.empty()) throw ConfigError({{key, "empty list"}});
  return out;
}

std::string ExperimentConfig::text(const std::string& key, const std::string& fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : trim(it->second);
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::vector<FieldError> errors;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back({"line " + std::to_string(lineno), "expected key = value"});
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      errors.push_back({"line " + std::to_string(lineno), "empty key"});
      continue;
    }
    if (key == "experiment") {
      cfg.experiment = value;
    } else if (key == "seed") {
      try {
        std::size_t used = 0;
        cfg.seed = std::stoull(value, &used, 0);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        errors.push_back({"seed", "not an unsigned integer"});
      }
    } else if (key == "output") {
      cfg.output = value;
    } else if (key == "threads") {
      double v = 0;
      if (!parse_double(value, v) || v < 0 || v != std::floor(v))
        errors.push_back({"threads", "not a nonnegative integer"});
      else
        cfg.threads = static_cast<int>(v);
    } else {
      if (cfg.params.count(key)) errors.push_back({key, "given twice"});
      cfg.params[key] = value;
    }
  }
  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({{"config", "cannot read " + path.string()}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_environment(ExperimentConfig& config) {
  if (const char* dir = std::getenv("IDSLAB_OUTPUT_DIR"); dir && *dir) config.output = dir;
  if (const char* th = std::getenv("IDSLAB_THREADS"); th && *th) {
    double v = 0;
    if (!parse_double(th, v) || v < 0 || v != std::floor(v))
      throw ConfigError({FieldError{"IDSLAB_THREADS", "not a nonnegative integer"}});
    config.threads = static_cast<int>(v);
  }
}

std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string canonical(const ExperimentConfig& config) {
  std::map<std::string, std::string> all = config.params;
  all["experiment"] = config.experiment;
  all["seed"] = std::to_string(config.seed);
  all["threads"] = std::to_string(config.threads);
  std::string out;
  for (const auto& [key, value] : all) {
    std::string norm;
    for (const auto& tok : tokens(value)) {
      double v = 0;
      if (!norm.empty()) norm += ' ';
      norm += parse_double(tok, v) ? csv_number(v) : tok;
    }
    out += key + "=" + norm + "\n";
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical(config))));
  return buf;
}

std::uint64_t realization_seed(std::uint64_t master, std::uint64_t index) {
  return derive_seed(master, index);
}

// ------------------------------------------------------------ validation

namespace {

struct Checker {
  const ExperimentConfig& cfg;
  std::vector<FieldError> errors;

  template <class F>
  auto get(F f) -> decltype(f()) {
    try {
      return f();
    } catch (const ConfigError& e) {
      for (const auto& fe : e.errors) errors.push_back(fe);
    }
    return {};
  }
  double positive(const std::string& key) {
    const double v = get([&] { return cfg.number(key); });
    if (cfg.has(key) && !(v > 0.0)) errors.push_back({key, "must be positive"});
    return v;
  }
  int count(const std::string& key, int lo = 1) {
    const int v = get([&] { return cfg.integer(key); });
    if (cfg.has(key) && v < lo) errors.push_back({key, "must be >= " + std::to_string(lo)});
    return v;
  }
  int count_or(const std::string& key, int fallback, int lo = 1) {
    if (!cfg.has(key)) return fallback;
    return count(key, lo);
  }
  std::vector<double> list(const std::string& key) {
    return get([&] { return cfg.list(key); });
  }
  std::vector<double> decreasing(const std::string& key) {
    auto v = list(key);
    for (std::size_t i = 1; i < v.size(); ++i)
      if (!(v[i] < v[i - 1])) {
        errors.push_back({key, "eps ladder must be strictly decreasing"});
        break;
      }
    for (double x : v)
      if (!(x > 0.0)) {
        errors.push_back({key, "entries must be positive"});
        break;
      }
    return v;
  }
  void grid(double L, int n, const std::vector<double>& eps, const std::string& eps_key) {
    if (!(L > 0.0) || n < 1) return;
    const double h = L / (n + 1);
    for (double e : eps)
      if (e > 0.0 && e < 4.0 * h * h) {
        std::ostringstream os;
        os << "eps = " << e << " is below the mollifier limit 4 h^2 = " << 4.0 * h * h
           << " (L = " << L << ", n = " << n << ")";
        errors.push_back({eps_key, os.str()});
      }
  }
};

}  // namespace

std::vector<FieldError> validate(const ExperimentConfig& config) {
  Checker c{config, {}};
  const std::string& kind = config.experiment;
  if (kind.empty()) {
    c.errors.push_back({"experiment", "missing"});
    return c.errors;
  }
  if (kind == "ids") {
    const double L = c.positive("L");
    const int n = c.count("n");
    const auto eps = c.decreasing("eps");
    c.grid(L, n, eps, "eps");
    if (eps.size() > 1) c.errors.push_back({"eps", "ids takes a single eps"});
    c.count("realizations");
    const auto lam = c.list("lambda");
    for (std::size_t i = 1; i < lam.size(); ++i)
      if (!(lam[i] > lam[i - 1])) {
        c.errors.push_back({"lambda", "grid must increase"});
        break;
      }
    c.count_or("fit_width", 5, 4);
    c.count_or("min_count", 30, 1);
    c.count_or("resamples", 400, 10);
  } else if (kind == "silt") {
    const double t = c.positive("t");
    const auto eps = c.decreasing("eps");
    c.count("paths", 2);
    const std::string pk = config.text("kind", "bridge");
    if (pk != "bridge" && pk != "motion") c.errors.push_back({"kind", "bridge or motion"});
    if (config.has("n_t") && t > 0.0 && !eps.empty()) {
      const int nt = c.count("n_t");
      if (nt > 0 && t / nt > eps.back() / 10.0)
        c.errors.push_back({"n_t", "dt = t/n_t must be <= eps/10; need n_t >= " +
                                       std::to_string(required_steps(t, eps.back()))});
    }
    if (config.has("theta")) c.list("theta");
    c.count_or("bins", 50, 2);
  } else if (kind == "pam") {
    const double L = c.positive("L");
    const int n = c.count("n");
    const auto eps = c.decreasing("eps");
    c.grid(L, n, eps, "eps");
    if (eps.size() > 1) c.errors.push_back({"eps", "pam takes a single eps"});
    const auto t = c.list("t");
    for (double x : t)
      if (!(x > 0.0)) c.errors.push_back({"t", "times must be positive"});
    c.count("realizations");
    c.count_or("probes", 64, 16);
    if (config.has("dt")) c.positive("dt");
    if (config.has("annealed_t")) {
      for (double x : c.list("annealed_t"))
        if (!(x > 0.0)) c.errors.push_back({"annealed_t", "times must be positive"});
      c.decreasing("annealed_eps");
      c.count("annealed_paths", 2);
    }
  } else if (kind == "constants") {
    const int d = c.count("d");
    if (d > 3) c.errors.push_back({"d", "must be 1, 2 or 3"});
    for (double s : c.list("sigma"))
      if (s < 0.0 || s > std::min(2.0, static_cast<double>(d)))
        c.errors.push_back({"sigma", "need 0 <= sigma <= min(2, d)"});
    c.count_or("resolution", 4, 2);
    if (config.has("nu")) c.positive("nu");
  } else if (kind == "tauberian") {
    const bool fwd = config.has("gamma") || config.has("B");
    const bool back = config.has("alpha") || config.has("A");
    if (fwd == back) c.errors.push_back({"gamma", "give either gamma and B or alpha and A"});
    const std::string e = fwd ? "gamma" : "alpha";
    const std::string k = fwd ? "B" : "A";
    const double ex = c.get([&] { return config.number(e); });
    if (config.has(e) && !(ex > 1.0)) c.errors.push_back({e, "must exceed 1"});
    c.positive(k);
    if (config.has("riesz_sigma")) {
      const double s = c.get([&] { return config.number("riesz_sigma"); });
      if (!(s > 0.0 && s < 2.0)) c.errors.push_back({"riesz_sigma", "need 0 < sigma < 2"});
      c.positive("rho");
      if (config.has("nu")) c.positive("nu");
    }
  } else if (kind == "riesz") {
    const double L = c.positive("L");
    const int n = c.count("n", 2);
    const double sigma = c.positive("sigma");
    if (sigma >= 2.0) c.errors.push_back({"sigma", "need 0 < sigma < 2 in d = 2"});
    const double reg = c.positive("reg");
    if (L > 0 && n > 0 && reg > 0 && reg < L / (n + 1))
      c.errors.push_back({"reg", "must be at least the grid spacing"});
    c.count("samples");
    c.count_or("dump", 1, 0);
    if (config.has("nu")) c.positive("nu");
  } else {
    c.errors.push_back(
        {"experiment", "unknown kind '" + kind + "' (ids, silt, pam, constants, tauberian, riesz)"});
  }
  return c.errors;
}

// --------------------------------------------------------------- records

std::string ResultRecord::to_jsonl() const {
  json j;
  j["config_hash"] = config_hash;
  j["module"] = module;
  j["operation"] = operation;
  j["inputs_digest"] = inputs_digest;
  j["outputs"] = outputs.empty() ? json::object() : json::parse(outputs);
  j["wall_time"] = wall_time;
  j["version"] = version;
  if (!error.empty()) j["error"] = error;
  return j.dump();
}

namespace {

struct Context {
  const ExperimentConfig& cfg;
  fs::path dir;
  std::string hash;
  std::vector<ResultRecord> records;

  ResultRecord& add(const std::string& module, const std::string& op, const json& inputs,
                    const json& outputs, double wall, const std::string& error = {}) {
    ResultRecord r;
    r.config_hash = hash;
    r.module = module;
    r.operation = op;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(inputs.dump())));
    r.inputs_digest = buf;
    r.outputs = outputs.dump();
    r.wall_time = wall;
    r.error = error;
    records.push_back(std::move(r));
    return records.back();
  }
};

// ---- ids

void run_ids(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const GridSpec grid{cfg.number("L"), cfg.integer("n")};
  const double eps = cfg.list("eps").front();
  const int R = cfg.integer("realizations");
  const auto lambda = cfg.list("lambda");
  const int width = cfg.integer("fit_width", 5);
  const int min_count = cfg.integer("min_count", 30);
  const int resamples = cfg.integer("resamples", 400);

  std::vector<SpectrumResult> spectra(static_cast<std::size_t>(R));
  std::vector<std::string> errors(static_cast<std::size_t>(R));
  std::vector<double> wall(static_cast<std::size_t>(R));
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < R; ++i) {
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto noise = sample_noise(grid, eps, realization_seed(ctx.cfg.seed, i));
      EigenRequest req;
      req.lambda_max = lambda.back();
      spectra[static_cast<std::size_t>(i)] = lowest_eigenvalues(noise, req);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
    wall[static_cast<std::size_t>(i)] = seconds_since(start);
  }

  Writer jl(ctx.dir / "spectra.jsonl");
  std::vector<SpectrumResult> good;
  for (int i = 0; i < R; ++i) {
    const auto& s = spectra[static_cast<std::size_t>(i)];
    json in{{"L", grid.L}, {"n", grid.n}, {"eps", eps}, {"realization", i},
            {"seed", realization_seed(cfg.seed, i)}};
    if (!errors[static_cast<std::size_t>(i)].empty()) {
      ctx.add("hamiltonian-spectrum", "lowest_eigenvalues", in, json::object(),
              wall[static_cast<std::size_t>(i)], errors[static_cast<std::size_t>(i)]);
      continue;
    }
    json line{{"realization", i},       {"seed", s.seed},          {"L", grid.L},
              {"n", grid.n},            {"eps", eps},              {"lambda_max", s.lambda_max},
              {"complete", s.complete}, {"solver", s.solver},      {"v_max", s.v_max},
              {"eigenvalues", s.eigenvalues}};
    jl.stream() << line.dump() << '\n';
    ctx.add("hamiltonian-spectrum", "lowest_eigenvalues", in,
            {{"count", s.eigenvalues.size()}, {"complete", s.complete}, {"solver", s.solver},
             {"table", "spectra.jsonl"}},
            wall[static_cast<std::size_t>(i)],
            s.complete ? "" : "spectrum below lambda_max not certified complete");
    if (s.complete) good.push_back(s);
  }
  if (good.empty()) {
    ctx.add("hamiltonian-spectrum", "aggregate_ids", {{"realizations", R}}, json::object(), 0.0,
            "no complete realizations");
    return;
  }
  const auto start = std::chrono::steady_clock::now();
  const auto ids = aggregate_ids(good, lambda, resamples, realization_seed(cfg.seed, 0xA66));
  Writer csv(ctx.dir / "ids.csv");
  csv.row({"lambda", "mean_N", "lo", "hi", "count"});
  for (std::size_t g = 0; g < ids.lambda.size(); ++g)
    csv.row({num(ids.lambda[g]), num(ids.mean[g]), num(ids.lo[g]), num(ids.hi[g]),
             num(ids.count[g])});
  ctx.add("hamiltonian-spectrum", "aggregate_ids", {{"realizations", good.size()}},
          {{"table", "ids.csv"}, {"points", ids.lambda.size()}}, seconds_since(start));

  // slope per admissible window, left to right
  Writer win(ctx.dir / "lifshitz_windows.csv");
  win.row({"window_lo", "window_hi", "slope", "stderr", "curved", "min_count"});
  const int first = leftmost_window(ids, width, min_count);
  if (first < 0) {
    ctx.add("hamiltonian-spectrum", "lifshitz_fit", {{"width", width}, {"min_count", min_count}},
            {{"window", nullptr}}, 0.0, "no window with the required counts");
    return;
  }
  for (int s = first; s + width <= static_cast<int>(ids.lambda.size()); ++s) {
    const double lo = ids.lambda[static_cast<std::size_t>(s)];
    const double hi = ids.lambda[static_cast<std::size_t>(s + width - 1)];
    try {
      const auto fit = lifshitz_fit(ids, lo, hi, min_count);
      win.row({num(lo), num(hi), num(fit.slope), num(fit.std_error), fit.curved ? "1" : "0",
               num(fit.min_count)});
      if (s == first)
        ctx.add("hamiltonian-spectrum", "lifshitz_fit",
                {{"width", width}, {"min_count", min_count}},
                {{"slope", fit.slope},
                 {"stderr", fit.std_error},
                 {"curvature", fit.curvature},
                 {"curved", fit.curved},
                 {"window", {lo, hi}}},
                0.0);
    } catch (const PreconditionError&) {
      // window with a sparse point further right; skip it
    }
  }
}

// ---- silt

void run_silt(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const double t = cfg.number("t");
  const auto eps = cfg.list("eps");
  const int m = cfg.integer("paths");
  const PathKind kind = parse_path_kind(cfg.text("kind", "bridge"));
  const int n_t = cfg.integer("n_t", required_steps(t, eps.back()));
  const int bins = cfg.integer("bins", 50);
  const std::vector<double> theta = cfg.has("theta") ? cfg.list("theta") : std::vector<double>{};
  const PathSpec spec{kind, t, 2, n_t};
  const Region region = Region::triangle(0.0, t);

  const auto start = std::chrono::steady_clock::now();
  const auto chi = silt_stream(spec, m, cfg.seed, eps, region);
  const double wall = seconds_since(start);

  Writer sum(ctx.dir / "silt.csv");
  sum.row({"eps", "mean_chi", "stderr", "expected", "zeta_sd"});
  Writer hist(ctx.dir / "zeta_hist.csv");
  hist.row({"eps", "bin_lo", "bin_hi", "count"});
  Writer mom(ctx.dir / "exp_moment.csv");
  mom.row({"eps", "theta", "estimate", "lo", "hi", "heavy_tail"});
  for (std::size_t e = 0; e < eps.size(); ++e) {
    const double expected = expected_silt(kind, t, eps[e], region);
    std::vector<double> zeta(chi[e]);
    for (double& z : zeta) z -= expected;
    const auto ms = stats::mean_std(chi[e]);
    sum.row({num(eps[e]), num(ms.mean), num(ms.std_error), num(expected), num(ms.stddev)});
    const auto [lo_it, hi_it] = std::minmax_element(zeta.begin(), zeta.end());
    const double lo = *lo_it, hi = *hi_it;
    const double w = (hi - lo) / bins;
    std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
    for (double z : zeta) {
      const int b = w > 0 ? std::min(bins - 1, static_cast<int>((z - lo) / w)) : 0;
      ++counts[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < bins; ++b)
      hist.row({num(eps[e]), num(lo + b * w), num(lo + (b + 1) * w),
                num(counts[static_cast<std::size_t>(b)])});
    json outs{{"mean_chi", ms.mean}, {"stderr", ms.std_error}, {"expected", expected}};
    for (double th : theta) {
      const auto em = exp_moment(zeta, th, 400, realization_seed(cfg.seed, 0xE0 + e));
      mom.row({num(eps[e]), num(th), num(em.estimate), num(em.lo), num(em.hi),
               em.heavy_tail ? "1" : "0"});
    }
    ctx.add("paths-silt", "silt_stream",
            {{"t", t}, {"eps", eps[e]}, {"m", m}, {"n_t", n_t}, {"kind", to_string(kind)}}, outs,
            wall / eps.size());
  }
}

// ---- pam

void run_pam(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const GridSpec grid{cfg.number("L"), cfg.integer("n")};
  const double eps = cfg.list("eps").front();
  const auto times = cfg.list("t");
  const int R = cfg.integer("realizations");
  const int probes = cfg.integer("probes", 64);

  struct Row {
    double t, trace, lo, hi, spectral, tail, residual;
    bool within, certified;
  };
  std::vector<std::vector<Row>> rows(static_cast<std::size_t>(R));
  std::vector<std::string> errors(static_cast<std::size_t>(R));
  std::vector<double> wall(static_cast<std::size_t>(R));
  // realizations in order; heat_trace is parallel over probes inside
  for (int i = 0; i < R; ++i) {
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto noise = sample_noise(grid, eps, realization_seed(cfg.seed, i));
      std::vector<double> pot(noise.values.size());
      for (std::size_t k = 0; k < pot.size(); ++k) pot[k] = noise.values[k] - noise.c_eps;
      const double dt = cfg.number("dt", max_pam_step(eps, pot));
      EigenRequest req;
      if (static_cast<int>(grid.size()) <= req.dense_limit)
        req.count = static_cast<int>(grid.size());
      else
        req.lambda_max = default_lambda_max(grid, pot);
      const auto spec = lowest_eigenvalues(noise, req);
      for (double t : times) {
        const auto tr = heat_trace(grid, noise, t, probes, dt, realization_seed(cfg.seed, i) ^ 0x7ace);
        const auto lc = laplace_of_counting(spec, t);
        const double area = grid.L * grid.L;
        const double est = tr.estimate / area;
        const double half = 0.5 * (tr.hi - tr.lo) / area;
        const double res = std::abs(est - lc.value) / lc.value;
        rows[static_cast<std::size_t>(i)].push_back(
            {t, est, tr.lo / area, tr.hi / area, lc.value, lc.tail_bound, res,
             std::abs(est - lc.value) <= 0.01 * lc.value + half + lc.tail_bound, lc.certified});
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
    wall[static_cast<std::size_t>(i)] = seconds_since(start);
  }
  Writer csv(ctx.dir / "trace.csv");
  csv.row({"realization", "t", "heat_trace", "lo", "hi", "spectral", "tail_bound", "residual",
           "within"});
  for (int i = 0; i < R; ++i) {
    json in{{"L", grid.L}, {"n", grid.n}, {"eps", eps}, {"realization", i}, {"probes", probes}};
    json outs = json::array();
    for (const auto& r : rows[static_cast<std::size_t>(i)]) {
      csv.row({num(i), num(r.t), num(r.trace), num(r.lo), num(r.hi), num(r.spectral),
               num(r.tail), num(r.residual), r.within ? "1" : "0"});
      outs.push_back({{"t", r.t}, {"residual", r.residual}, {"within", r.within}});
    }
    ctx.add("pam-evolution", "heat_trace", in, {{"rows", outs}, {"table", "trace.csv"}},
            wall[static_cast<std::size_t>(i)], errors[static_cast<std::size_t>(i)]);
  }

  if (!cfg.has("annealed_t")) return;
  const auto at = cfg.list("annealed_t");
  const auto aeps = cfg.list("annealed_eps");
  const int m = cfg.integer("annealed_paths");
  Writer an(ctx.dir / "annealed.csv");
  an.row({"t", "eps", "m", "n_t", "form1", "lo", "hi", "form2", "log_gap", "heavy_tail"});
  for (std::size_t k = 0; k < at.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto res = annealed_moment(at[k], aeps, m, realization_seed(cfg.seed, 0xA000 + k));
      json outs = json::array();
      for (const auto& a : res) {
        an.row({num(a.t), num(a.eps), num(a.m), num(a.n_t), num(a.form1), num(a.lo), num(a.hi),
                num(a.form2), num(a.log_gap), a.heavy_tail ? "1" : "0"});
        outs.push_back({{"eps", a.eps}, {"form1", a.form1}, {"lo", a.lo}, {"hi", a.hi}});
      }
      ctx.add("pam-evolution", "annealed_moment", {{"t", at[k]}, {"eps", aeps}, {"m", m}},
              {{"rows", outs}, {"table", "annealed.csv"}}, seconds_since(start));
    } catch (const std::exception& e) {
      ctx.add("pam-evolution", "annealed_moment", {{"t", at[k]}, {"eps", aeps}, {"m", m}},
              json::object(), seconds_since(start), e.what());
    }
  }
}

// ---- constants

void run_constants(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const int d = cfg.integer("d");
  const auto sigmas = cfg.list("sigma");
  const int resolution = cfg.integer("resolution", 4);
  const double nu = cfg.number("nu", 1.0);
  std::vector<VariationalConstants> rows;
  for (double s : sigmas) {
    const auto start = std::chrono::steady_clock::now();
    json in{{"d", d}, {"sigma", s}, {"resolution", resolution}};
    try {
      auto v = optimize_kappa(d, s, resolution);
      const auto rc = rate_constants(d, s, nu, v.kappa);
      json outs{{"kappa", v.kappa},         {"M", v.M},
                {"rho", v.rho},             {"residual", v.residual},
                {"levels", v.levels},       {"converged", v.converged},
                {"lifshitz_constant", rc.lifshitz_constant},
                {"exponent", rc.lifshitz_exponent}};
      if (rc.intersection_rate) outs["intersection_rate"] = *rc.intersection_rate;
      ctx.add("variational-constants", "optimize_kappa", in, outs, seconds_since(start),
              v.converged ? "" : "optimizer did not converge; last iterate reported");
      rows.push_back(std::move(v));
    } catch (const std::exception& e) {
      ctx.add("variational-constants", "optimize_kappa", in, json::object(),
              seconds_since(start), e.what());
    }
  }
  std::ofstream out(ctx.dir / "constants.csv", std::ios::binary);
  write_constants_csv(out, rows, nu);
}

// ---- tauberian

void run_tauberian(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const bool fwd = cfg.has("gamma");
  const auto p = fwd ? tauberian_convert(TauberianDirection::from_transform, cfg.number("gamma"),
                                         cfg.number("B"))
                     : tauberian_convert(TauberianDirection::from_tail, cfg.number("alpha"),
                                         cfg.number("A"));
  const json pair{{"alpha", p.alpha}, {"A", p.A}, {"gamma", p.gamma}, {"B", p.B}};
  ctx.add("tauberian-laplace", "tauberian_convert", cfg.params, pair, 0.0);
  Writer csv(ctx.dir / "tauberian.csv");
  csv.row({"alpha", "A", "gamma", "B"});
  csv.row({num(p.alpha), num(p.A), num(p.gamma), num(p.B)});
  if (!cfg.has("riesz_sigma")) return;
  const auto c = riesz_consistency(cfg.number("riesz_sigma"), cfg.number("nu", 1.0),
                                   cfg.number("rho"));
  ctx.add("tauberian-laplace", "riesz_consistency",
          {{"sigma", c.sigma}, {"nu", c.nu}, {"rho", c.rho}},
          {{"gamma", c.gamma},
           {"B", c.B},
           {"alpha", c.pair.alpha},
           {"A", c.pair.A},
           {"expected_A", c.expected_A},
           {"residual", c.residual}},
          0.0, c.residual <= 1e-10 ? "" : "consistency residual above 1e-10");
}

// ---- riesz

void run_riesz(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const GridSpec grid{cfg.number("L"), cfg.integer("n")};
  const RieszFieldSpec spec{2, cfg.number("sigma"), cfg.number("nu", 1.0), cfg.number("reg")};
  const int samples = cfg.integer("samples");
  const int dump = cfg.integer("dump", 1);
  const auto start = std::chrono::steady_clock::now();
  const RieszFieldSampler sampler(spec, grid.n, grid.h());
  const auto exact = sampler.axis_covariance();
  const int n = grid.n;
  const int max_lag = n / 2;
  std::vector<double> acc(static_cast<std::size_t>(max_lag + 1), 0.0);
  std::vector<double> acc2(acc.size(), 0.0);
  fs::create_directories(ctx.dir / "fields");
  for (int s = 0; s < samples; ++s) {
    const auto f = sampler.sample(realization_seed(cfg.seed, s));
    if (s < dump) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "riesz_%04d", s);
      write_field(ctx.dir / "fields" / stem, f, grid, 0.0, realization_seed(cfg.seed, s), "riesz");
    }
    // per-sample covariance estimate at each lag along the first axis
    for (int j = 0; j <= max_lag; ++j) {
      double sum = 0.0;
      long long cnt = 0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b + j < n; ++b) {
          sum += f[grid.index(a, b)] * f[grid.index(a, b + j)];
          ++cnt;
        }
      const double v = sum / static_cast<double>(cnt);
      acc[static_cast<std::size_t>(j)] += v;
      acc2[static_cast<std::size_t>(j)] += v * v;
    }
  }
  Writer csv(ctx.dir / "covariance.csv");
  csv.row({"lag", "empirical", "stderr", "target", "z"});
  for (int j = 0; j <= max_lag; ++j) {
    const double mean = acc[static_cast<std::size_t>(j)] / samples;
    const double var =
        samples > 1 ? (acc2[static_cast<std::size_t>(j)] / samples - mean * mean) * samples /
                          (samples - 1.0)
                    : 0.0;
    const double se = std::sqrt(std::max(var, 0.0) / samples);
    const double r = j * grid.h();
    const double target = exact[static_cast<std::size_t>(j)];
    csv.row({num(r), num(mean), num(se), num(target), num(se > 0 ? (mean - target) / se : 0.0)});
  }
  ctx.add("gaussian-fields", "riesz_field",
          {{"L", grid.L}, {"n", n}, {"sigma", spec.sigma}, {"nu", spec.nu}, {"reg", spec.reg},
           {"samples", samples}},
          {{"table", "covariance.csv"}, {"dumped", std::min(dump, samples)}},
          seconds_since(start));
}

}  // namespace

std::vector<ResultRecord> run(const ExperimentConfig& config) {
  const auto errs = validate(config);
  if (!errs.empty()) throw ConfigError(errs);
  if (config.threads > 0) omp_set_num_threads(config.threads);
  Context ctx{config, fs::path(config.output), config_hash(config), {}};
  fs::create_directories(ctx.dir);
  {
    std::ofstream c(ctx.dir / "config.txt", std::ios::binary);
    c << canonical(config);
  }
  const auto& k = config.experiment;
  try {
    if (k == "ids") run_ids(ctx);
    else if (k == "silt") run_silt(ctx);
    else if (k == "pam") run_pam(ctx);
    else if (k == "constants") run_constants(ctx);
    else if (k == "tauberian") run_tauberian(ctx);
    else if (k == "riesz") run_riesz(ctx);
  } catch (const std::exception& e) {
    ctx.add(k, "run", config.params, json::object(), 0.0, e.what());
  }
  std::ofstream out(ctx.dir / "records.jsonl", std::ios::binary);
  for (const auto& r : ctx.records) out << r.to_jsonl() << '\n';
  return ctx.records;
}

// ---------------------------------------------------------------- report

namespace {

bool copy_table(const fs::path& from, const fs::path& to, Report& rep, const std::string& name) {
  if (!fs::exists(from)) return false;
  std::error_code ec;
  fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
  if (ec)
    rep.problems.push_back(name + ": " + ec.message());
  else
    rep.files.push_back("report/" + to.filename().string());
  return !ec;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

Report report(const fs::path& dir) {
  Report rep;
  const fs::path out = dir / "report";
  fs::create_directories(out);
  std::map<std::pair<std::string, std::string>, std::pair<int, int>> counts;
  const fs::path rec = dir / "records.jsonl";
  if (fs::exists(rec)) {
    std::ifstream in(rec);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      try {
        const auto j = json::parse(line);
        auto& c = counts[{j.at("module").get<std::string>(), j.at("operation").get<std::string>()}];
        ++c.first;
        if (j.contains("error")) ++c.second;
        ++rep.records;
      } catch (const std::exception& e) {
        rep.problems.push_back("records.jsonl line " + std::to_string(lineno) + ": corrupt (" +
                               e.what() + ")");
      }
    }
  } else {
    rep.problems.push_back("records.jsonl: missing");
  }
  {
    Writer s(out / "summary.csv");
    if (rep.records == 0) {
      s.row({"no records"});
    } else {
      s.row({"module", "operation", "records", "errors"});
      for (const auto& [key, c] : counts)
        s.row({key.first, key.second, num(c.first), num(c.second)});
    }
    rep.files.push_back("report/summary.csv");
  }

  // one line per stored spectrum
  if (const fs::path sp = dir / "spectra.jsonl"; fs::exists(sp)) {
    Writer w(out / "spectra.csv");
    w.row({"realization", "seed", "L", "n", "eps", "count", "lambda_1", "N_at_lambda_max",
           "complete"});
    std::ifstream in(sp);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      try {
        const auto j = json::parse(line);
        const auto ev = j.at("eigenvalues").get<std::vector<double>>();
        const double L = j.at("L").get<double>();
        w.row({num(j.at("realization").get<int>()),
               std::to_string(j.at("seed").get<std::uint64_t>()), num(L),
               num(j.at("n").get<int>()), num(j.at("eps").get<double>()),
               num(static_cast<long long>(ev.size())),
               ev.empty() ? "nan" : num(ev.front()),
               num(static_cast<double>(ev.size()) / (L * L)),
               j.at("complete").get<bool>() ? "1" : "0"});
      } catch (const std::exception& e) {
        rep.problems.push_back("spectra.jsonl line " + std::to_string(lineno) + ": corrupt");
      }
    }
    rep.files.push_back("report/spectra.csv");
  }
  copy_table(dir / "ids.csv", out / "ids_curve.csv", rep, "ids.csv");
  copy_table(dir / "lifshitz_windows.csv", out / "lifshitz_slope_vs_window.csv", rep,
             "lifshitz_windows.csv");
  copy_table(dir / "zeta_hist.csv", out / "zeta_histogram.csv", rep, "zeta_hist.csv");
  copy_table(dir / "exp_moment.csv", out / "exp_moment_curves.csv", rep, "exp_moment.csv");
  copy_table(dir / "constants.csv", out / "constants.csv", rep, "constants.csv");
  copy_table(dir / "covariance.csv", out / "riesz_covariance.csv", rep, "covariance.csv");

  if (const fs::path tr = dir / "trace.csv"; fs::exists(tr)) {
    const auto rows = read_csv(tr);
    Writer w(out / "trace_residuals.csv");
    w.row({"realization", "t", "residual", "within"});
    bool all = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() < 9) {
        rep.problems.push_back("trace.csv row " + std::to_string(i) + ": short");
        all = false;
        continue;
      }
      w.row({rows[i][0], rows[i][1], rows[i][7], rows[i][8]});
      all = all && rows[i][8] == "1";
    }
    w.row({"all", "", "", all ? "1" : "0"});
    rep.files.push_back("report/trace_residuals.csv");
  }
  if (const fs::path an = dir / "annealed.csv"; fs::exists(an)) {
    const auto rows = read_csv(an);
    // threshold t = kappa(2,2)^{-1} from the optimizer
    const double kinv = 1.0 / optimize_kappa(2, 2.0, 3).kappa;
    Writer w(out / "annealed_vs_t.csv");
    w.row({"t", "eps", "form1", "lo", "hi", "kappa_inv"});
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() < 7) {
        rep.problems.push_back("annealed.csv row " + std::to_string(i) + ": short");
        continue;
      }
      w.row({rows[i][0], rows[i][1], rows[i][4], rows[i][5], rows[i][6], num(kinv)});
    }
    rep.files.push_back("report/annealed_vs_t.csv");
  }
  if (!rep.problems.empty()) {
    Writer p(out / "problems.txt");
    for (const auto& s : rep.problems) p.stream() << s << '\n';
    rep.files.push_back("report/problems.txt");
  }
  return rep;
}

}  // namespace idslab::lab
