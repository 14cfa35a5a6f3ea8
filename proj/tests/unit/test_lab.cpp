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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "idslab/lab.hpp"

using namespace idslab::lab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("idslab_test_" + name);
  fs::remove_all(p);
  return p;
}

bool has_field(const std::vector<FieldError>& errs, const std::string& field) {
  for (const auto& e : errs)
    if (e.field == field) return true;
  return false;
}

}  // namespace

TEST_CASE("config parsing, lists and ranges") {
  const auto cfg = parse_config(
      "# small ids run\n"
      "experiment = ids\n"
      "seed = 42\n"
      "L = 4   # box\n"
      "lambda = -2:0:0.5, 3\n"
      "eps = 0.1\n");
  CHECK(cfg.experiment == "ids");
  CHECK(cfg.seed == 42);
  CHECK(cfg.number("L") == 4.0);
  const auto lam = cfg.list("lambda");
  REQUIRE(lam.size() == 6);
  CHECK(lam[0] == -2.0);
  CHECK(lam[4] == 0.0);
  CHECK(lam[5] == 3.0);
  CHECK_THROWS_AS(parse_config("no equals sign\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS((void)cfg.integer("eps"), ConfigError);
  CHECK(cfg.integer("absent", 7) == 7);
}

TEST_CASE("canonical form and hash ignore layout") {
  const auto a = parse_config("experiment = tauberian\ngamma = 2\nB = 1.0\n");
  const auto b = parse_config("B=1\n\n  gamma = 2.000   # same\nexperiment=tauberian\n");
  CHECK(canonical(a) == canonical(b));
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  auto c = a;
  c.seed = 2;
  CHECK(config_hash(c) != config_hash(a));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(csv_number(0.1) == "0.10000000000000001");
}

TEST_CASE("validation fails fast with field errors") {
  auto cfg = parse_config(
      "experiment = ids\nL = 8\nn = 15\neps = 0.05\nrealizations = 2\nlambda = -5:0:1\n");
  // h = 0.5, 4 h^2 = 1 > eps
  const auto errs = validate(cfg);
  CHECK(has_field(errs, "eps"));
  CHECK_THROWS_AS(run(cfg), ConfigError);

  const auto ladder = parse_config("experiment = silt\nt = 1\neps = 0.01 0.02\npaths = 10\n");
  CHECK(has_field(validate(ladder), "eps"));
  const auto counts = parse_config(
      "experiment = pam\nL = 4\nn = 7\neps = 1\nt = 0.5\nrealizations = 0\nprobes = 4\n");
  const auto e2 = validate(counts);
  CHECK(has_field(e2, "realizations"));
  CHECK(has_field(e2, "probes"));
  CHECK(has_field(validate(parse_config("experiment = nope\n")), "experiment"));
  CHECK(has_field(validate(parse_config("seed = 1\n")), "experiment"));
  CHECK(validate(parse_config("experiment = tauberian\ngamma = 3\nB = 0.5\n")).empty());
}

TEST_CASE("realization seeds are distinct") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t master : {0ULL, 1ULL, 2ULL})
    for (std::uint64_t i = 0; i < 2000; ++i) seen.insert(realization_seed(master, i));
  CHECK(seen.size() == 6000);
}

TEST_CASE("ids tables are byte-identical across runs") {
  const std::string text =
      "experiment = ids\nseed = 9\nL = 4\nn = 15\neps = 0.3\nrealizations = 3\n"
      "lambda = -4:10:0.5\nmin_count = 1\nresamples = 50\n";
  auto cfg = parse_config(text);
  cfg.output = scratch("ids_a").string();
  const auto rec = run(cfg);
  cfg.output = scratch("ids_b").string();
  (void)run(cfg);
  const auto dir_a = fs::temp_directory_path() / "idslab_test_ids_a";
  const auto dir_b = fs::temp_directory_path() / "idslab_test_ids_b";
  for (const char* f : {"ids.csv", "spectra.jsonl", "lifshitz_windows.csv", "config.txt"}) {
    CHECK_MESSAGE(!slurp(dir_a / f).empty(), f);
    CHECK_MESSAGE(slurp(dir_a / f) == slurp(dir_b / f), f);
  }
  bool fit = false;
  for (const auto& r : rec) {
    CHECK(r.error.empty());
    const auto j = nlohmann::json::parse(r.to_jsonl());
    for (const char* key :
         {"config_hash", "module", "operation", "inputs_digest", "outputs", "wall_time", "version"})
      CHECK(j.contains(key));
    fit = fit || r.operation == "lifshitz_fit";
  }
  CHECK(fit);

  const auto rep = report(dir_a);
  CHECK(rep.problems.empty());
  CHECK(rep.records == rec.size());
  const auto spectra = slurp(dir_a / "report" / "spectra.csv");
  CHECK(std::count(spectra.begin(), spectra.end(), '\n') == 4);
}

TEST_CASE("empty directory report") {
  const auto dir = scratch("empty");
  fs::create_directories(dir);
  const auto rep = report(dir);
  CHECK(rep.records == 0);
  CHECK(slurp(dir / "report" / "summary.csv") == "no records\n");
}

TEST_CASE("corrupt records are reported, not fatal") {
  const auto dir = scratch("corrupt");
  fs::create_directories(dir);
  std::ofstream(dir / "records.jsonl") << "{\"module\":\"m\",\"operation\":\"o\"}\n{broken\n";
  const auto rep = report(dir);
  CHECK(rep.records == 1);
  CHECK(rep.problems.size() == 1);
}

TEST_CASE("tauberian experiment writes its table") {
  auto cfg = parse_config(
      "experiment = tauberian\ngamma = 3\nB = 0.5\nriesz_sigma = 1\nrho = 0.584\n");
  cfg.output = scratch("taub").string();
  const auto rec = run(cfg);
  REQUIRE(rec.size() == 2);
  CHECK(rec[1].error.empty());
  const auto table = slurp(fs::path(cfg.output) / "tauberian.csv");
  CHECK(table.rfind("alpha,A,gamma,B\n1.5,", 0) == 0);
}
