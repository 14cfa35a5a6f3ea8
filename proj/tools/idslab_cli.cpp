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

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "idslab/common.hpp"
#include "idslab/lab.hpp"
#include "idslab/tauberian.hpp"
#include "idslab/variational.hpp"

namespace lab = idslab::lab;

namespace {

void print_errors(const std::vector<lab::FieldError>& errors) {
  for (const auto& e : errors) std::cerr << "error: " << e.field << ": " << e.message << '\n';
}

std::optional<lab::ExperimentConfig> load(const std::string& path) {
  try {
    auto cfg = lab::load_config(path);
    lab::apply_environment(cfg);
    return cfg;
  } catch (const lab::ConfigError& e) {
    print_errors(e.errors);
  }
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"idslab: integrated density of states experiments"};
  app.set_version_flag("--version", lab::kVersion);
  app.require_subcommand(1);

  std::string config_path, dir, output;
  int threads = -1;
  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--output", output, "output directory (overrides config and environment)");
  run->add_option("--threads", threads, "OpenMP threads")->check(CLI::NonNegativeNumber);

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);

  auto* report = app.add_subcommand("report", "summarize a run directory");
  report->add_option("dir", dir, "run directory")->required()->check(CLI::ExistingDirectory);

  int d = 2, resolution = 4;
  double sigma = 2.0, nu = 1.0;
  auto* constants = app.add_subcommand("constants", "variational constants kappa, M, rho");
  constants->add_option("--d", d, "dimension")->required()->check(CLI::Range(1, 3));
  constants->add_option("--sigma", sigma, "Riesz exponent")->required();
  constants->add_option("--resolution", resolution, "mesh levels")->check(CLI::Range(2, 8));
  constants->add_option("--nu", nu, "noise strength");

  std::optional<double> gamma, B, alpha, A;
  auto* taub = app.add_subcommand("tauberian", "convert (gamma, B) <-> (alpha, A)");
  auto* og = taub->add_option("--gamma", gamma);
  auto* ob = taub->add_option("--B", B);
  auto* oa = taub->add_option("--alpha", alpha);
  auto* oA = taub->add_option("--A", A);
  og->needs(ob);
  ob->needs(og);
  oa->needs(oA);
  oA->needs(oa);
  og->excludes(oa);
  oa->excludes(og);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = load(config_path);
      if (!cfg) return 2;
      if (!output.empty()) cfg->output = output;
      if (threads >= 0) cfg->threads = threads;
      if (const auto errs = lab::validate(*cfg); !errs.empty()) {
        print_errors(errs);
        return 2;
      }
      const auto records = lab::run(*cfg);
      int failed = 0;
      for (const auto& r : records) {
        if (!r.error.empty()) {
          ++failed;
          std::cerr << "error: " << r.module << "/" << r.operation << ": " << r.error << '\n';
        }
      }
      std::cout << records.size() << " records in " << cfg->output << " (config "
                << lab::config_hash(*cfg) << ")\n";
      return failed == 0 ? 0 : 1;
    }
    if (*validate) {
      auto cfg = load(config_path);
      if (!cfg) return 2;
      if (const auto errs = lab::validate(*cfg); !errs.empty()) {
        print_errors(errs);
        return 2;
      }
      std::cout << "ok " << cfg->experiment << " " << lab::config_hash(*cfg) << '\n';
      return 0;
    }
    if (*report) {
      const auto rep = lab::report(dir);
      for (const auto& f : rep.files) std::cout << f << '\n';
      for (const auto& p : rep.problems) std::cerr << "warning: " << p << '\n';
      return 0;
    }
    if (*constants) {
      const auto v = idslab::optimize_kappa(d, sigma, resolution);
      const auto rc = idslab::rate_constants(d, sigma, nu, v.kappa);
      nlohmann::json j{{"d", d},
                       {"sigma", sigma},
                       {"kappa", v.kappa},
                       {"M", v.M},
                       {"rho", v.rho},
                       {"residual", v.residual},
                       {"converged", v.converged},
                       {"lifshitz_constant", rc.lifshitz_constant},
                       {"lifshitz_exponent", rc.lifshitz_exponent}};
      if (rc.intersection_rate) j["intersection_rate"] = *rc.intersection_rate;
      if (rc.constant_3d) j["constant_3d"] = *rc.constant_3d;
      std::cout << j.dump(2) << '\n';
      return v.converged ? 0 : 1;
    }
    if (*taub) {
      if (!gamma && !alpha) {
        std::cerr << "error: give --gamma and --B, or --alpha and --A\n";
        return 2;
      }
      const auto p = gamma ? idslab::tauberian_convert(
                                 idslab::TauberianDirection::from_transform, *gamma, *B)
                           : idslab::tauberian_convert(idslab::TauberianDirection::from_tail,
                                                       *alpha, *A);
      std::cout << nlohmann::json{{"alpha", p.alpha}, {"A", p.A}, {"gamma", p.gamma}, {"B", p.B}}
                       .dump(2)
                << '\n';
      return 0;
    }
  } catch (const idslab::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 2;
  } catch (const idslab::PreconditionError& e) {
    std::cerr << "precondition: " << e.what() << '\n';
    return 2;
  } catch (const lab::ConfigError& e) {
    print_errors(e.errors);
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
