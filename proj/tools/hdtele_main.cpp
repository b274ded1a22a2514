// Copyright 2026 The hdtele Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// hdtele command-line front end.

#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "hdtele/cli.hpp"

namespace {

using hdtele::cli::Kind;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;
constexpr int kExitIo = 4;

std::string flag_name(const std::string& key) {
  std::string f = key;
  for (auto& ch : f)
    if (ch == '_') ch = '-';
  return "--" + f;
}

struct Experiment {
  Kind kind;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> values;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-dimensional teleportation simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hdtele::cli::kVersion));

  std::string config_path, out_dir, format = "both";
  std::string seed_text;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  std::vector<Experiment> experiments;
  experiments.reserve(hdtele::cli::kind_names().size());
  for (const auto& [kind, name] : hdtele::cli::kind_names()) {
    experiments.push_back({kind, app.add_subcommand(name, "run the " + name + " experiment"), {}});
    auto& e = experiments.back();
    e.app->add_option("--config", config_path, "JSON config file; flags override its values");
    e.app->add_option("--seed", seed_text, "64-bit seed (default " + std::to_string(hdtele::cli::kDefaultSeed) + ")");
    e.app->add_option("--out", out_dir, std::string("output directory (default $") + hdtele::cli::kOutDirEnv + " or .)");
    e.app->add_option("--threads", threads, "worker threads; results do not depend on it")->check(CLI::PositiveNumber);
    e.app->add_option("--format", format, "json, csv or both")->check(CLI::IsMember({"json", "csv", "both"}));
    for (const auto& key : hdtele::cli::allowed_keys(kind)) {
      if (key == "experiment" || key == "seed") continue;
      e.app->add_option(flag_name(key), e.values[key], "config key " + key);
    }
  }
  std::vector<std::string> verify_paths;
  auto* verify = app.add_subcommand("verify", "re-check the hashes embedded in output files");
  verify->add_option("files", verify_paths, "JSON or CSV artifacts")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (verify->parsed()) {
      bool all_ok = true;
      for (const auto& p : verify_paths) {
        const auto r = hdtele::cli::verify_artifact(p);
        std::cout << p << ": " << (r.ok ? "OK" : "FAILED") << " (" << r.message << ")\n";
        all_ok = all_ok && r.ok;
      }
      return all_ok ? kExitOk : kExitInvariant;
    }
    for (auto& e : experiments) {
      if (!e.app->parsed()) continue;
      std::map<std::string, std::string> flags;
      for (const auto& [key, value] : e.values)
        if (e.app->count(flag_name(key)) > 0) flags[key] = value;
      if (e.app->count("--seed") > 0) flags["seed"] = seed_text;
      hdtele::cli::RunConfig cfg = hdtele::cli::load_config(e.kind, config_path, flags);
      cfg.threads = threads;
      cfg.out_dir = out_dir;
      cfg.format = format == "json" ? hdtele::cli::Format::json
                   : format == "csv" ? hdtele::cli::Format::csv
                                     : hdtele::cli::Format::both;
      const auto artifacts = hdtele::cli::execute(cfg);
      std::cout << artifacts.summary;
      for (const auto& path : hdtele::cli::write_artifacts(cfg, artifacts)) std::cout << "wrote " << path << "\n";
    }
  } catch (const hdtele::cli::ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const hdtele::cli::IoError& ex) {
    std::cerr << "i/o error: " << ex.what() << "\n";
    return kExitIo;
  } catch (const hdtele::InvariantViolation& ex) {
    std::cerr << "invariant violation: " << ex.what() << "\n";
    return kExitInvariant;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "config error: " << ex.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& ex) {
    std::cerr << "invariant violation: " << ex.what() << "\n";
    return kExitInvariant;
  }
  return kExitOk;
}
