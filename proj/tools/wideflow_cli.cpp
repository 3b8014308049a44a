// Copyright 2026 The Wideflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// wideflow command-line tool. Every subcommand writes its outputs and a
// manifest into --out; `wideflow rerun <manifest>` repeats a run exactly.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "wideflow/wideflow.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitZScore = 3;
constexpr double kZScoreLimit = 6.0;

struct Failure {
  int exit_code;
  std::string message;
};

int exit_code_for(wf_status status) {
  switch (status) {
    case WF_OK:
      return kExitOk;
    case WF_ERR_INCONCLUSIVE:
    case WF_ERR_NON_FINITE:
      return kExitInconclusive;
    default:
      return kExitValidation;
  }
}

void check(wf_status status, const std::string& context) {
  if (status != WF_OK) {
    throw Failure{exit_code_for(status), context + ": " + wf_last_error()};
  }
}

// Owns a string returned by the C API.
class Owned {
 public:
  Owned() = default;
  Owned(const Owned&) = delete;
  Owned& operator=(const Owned&) = delete;
  ~Owned() { wf_string_free(p_); }
  char** out() { return &p_; }
  std::string str() const { return p_ ? p_ : ""; }

 private:
  char* p_ = nullptr;
};

class Activation {
 public:
  explicit Activation(const std::string& spec) {
    check(wf_activation_create(spec.c_str(), &a_), "activation '" + spec + "'");
  }
  Activation(const Activation&) = delete;
  Activation& operator=(const Activation&) = delete;
  ~Activation() { wf_activation_destroy(a_); }
  const wf_activation* get() const { return a_; }

 private:
  wf_activation* a_ = nullptr;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitValidation, "cannot read " + path.string()};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Failure{kExitValidation, path.string() + ": " + e.what()};
  }
}

// An activation flag is a registry name or a path to a JSON spec.
std::string activation_argument(const std::string& value) {
  if (value.size() > 5 && value.ends_with(".json")) return read_json_file(value).dump();
  return value;
}

// Collects output files for one run and writes them with the manifest.
class RunOutput {
 public:
  RunOutput(fs::path dir, std::string subcommand, json arguments)
      : dir_(std::move(dir)),
        subcommand_(std::move(subcommand)),
        arguments_(std::move(arguments)),
        manifest_name_(subcommand_ + "-manifest.json") {}

  void add_json(const std::string& name, json body) {
    body["manifest"] = manifest_name_;
    files_.emplace_back(name, body.dump(2) + "\n");
  }
  void add_csv(const std::string& name, const std::string& body) {
    files_.emplace_back(name, "# manifest: " + manifest_name_ + "\n" + body);
  }

  void write() const {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Failure{kExitValidation, "cannot create " + dir_.string() + ": " + ec.message()};
    json outputs = json::array();
    for (const auto& [name, body] : files_) {
      write_file(dir_ / name, body);
      outputs.push_back(name);
    }
    json manifest = {
        {"tool", "wideflow"},
        {"version", wf_version()},
        {"subcommand", subcommand_},
        {"arguments", arguments_},
        {"seed", arguments_.contains("seed") ? arguments_["seed"] : json(nullptr)},
        {"outputs", outputs},
    };
    write_file(dir_ / manifest_name_, manifest.dump(2) + "\n");
  }

 private:
  static void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) throw Failure{kExitValidation, "cannot write " + path.string()};
  }

  fs::path dir_;
  std::string subcommand_;
  json arguments_;
  std::string manifest_name_;
  std::vector<std::pair<std::string, std::string>> files_;
};

// Subcommands take fully resolved arguments so a manifest can replay them.

int run_decompose(const json& args, const fs::path& out) {
  const Activation a(args.at("activation").get<std::string>());
  Owned text;
  check(wf_decompose(a.get(), args.at("degree").get<int>(), text.out()), "decompose");
  const json report = json::parse(text.str());
  std::printf("classification %s\nmean %.17g\nsecond_moment %.17g\n",
              report["classification"].get<std::string>().c_str(),
              report["mean"].get<double>(), report["second_moment"].get<double>());
  const auto& coeffs = report["coefficients"];
  for (std::size_t n = 0; n < coeffs.size(); ++n) {
    std::printf("a_%zu %.17g\n", n, coeffs[n].get<double>());
  }
  RunOutput run(out, "decompose", args);
  run.add_json("decompose.json", report);
  run.write();
  return kExitOk;
}

int run_flow(const json& args, const fs::path& out) {
  const Activation a(args.at("activation").get<std::string>());
  Owned csv;
  check(wf_flow_trajectory(a.get(), args.at("k0").get<double>(), args.at("depth").get<int>(),
                           csv.out()),
        "flow");
  RunOutput run(out, "flow", args);
  run.add_csv("flow_trajectory.csv", csv.str());
  Owned report;
  const wf_status status = wf_flow_report(a.get(), args.at("degree").get<int>(), report.out());
  if (status != WF_OK) {
    const std::string message = wf_last_error();
    run.write();
    throw Failure{exit_code_for(status), "flow: " + message};
  }
  const json r = json::parse(report.str());
  run.add_json("flow_report.json", r);
  run.write();
  std::printf("%s: fixed point %.17g, %s\n", r["activation"].get<std::string>().c_str(),
              r["fixed_point"].get<double>(), r["classification"].get<std::string>().c_str());
  return kExitOk;
}

int run_figure1(const json& args, const fs::path& out) {
  const std::size_t grid = args.at("grid").get<std::size_t>();
  RunOutput run(out, "figure1", args);
  const std::pair<const char*, const char*> panels[] = {
      {"relu", "figure1_relu.csv"},
      {"tanh4x", "figure1_tanh4x.csv"},
      {"relu-shifted", "figure1_relu_shifted.csv"},
  };
  for (const auto& [name, file] : panels) {
    const Activation a(name);
    Owned csv;
    check(wf_figure1_curve(a.get(), grid, csv.out()), std::string("figure1 ") + name);
    run.add_csv(file, csv.str());
  }
  run.write();
  std::printf("wrote 3 panels with %zu points each to %s\n", grid, out.string().c_str());
  return kExitOk;
}

int run_simulate(const json& args, unsigned workers, const fs::path& out) {
  const std::string request = args.at("config").dump();
  const std::uint64_t seed = args.at("seed").get<std::uint64_t>();
  const std::size_t samples = args.at("samples").get<std::size_t>();
  Owned report, csv;
  double max_z = 0.0;
  const std::string context = "simulate " + args.value("config_path", std::string("<config>"));
  check(wf_simulate(request.c_str(), seed, samples, workers, report.out(), csv.out(), &max_z),
        context);
  RunOutput run(out, "simulate", args);
  run.add_json("simulate.json", json::parse(report.str()));
  run.add_csv("simulate.csv", csv.str());
  const int wide = args.value("four_point_width", 0);
  if (wide > 0) {
    Owned fp;
    check(wf_four_point_scaling(request.c_str(), seed, wide, samples, workers, fp.out()),
          context);
    run.add_json("four_point.json", json::parse(fp.str()));
  }
  run.write();
  std::printf("max |z| = %.4g over %zu draws\n", max_z, samples);
  if (max_z > kZScoreLimit) {
    std::fprintf(stderr, "simulate: |z| = %.4g exceeds %.1f\n", max_z, kZScoreLimit);
    return kExitZScore;
  }
  return kExitOk;
}

int run_conjecture(const json& args, unsigned workers, const fs::path& out) {
  const std::string activation = args.at("activation").get<std::string>();
  Owned report;
  int underpowered = 0;
  check(wf_conjecture(args.at("n").get<int>(), args.at("m").get<int>(),
                      args.at("trials").get<std::size_t>(),
                      args.at("depth_constant").get<double>(),
                      args.at("seed").get<std::uint64_t>(),
                      args.at("mode").get<std::string>().c_str(), activation.c_str(),
                      workers, report.out(), &underpowered),
        "conjecture");
  const json r = json::parse(report.str());
  RunOutput run(out, "conjecture", args);
  run.add_json("conjecture.json", r);
  run.write();
  std::printf("%s\n", r["summary"].get<std::string>().c_str());
  if (underpowered) {
    std::fprintf(stderr,
                 "conjecture: no violations and prediction x trials < 5; run is underpowered\n");
    return kExitInconclusive;
  }
  return kExitOk;
}

int dispatch(const std::string& subcommand, const json& args, unsigned workers,
             const fs::path& out) {
  if (subcommand == "decompose") return run_decompose(args, out);
  if (subcommand == "flow") return run_flow(args, out);
  if (subcommand == "figure1") return run_figure1(args, out);
  if (subcommand == "simulate") return run_simulate(args, workers, out);
  if (subcommand == "conjecture") return run_conjecture(args, workers, out);
  throw Failure{kExitValidation, "unknown subcommand '" + subcommand + "'"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance flow of wide random networks"};
  app.set_version_flag("--version", std::string(wf_version()));
  app.require_subcommand(1);
  app.fallthrough();
  std::string out_dir = ".";
  app.add_option("-o,--out", out_dir, "Output directory");

  std::string activation = "tanh";
  int degree = 30;
  auto* decompose = app.add_subcommand("decompose", "Hermite decomposition of an activation");
  decompose->add_option("-a,--activation", activation, "Registry name or JSON spec file");
  decompose->add_option("-N,--degree", degree, "Truncation degree")->check(CLI::Range(3, 80));

  double k0 = 0.5;
  int depth = 50;
  auto* flow = app.add_subcommand("flow", "Iterate the covariance map and classify it");
  flow->add_option("-a,--activation", activation, "Registry name or JSON spec file");
  flow->add_option("--k0", k0, "Initial covariance in (-1, 1)");
  flow->add_option("-L,--depth", depth, "Layers to iterate")->check(CLI::PositiveNumber);
  flow->add_option("-N,--degree", degree, "Series truncation")->check(CLI::Range(3, 80));

  std::size_t grid = 201;
  auto* figure1 = app.add_subcommand("figure1", "Covariance map curves for three activations");
  figure1->add_option("--grid", grid, "Points on [-1, 1]")->check(CLI::Range(2, 1000000));

  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t samples = 1000;
  unsigned workers = 0;
  int four_point_width = 0;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo check against the covariance map");
  simulate->add_option("-c,--config", config_path, "Request JSON (network + dataset)")
      ->required()
      ->check(CLI::ExistingFile);
  simulate->add_option("--seed", seed, "Random seed")->required();
  simulate->add_option("-s,--samples", samples, "Weight draws")->check(CLI::Range(100, 100000000));
  simulate->add_option("-j,--workers", workers, "Worker threads (0: WIDEFLOW_WORKERS or all cores)");
  simulate->add_option("--four-point-width", four_point_width,
                       "Also compare the connected four-point correlator at this width");

  int n = 8;
  int m = 256;
  std::size_t trials = 10000;
  double depth_constant = 1.0;
  std::string mode = "network";
  auto* conjecture = app.add_subcommand("conjecture", "Rarity of all-negative outputs");
  conjecture->add_option("-n", n, "Input and output dimension")->check(CLI::Range(2, 62));
  conjecture->add_option("-m", m, "Dataset size")->check(CLI::PositiveNumber);
  conjecture->add_option("-t,--trials", trials, "Network draws")->check(CLI::Range(100, 1000000000));
  conjecture->add_option("--depth-constant", depth_constant, "c in depth = ceil(c log2 n)")
      ->check(CLI::PositiveNumber);
  conjecture->add_option("--seed", seed, "Random seed")->required();
  conjecture->add_option("--mode", mode, "network or independent")
      ->check(CLI::IsMember({"network", "independent"}));
  conjecture->add_option("-a,--activation", activation, "Registry name or JSON spec file");
  conjecture->add_option("-j,--workers", workers, "Worker threads");

  std::string manifest_path;
  auto* rerun = app.add_subcommand("rerun", "Repeat the run recorded in a manifest");
  rerun->add_option("manifest", manifest_path, "Manifest JSON")->required()->check(CLI::ExistingFile);
  rerun->add_option("-j,--workers", workers, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (decompose->parsed()) {
      return dispatch("decompose",
                      {{"activation", activation_argument(activation)}, {"degree", degree}},
                      workers, out_dir);
    }
    if (flow->parsed()) {
      return dispatch("flow",
                      {{"activation", activation_argument(activation)},
                       {"k0", k0},
                       {"depth", depth},
                       {"degree", degree}},
                      workers, out_dir);
    }
    if (figure1->parsed()) return dispatch("figure1", {{"grid", grid}}, workers, out_dir);
    if (simulate->parsed()) {
      json args = {{"config", read_json_file(config_path)},
                   {"config_path", config_path},
                   {"seed", seed},
                   {"samples", samples}};
      if (four_point_width > 0) args["four_point_width"] = four_point_width;
      return dispatch("simulate", args, workers, out_dir);
    }
    if (conjecture->parsed()) {
      return dispatch("conjecture",
                      {{"n", n},
                       {"m", m},
                       {"trials", trials},
                       {"depth_constant", depth_constant},
                       {"seed", seed},
                       {"mode", mode},
                       {"activation", activation_argument(activation)}},
                      workers, out_dir);
    }
    if (rerun->parsed()) {
      const json manifest = read_json_file(manifest_path);
      const std::string sub = manifest.at("subcommand").get<std::string>();
      fs::path dir = app.get_option("--out")->count() > 0
                         ? fs::path(out_dir)
                         : fs::path(manifest_path).parent_path();
      if (dir.empty()) dir = ".";
      return dispatch(sub, manifest.at("arguments"), workers, dir);
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "wideflow: %s\n", f.message.c_str());
    return f.exit_code;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "wideflow: malformed manifest or report: %s\n", e.what());
    return kExitValidation;
  }
  return kExitOk;
}
