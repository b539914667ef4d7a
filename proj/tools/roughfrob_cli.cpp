// SPDX-License-Identifier: Apache-2.0
// roughfrob: command-line front end over the C API.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <roughfrob/roughfrob.h>

using json = nlohmann::json;

namespace {

const std::vector<std::pair<std::string, std::string>> kCommands = {
    {"integrate", "Young integral of f dg on an interval or segment"},
    {"boundary", "Young integral of f dg around a rectangle"},
    {"check-jet", "dyadic jet test for v = V(g), optional round trip"},
    {"check-wedge", "wedge-null check for pairs of signal components"},
    {"check-involutivity", "involutivity lattice for a Pfaff driver"},
    {"corrector", "correct (v1, v2) into a jet and report the sign"},
    {"solve-yde", "Young differential equation on [a, b]"},
    {"solve-pfaff", "rough Pfaff system, wedge_null or diagonal mode"},
    {"solve-implicit", "implicit function theta with F(g, theta) = F(g0, theta0)"},
    {"gen-signal", "sample a signal spec to a grid CSV"},
    {"converge", "refinement studies: integral, germ, mollify, pfaff, gronwall"}};

struct Flags {
  std::string config, preset, out, mode, f, g, v, y, driver, study, sign;
  std::vector<std::string> sets;
  int level = -1, depth = -1;
  double tol = -1.0;
  long long seed = -1;
  double a = NAN, b = NAN;
};

json literal(const std::string& s) {
  try {
    return json::parse(s);
  } catch (const json::exception&) {
    return s;
  }
}

/// Reads a config file through the library parser (key = value format or plain JSON).
/// An argument starting with '{' is taken as inline JSON.
int load(const std::string& path, json& cfg) {
  const bool inline_json = !path.empty() && path.front() == '{';
  std::ifstream in;
  if (!inline_json) in.open(path);
  if (!inline_json && !in) {
    std::cout << json{{"status", "error"},
                      {"error", {{"kind", "config"}, {"message", "cannot read config file '" + path + "'"}}},
                      {"exit_code", 4}}
                     .dump(2)
              << "\n";
    return 4;
  }
  std::string text = inline_json ? path : std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto b = text.find_first_not_of(" \t\r\n");
  if (b != std::string::npos && text[b] == '{') {
    try {
      cfg = json::parse(text);
      return 0;
    } catch (const json::exception& e) {
      std::cout << json{{"status", "error"}, {"error", {{"kind", "config"}, {"message", e.what()}}}, {"exit_code", 4}}
                       .dump(2)
                << "\n";
      return 4;
    }
  }
  char* out = nullptr;
  rf_status st = rf_parse_config(text.c_str(), &out);
  if (st != RF_OK) {
    std::cout << json{{"status", "error"}, {"error", {{"kind", "config"}, {"message", rf_last_error()}}}, {"exit_code", 4}}
                     .dump(2)
              << "\n";
    return 4;
  }
  cfg = json::parse(out);
  rf_string_free(out);
  return 0;
}

bool write_file(const std::string& p, const std::string& text) {
  std::ofstream o(p);
  o << text;
  return bool(o);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roughfrob: Young integration, g-jets and rough Pfaff solvers"};
  app.require_subcommand(1);
  Flags fl;
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : kCommands) {
    CLI::App* s = app.add_subcommand(name, help);
    s->add_option("--config", fl.config, "config file (key = value tables or JSON) or inline JSON");
    s->add_option("--preset", fl.preset, "named preset");
    s->add_option("--out", fl.out, "result JSON path; grids and tables are written beside it");
    s->add_option("--level", fl.level, "grid or refinement level");
    s->add_option("--tol", fl.tol, "tolerance");
    s->add_option("--seed", fl.seed, "seed for random signals");
    s->add_option("--depth", fl.depth, "dyadic depth for additivity checks");
    s->add_option("--mode", fl.mode, "solve-pfaff mode: wedge_null or diagonal");
    s->add_option("--f", fl.f, "integrand signal");
    s->add_option("--g", fl.g, "driving signal");
    s->add_option("--v", fl.v, "jet driver name");
    s->add_option("--y", fl.y, "YDE driving path");
    s->add_option("--driver", fl.driver, "structured driver name");
    s->add_option("--study", fl.study, "converge study: integral, germ, mollify, pfaff, gronwall");
    s->add_option("--sign", fl.sign, "corrector sign: plus, minus or auto");
    s->add_option("--a", fl.a, "left end");
    s->add_option("--b", fl.b, "right end");
    s->add_option("--set", fl.sets, "extra key=value (value parsed as JSON when possible)");
    subs.push_back(s);
  }
  CLI11_PARSE(app, argc, argv);
  std::string command;
  for (auto* s : subs)
    if (s->parsed()) command = s->get_name();

  json cfg = json::object();
  if (!fl.config.empty()) {
    if (int rc = load(fl.config, cfg)) return rc;
  }
  if (!fl.preset.empty()) cfg["preset"] = fl.preset;
  if (fl.level >= 0) cfg["level"] = fl.level;
  if (fl.tol >= 0) cfg["tol"] = fl.tol;
  if (fl.seed >= 0) cfg["seed"] = fl.seed;
  if (fl.depth >= 0) cfg["depth"] = fl.depth;
  if (!fl.mode.empty()) cfg["mode"] = fl.mode;
  if (!fl.study.empty()) cfg["study"] = fl.study;
  if (!fl.sign.empty()) cfg["sign"] = fl.sign;
  auto sig = [](const std::string& s) { return s.rfind('{', 0) == 0 ? json::parse(s) : json(s); };
  if (!fl.f.empty()) cfg["f"] = sig(fl.f);
  if (!fl.g.empty()) cfg["g"] = sig(fl.g);
  if (!fl.y.empty()) cfg["y"] = sig(fl.y);
  if (!fl.v.empty()) cfg["v"] = sig(fl.v);
  if (!fl.driver.empty()) cfg["driver"] = sig(fl.driver);
  if (!std::isnan(fl.a)) cfg["a"] = fl.a;
  if (!std::isnan(fl.b)) cfg["b"] = fl.b;
  for (const auto& kv : fl.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "--set expects key=value\n";
      return 4;
    }
    cfg[kv.substr(0, eq)] = literal(kv.substr(eq + 1));
  }
  if (!fl.out.empty()) cfg["out_dir"] = std::filesystem::absolute(fl.out).parent_path().string();
  if (!fl.out.empty()) cfg["out_stem"] = std::filesystem::path(fl.out).stem().string();

  char* out = nullptr;
  rf_status st = rf_run(command.c_str(), cfg.dump().c_str(), &out);
  std::string text = out ? json::parse(out).dump(2) : "{}";
  rf_string_free(out);
  if (fl.out.empty()) {
    std::cout << text << "\n";
  } else {
    if (!write_file(fl.out, text + "\n")) {
      std::cout << json{{"status", "error"}, {"error", {{"kind", "config"}, {"message", "cannot write " + fl.out}}}, {"exit_code", 4}}
                       .dump(2)
                << "\n";
      return 4;
    }
  }
  return static_cast<int>(st);
}
