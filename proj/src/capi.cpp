// SPDX-License-Identifier: Apache-2.0
#include <roughfrob/roughfrob.h>

#include <cstring>
#include <string>

#include <roughfrob/commands.hpp>
#include <roughfrob/config.hpp>
#include <roughfrob/signals.hpp>
#include <roughfrob/young.hpp>

struct rf_field {
  roughfrob::Field f;
};

namespace {

thread_local std::string last_error;

rf_status fail(rf_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

template <class Fn>
rf_status guarded(Fn&& fn) {
  using namespace roughfrob;
  try {
    last_error.clear();
    return fn();
  } catch (const Error& e) {
    return fail(static_cast<rf_status>(exit_code_for(e.kind())), e.what());
  } catch (const std::exception& e) {
    return fail(RF_CONFIG, e.what());
  } catch (...) {
    return fail(RF_CONFIG, "unknown failure");
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

roughfrob::json parse_spec(const char* spec) {
  std::string s(spec);
  auto b = s.find_first_not_of(" \t\n");
  if (b != std::string::npos && s[b] == '{') return roughfrob::json::parse(s);
  return roughfrob::json(s);
}

rf_status run_json(const char* command, const roughfrob::json& cfg, char** json_out) {
  return guarded([&] {
    auto out = roughfrob::run_command_safe(command, cfg);
    const auto it = out.result.find("error");
    if (it != out.result.end() && it->is_object()) last_error = it->value("message", "");
    *json_out = dup(out.result.dump());
    return static_cast<rf_status>(out.exit_code);
  });
}

}  // namespace

extern "C" {

rf_status rf_field_create(const char* spec, rf_field** out) {
  if (!spec || !out) return fail(RF_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new rf_field{roughfrob::make_signal(parse_spec(spec))};
    return RF_OK;
  });
}

rf_status rf_field_load(const char* path, double exponent, rf_field** out) {
  if (!path || !out) return fail(RF_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = new rf_field{roughfrob::read_grid_csv(std::string(path), exponent)};
    return RF_OK;
  });
}

void rf_field_destroy(rf_field* f) { delete f; }

int rf_field_dim(const rf_field* f) { return f ? f->f.dim() : 0; }

int rf_field_size(const rf_field* f) { return f ? f->f.rows() * f->f.cols() : 0; }

rf_status rf_field_eval(const rf_field* f, const double* point, double* out) {
  if (!f || !point || !out) return fail(RF_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    roughfrob::Point p{0, 0, 0};
    for (int i = 0; i < f->f.dim(); ++i) p[i] = point[i];
    roughfrob::Mat v = f->f(p);
    for (int j = 0; j < v.cols(); ++j)
      for (int i = 0; i < v.rows(); ++i) out[j * v.rows() + i] = v(i, j);
    return RF_OK;
  });
}

rf_status rf_field_write(const rf_field* f, int level, const char* path) {
  if (!f || !path) return fail(RF_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    roughfrob::Field s = f->f.is_grid() && level < 0 ? f->f : roughfrob::sample(f->f, roughfrob::Grid(f->f.domain(), level));
    roughfrob::write_grid_csv(s, std::string(path));
    return RF_OK;
  });
}

rf_status rf_young_integral_1d(const rf_field* f, const rf_field* g, double a, double b, int max_level,
                               double* value, double* error) {
  if (!f || !g || !value) return fail(RF_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    roughfrob::IntegrationOptions o;
    o.max_level = max_level;
    o.min_level = std::min(o.min_level, max_level);
    auto r = roughfrob::young_integral_1d(f->f, g->f, a, b, o);
    if (r.value.size() != 1) return fail(RF_CONFIG, "integrand is not scalar");
    *value = r.value(0, 0);
    if (error) *error = r.error;
    return RF_OK;
  });
}

rf_status rf_run(const char* command, const char* config_json, char** json_out) {
  if (!command || !json_out) return fail(RF_INVALID_ARGUMENT, "null argument");
  *json_out = nullptr;
  roughfrob::json cfg = roughfrob::json::object();
  if (config_json && *config_json) {
    try {
      cfg = roughfrob::json::parse(config_json);
    } catch (const std::exception& e) {
      auto rec = roughfrob::error_record(roughfrob::Error(roughfrob::ErrorKind::Config, e.what()));
      *json_out = dup(rec.dump());
      return fail(RF_CONFIG, e.what());
    }
  }
  return run_json(command, cfg, json_out);
}

rf_status rf_run_config_text(const char* command, const char* config_text, char** json_out) {
  if (!command || !json_out) return fail(RF_INVALID_ARGUMENT, "null argument");
  *json_out = nullptr;
  roughfrob::json cfg;
  try {
    cfg = roughfrob::parse_config(config_text ? config_text : "");
  } catch (const roughfrob::Error& e) {
    *json_out = dup(roughfrob::error_record(e).dump());
    return fail(RF_CONFIG, e.what());
  }
  return run_json(command, cfg, json_out);
}

rf_status rf_parse_config(const char* config_text, char** json_out) {
  if (!config_text || !json_out) return fail(RF_INVALID_ARGUMENT, "null argument");
  *json_out = nullptr;
  return guarded([&] {
    *json_out = dup(roughfrob::parse_config(config_text).dump());
    return RF_OK;
  });
}

const char* rf_last_error(void) { return last_error.c_str(); }

void rf_string_free(char* s) { std::free(s); }

}  // extern "C"
