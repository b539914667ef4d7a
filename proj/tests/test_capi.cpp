#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include <json.hpp>
#include <roughfrob/roughfrob.h>

using nlohmann::json;

namespace {

// Owns a string returned by the library.
struct Out {
  char* s = nullptr;
  ~Out() { rf_string_free(s); }
  json parsed() const { return json::parse(s); }
};

}  // namespace

TEST_CASE("field handles: create, evaluate, destroy") {
  rf_field* f = nullptr;
  REQUIRE(rf_field_create("poly:t2", &f) == RF_OK);
  CHECK(rf_field_dim(f) == 1);
  CHECK(rf_field_size(f) == 1);
  double p = 0.5, v = 0.0;
  CHECK(rf_field_eval(f, &p, &v) == RF_OK);
  CHECK(v == doctest::Approx(0.25));
  p = 2.0;
  CHECK(rf_field_eval(f, &p, &v) == RF_CONFIG);
  CHECK(std::string(rf_last_error()).size() > 0);
  rf_field_destroy(f);
  rf_field_destroy(nullptr);
}

TEST_CASE("vector fields evaluate column-major") {
  rf_field* f = nullptr;
  REQUIRE(rf_field_create("expr:x+y;x*y", &f) == RF_OK);
  CHECK(rf_field_dim(f) == 2);
  CHECK(rf_field_size(f) == 2);
  double p[2] = {0.5, 0.25}, v[2] = {0, 0};
  CHECK(rf_field_eval(f, p, v) == RF_OK);
  CHECK(v[0] == doctest::Approx(0.75));
  CHECK(v[1] == doctest::Approx(0.125));
  rf_field_destroy(f);
}

TEST_CASE("bad specs and null arguments") {
  rf_field* f = nullptr;
  CHECK(rf_field_create("nonsense:1", &f) == RF_CONFIG);
  CHECK(f == nullptr);
  CHECK(rf_field_create(nullptr, &f) == RF_INVALID_ARGUMENT);
  CHECK(rf_young_integral_1d(nullptr, nullptr, 0, 1, 10, nullptr, nullptr) == RF_INVALID_ARGUMENT);
}

TEST_CASE("Young integral through the C API") {
  rf_field *f = nullptr, *g = nullptr;
  REQUIRE(rf_field_create("poly:t", &f) == RF_OK);
  REQUIRE(rf_field_create("poly:t2", &g) == RF_OK);
  double value = 0.0, err = 1.0;
  CHECK(rf_young_integral_1d(f, g, 0.0, 1.0, 14, &value, &err) == RF_OK);
  CHECK(std::abs(value - 2.0 / 3.0) < 1e-8);
  CHECK(err < 1e-6);
  rf_field_destroy(f);
  rf_field_destroy(g);
}

TEST_CASE("write and reload a grid field") {
  rf_field* f = nullptr;
  REQUIRE(rf_field_create(R"({"kind":"weierstrass_1d","beta":0.8,"seed":4})", &f) == RF_OK);
  const std::string path = (std::filesystem::temp_directory_path() / "roughfrob_capi_field.csv").string();
  REQUIRE(rf_field_write(f, 8, path.c_str()) == RF_OK);
  rf_field* h = nullptr;
  REQUIRE(rf_field_load(path.c_str(), 0.8, &h) == RF_OK);
  double p = 0.375, a = 0, b = 0;  // a grid point at level 8
  rf_field_eval(f, &p, &a);
  rf_field_eval(h, &p, &b);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
  rf_field_destroy(f);
  rf_field_destroy(h);
  std::remove(path.c_str());
}

TEST_CASE("run a command with a JSON config") {
  Out out;
  CHECK(rf_run("integrate", R"({"f":"poly:t","g":"poly:t2","a":0,"b":1,"level":14})", &out.s) == RF_OK);
  json r = out.parsed();
  CHECK(r["value"].get<double>() == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("presets run and failing checks map to status 2") {
  Out ok;
  CHECK(rf_run("integrate", R"({"preset":"young_poly"})", &ok.s) == RF_OK);
  Out bad;
  CHECK(rf_run("check-jet", R"({"g":"identity2d","v":"rotational"})", &bad.s) == RF_CHECK_FAILED);
  CHECK(bad.parsed()["status"] == "fail");
}

TEST_CASE("errors come back as JSON records") {
  Out out;
  CHECK(rf_run("solve-implicit", R"({"preset":"implicit_degenerate"})", &out.s) == RF_CHECK_FAILED);
  json r = out.parsed();
  CHECK(r["error"]["kind"] == "degeneracy");
  Out cfg;
  CHECK(rf_run("integrate", "{not json", &cfg.s) == RF_CONFIG);
  Out unknown;
  CHECK(rf_run("no-such-command", "{}", &unknown.s) == RF_CONFIG);
}

TEST_CASE("line-oriented config text") {
  Out parsed;
  REQUIRE(rf_parse_config("level = 12\n[f]\nkind = weierstrass_1d\nbeta = 0.7\n", &parsed.s) == RF_OK);
  json j = parsed.parsed();
  CHECK(j["level"] == 12);
  CHECK(j["f"]["beta"] == 0.7);
  Out out;
  CHECK(rf_run_config_text("integrate", "f = \"poly:t\"\ng = \"poly:t2\"\nlevel = 14\n", &out.s) == RF_OK);
  CHECK(out.parsed()["value"].get<double>() == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
}
