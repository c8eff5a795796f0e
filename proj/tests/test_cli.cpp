#include <doctest.h>

#include <fstream>
#include <sstream>

#include "mbdiag/cli.hpp"
#include "mbdiag/model.hpp"

#ifndef MBDIAG_FIXTURES_DIR
#define MBDIAG_FIXTURES_DIR "fixtures"
#endif

using namespace mbdiag;

namespace {

std::string model_path() {
  return std::string(MBDIAG_FIXTURES_DIR) + "/model_small.json";
}

std::pair<int, std::string> run_cfg(const RunConfig& cfg) {
  std::ostringstream out, err;
  const int code = run(cfg, out, err);
  return {code, out.str() + err.str()};
}

}  // namespace

TEST_CASE("verify order 1 on the sample model exits cleanly") {
  RunConfig cfg;
  cfg.command = "verify";
  cfg.model_path = model_path();
  cfg.order = 1;
  auto [code, text] = run_cfg(cfg);
  CHECK(code == 0);
  CHECK(text.find("\"pass\": true") != std::string::npos);
  CHECK(text.find("\"schema_version\": 1") != std::string::npos);
}

TEST_CASE("identical config and model give byte-identical reports") {
  RunConfig cfg;
  cfg.command = "verify";
  cfg.model_path = model_path();
  cfg.order = 2;
  auto a = run_cfg(cfg);
  auto b = run_cfg(cfg);
  CHECK(a.first == 0);
  CHECK(a.second == b.second);

  RunConfig en;
  en.command = "enumerate";
  en.model_path = model_path();
  en.target = "heff";
  en.order = 2;
  CHECK(run_cfg(en).second == run_cfg(en).second);
}

TEST_CASE("missing model file is an input error (exit 2)") {
  RunConfig cfg;
  cfg.command = "enumerate";
  cfg.model_path = "no_such_model.json";
  cfg.order = 1;
  auto [code, text] = run_cfg(cfg);
  CHECK(code == 2);
  CHECK(text.find("error") != std::string::npos);
}

TEST_CASE("unknown command is an input error") {
  RunConfig cfg;
  cfg.command = "transmogrify";
  CHECK(run_cfg(cfg).first == 2);
}

TEST_CASE("eval writes a tensor file in the model entry format") {
  RunConfig cfg;
  cfg.command = "eval";
  cfg.model_path = model_path();
  cfg.target = "heff";
  cfg.order = 1;
  cfg.out_path = "eval_out_test.json";
  auto [code, text] = run_cfg(cfg);
  CHECK(code == 0);
  std::ifstream f(cfg.out_path);
  REQUIRE(f.good());
  std::stringstream ss;
  ss << f.rdbuf();
  CHECK(ss.str().find("\"entries\"") != std::string::npos);
  CHECK(ss.str().find("\"rank\"") != std::string::npos);
  std::remove(cfg.out_path.c_str());
}

TEST_CASE("golden subcommand runs the fixtures") {
  RunConfig cfg;
  cfg.command = "golden";
  cfg.fixtures_dir = MBDIAG_FIXTURES_DIR;
  auto [code, text] = run_cfg(cfg);
  CHECK(code == 0);
  CHECK(text.find("PASS heff3") != std::string::npos);
  CHECK(text.find("PASS oeff2") != std::string::npos);
  CHECK(text.find("PASS factorize6") != std::string::npos);
  CHECK(text.find("PASS grouping") != std::string::npos);
}

TEST_CASE("render emits dot or text for fixtures and enumerations") {
  RunConfig cfg;
  cfg.command = "render";
  cfg.fixture_path = std::string(MBDIAG_FIXTURES_DIR) + "/golden_heff3.json";
  cfg.render_format = "dot";
  auto [code, text] = run_cfg(cfg);
  CHECK(code == 0);
  CHECK(text.find("digraph") != std::string::npos);

  RunConfig cfg2;
  cfg2.command = "render";
  cfg2.model_path = model_path();
  cfg2.target = "heff";
  cfg2.order = 1;
  cfg2.diagram_index = 0;
  auto [code2, text2] = run_cfg(cfg2);
  CHECK(code2 == 0);
  CHECK(text2.find("heff diagram") != std::string::npos);
}

TEST_CASE("group subcommand prints notations and values") {
  RunConfig cfg;
  cfg.command = "group";
  cfg.model_path = model_path();
  cfg.target = "heff";
  cfg.order = 2;
  auto [code, text] = run_cfg(cfg);
  CHECK(code == 0);
  CHECK(text.find("skeleton groups") != std::string::npos);
  CHECK(text.find("eta1") != std::string::npos);
}

TEST_CASE("argv front end parses and dispatches") {
  const char* argv[] = {"mbdiag", "verify", "--model", nullptr, "--order", "1"};
  std::string mp = model_path();
  argv[3] = mp.c_str();
  std::ostringstream out, err;
  CHECK(run_cli(6, argv, out, err) == 0);

  const char* bad[] = {"mbdiag", "bogus"};
  std::ostringstream out2, err2;
  CHECK(run_cli(2, bad, out2, err2) == 2);
}
