#include "mbdiag/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mbdiag/evaluate.hpp"
#include "mbdiag/fixture.hpp"
#include "mbdiag/generate.hpp"
#include "mbdiag/golden.hpp"
#include "mbdiag/model.hpp"
#include "mbdiag/oracle.hpp"
#include "mbdiag/render.hpp"
#include "mbdiag/transform.hpp"

namespace mbdiag {

namespace {

using nlohmann::ordered_json;

std::string fmt15(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

double round15(double v) { return std::strtod(fmt15(v).c_str(), nullptr); }

Target parse_target(const std::string& s) {
  if (s == "heff") return Target::heff;
  if (s == "oeff") return Target::oeff;
  throw std::runtime_error("target must be 'heff' or 'oeff'");
}

ordered_json tensor_json(const OperatorTensor& t) {
  ordered_json jt;
  jt["rank"] = t.rank();
  jt["antisymmetrized"] = true;
  ordered_json entries = ordered_json::array();
  for (const auto& [key, v] : t.entries()) {
    ordered_json e;
    e["bra"] = key.first;
    e["ket"] = key.second;
    e["value"] = round15(v);
    entries.push_back(std::move(e));
  }
  jt["entries"] = std::move(entries);
  return jt;
}

std::vector<Diagram> enumerate_for(Target target, int order,
                                   const ModelInstance& m) {
  return target == Target::heff ? enumerate_heff(order, m)
                                : enumerate_oeff(order, m);
}

int cmd_enumerate(const RunConfig& cfg, std::ostream& out) {
  const ModelInstance m = load_model(cfg.model_path);
  require_valid(m);
  const Target target = parse_target(cfg.target);
  const auto diagrams = enumerate_for(target, cfg.order, m);
  out << "target " << cfg.target << " order " << cfg.order << ": "
      << diagrams.size() << " diagrams\n";
  for (std::size_t i = 0; i < diagrams.size(); ++i) {
    const auto& d = diagrams[i];
    out << "#" << i << " key " << std::hex << canonical_key(d) << std::dec
        << " sign " << sign_factor(d) << " weight " << weight_factor(d).str()
        << " rank " << d.external_rank() << "\n";
    if (cfg.render_format == "text") out << render_text(d);
    if (cfg.render_format == "dot")
      out << render_dot(d, "d" + std::to_string(i));
  }
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const ModelInstance m = load_model(cfg.model_path);
  require_valid(m);
  const Target target = parse_target(cfg.target);
  const EffectiveOperator result = evaluate_order_sum(target, cfg.order, m);
  ordered_json j;
  j["schema_version"] = 1;
  j["target"] = cfg.target;
  j["order"] = cfg.order;
  j["scalar"] = round15(result.scalar);
  ordered_json tensors = ordered_json::array();
  for (const auto& [r, t] : result.tensors) {
    (void)r;
    tensors.push_back(tensor_json(t));
  }
  j["tensors"] = std::move(tensors);
  const std::string text = j.dump(2) + "\n";
  if (!cfg.out_path.empty()) {
    std::ofstream f(cfg.out_path);
    if (!f) throw std::runtime_error("cannot write '" + cfg.out_path + "'");
    f << text;
    out << "wrote " << cfg.out_path << "\n";
  } else {
    out << text;
  }
  return 0;
}

int cmd_group(const RunConfig& cfg, std::ostream& out) {
  const ModelInstance m = load_model(cfg.model_path);
  require_valid(m);
  const Target target = parse_target(cfg.target);
  const auto diagrams = enumerate_for(target, cfg.order, m);
  const auto groups = group_skeletons(diagrams);
  out << diagrams.size() << " diagrams in " << groups.size() << " skeleton groups\n";
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    const EffectiveOperator value = evaluate_group(g, m);
    out << "group " << gi << " " << g.walk_notation << " members "
        << g.members.size() << " classes " << g.classes.size() << "\n";
    for (const auto& tc : g.classes) {
      out << "  " << g.walk_notation << tc.ordering_notation << " eta1 "
          << tc.eta1 << " members " << tc.members.size() << "\n";
    }
    out << "  scalar " << fmt15(value.scalar);
    for (const auto& [r, t] : value.tensors)
      out << "  rank" << r << " max|t| " << fmt15(t.max_abs());
    out << "\n";
  }
  return 0;
}

struct OrderCheck {
  int order;
  double error;
  double tolerance;
  bool pass;
};

OrderCheck check_order(const ModelInstance& m, int order, double tol_override) {
  OrderCheck c;
  c.order = order;
  double tol = tol_override;
  if (tol <= 0.0) tol = order == 1 ? 1e-12 : order == 2 ? 1e-10 : 1e-9;
  c.tolerance = tol;
  const EffectiveOperator engine = evaluate_order_sum(Target::heff, order, m);
  double err = compare_tensors(engine, bloch_heff(order, m), m);
  if (order == 3) {
    const auto coeffs = lambda_extract(m, 3);
    err = std::max(err, compare_tensors(engine, coeffs[3], m));
  }
  c.error = err;
  c.pass = err <= tol;
  return c;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  std::vector<std::pair<std::string, ModelInstance>> models;
  if (cfg.seed_sweep > 0) {
    for (int s = 1; s <= cfg.seed_sweep; ++s) {
      const int profile = s % 3;
      ModelInstance m = profile == 0 ? random_model(s, 2, 2, 3, 2)
                        : profile == 1 ? random_model(s, 1, 2, 3, 1)
                                       : random_model(s, 2, 3, 3, 2);
      models.push_back({"seed:" + std::to_string(s), std::move(m)});
    }
  }
  if (!cfg.model_path.empty()) {
    ModelInstance m = load_model(cfg.model_path);
    models.push_back({cfg.model_path, std::move(m)});
  }
  if (models.empty())
    throw std::runtime_error("verify needs --model or --seed-sweep");

  ordered_json report;
  report["schema_version"] = 1;
  report["command"] = "verify";
  report["max_order"] = cfg.order;
  bool all_pass = true;
  ordered_json jorders = ordered_json::array();
  for (int order = 1; order <= cfg.order; ++order) {
    ordered_json jo;
    jo["order"] = order;
    double worst = 0.0;
    ordered_json per_model = ordered_json::array();
    for (auto& [name, m] : models) {
      require_valid(m);
      const OrderCheck c = check_order(m, order, cfg.tolerance);
      worst = std::max(worst, c.error);
      ordered_json jm;
      jm["model"] = name;
      jm["max_rel_error"] = round15(c.error);
      jm["pass"] = c.pass;
      per_model.push_back(std::move(jm));
      jo["tolerance"] = round15(c.tolerance);
      if (!c.pass) all_pass = false;
    }
    jo["max_rel_error"] = round15(worst);
    jo["pass"] = worst <= jo["tolerance"].get<double>();
    jo["models"] = std::move(per_model);
    jorders.push_back(std::move(jo));
  }
  report["orders"] = std::move(jorders);
  report["pass"] = all_pass;
  const std::string text = report.dump(2) + "\n";
  if (!cfg.out_path.empty()) {
    std::ofstream f(cfg.out_path);
    if (!f) throw std::runtime_error("cannot write '" + cfg.out_path + "'");
    f << text;
  }
  out << text;
  return all_pass ? 0 : 1;
}

int cmd_golden(const RunConfig& cfg, std::ostream& out) {
  const auto results = run_golden(cfg.fixtures_dir);
  bool all = true;
  for (const auto& r : results) {
    out << (r.pass ? "PASS" : "FAIL") << " " << r.name << ": " << r.detail << "\n";
    if (!r.pass) all = false;
  }
  return all ? 0 : 1;
}

int cmd_render(const RunConfig& cfg, std::ostream& out) {
  std::vector<Diagram> diagrams;
  if (!cfg.fixture_path.empty()) {
    diagrams.push_back(load_diagram(cfg.fixture_path));
  } else {
    const ModelInstance m = load_model(cfg.model_path);
    require_valid(m);
    diagrams = enumerate_for(parse_target(cfg.target), cfg.order, m);
  }
  for (std::size_t i = 0; i < diagrams.size(); ++i) {
    if (cfg.diagram_index >= 0 && static_cast<int>(i) != cfg.diagram_index) continue;
    if (cfg.render_format == "dot")
      out << render_dot(diagrams[i], "d" + std::to_string(i));
    else
      out << render_text(diagrams[i]);
  }
  return 0;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.command == "enumerate") return cmd_enumerate(cfg, out);
    if (cfg.command == "eval") return cmd_eval(cfg, out);
    if (cfg.command == "group") return cmd_group(cfg, out);
    if (cfg.command == "verify") return cmd_verify(cfg, out);
    if (cfg.command == "golden") return cmd_golden(cfg, out);
    if (cfg.command == "render") return cmd_render(cfg, out);
    err << "unknown command '" << cfg.command << "'\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"diagrammatic effective-operator engine"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_model = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--model", cfg.model_path, "model JSON file");
    if (required) opt->required();
  };

  auto* enumerate = app.add_subcommand("enumerate", "list inequivalent diagrams");
  add_model(enumerate, true);
  enumerate->add_option("--target", cfg.target, "heff|oeff");
  enumerate->add_option("--order", cfg.order, "order in V")->required();
  enumerate->add_option("--render", cfg.render_format, "dot|text");

  auto* eval = app.add_subcommand("eval", "evaluate an order sum");
  add_model(eval, true);
  eval->add_option("--target", cfg.target, "heff|oeff");
  eval->add_option("--order", cfg.order, "order in V")->required();
  eval->add_option("--out", cfg.out_path, "output tensor JSON");

  auto* group = app.add_subcommand("group", "skeleton groups of an enumeration");
  add_model(group, true);
  group->add_option("--target", cfg.target, "heff|oeff");
  group->add_option("--order", cfg.order, "order in V")->required();

  auto* verify = app.add_subcommand("verify", "compare against the exact oracle");
  add_model(verify, false);
  verify->add_option("--order", cfg.order, "highest order to verify")->required();
  verify->add_option("--seed-sweep", cfg.seed_sweep, "number of seeded random models");
  verify->add_option("--tol", cfg.tolerance, "tolerance override");
  verify->add_option("--out", cfg.out_path, "report JSON path");

  auto* golden = app.add_subcommand("golden", "run the shipped golden fixtures");
  golden->add_option("--fixtures", cfg.fixtures_dir, "fixtures directory");

  auto* render = app.add_subcommand("render", "print diagrams as text or DOT");
  add_model(render, false);
  render->add_option("--fixture", cfg.fixture_path, "diagram fixture JSON");
  render->add_option("--target", cfg.target, "heff|oeff");
  render->add_option("--order", cfg.order, "order in V");
  render->add_option("--format", cfg.render_format, "dot|text");
  render->add_option("--index", cfg.diagram_index, "only this diagram");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  for (auto* sub : {enumerate, eval, group, verify, golden, render})
    if (sub->parsed()) cfg.command = sub->get_name();
  return run(cfg, out, err);
}

}  // namespace mbdiag
