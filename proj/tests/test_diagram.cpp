#include <doctest.h>

#include <random>
#include <set>

#include "mbdiag/fixture.hpp"
#include "mbdiag/generate.hpp"
#include "mbdiag/model.hpp"
#include "mbdiag/render.hpp"
#include "mbdiag/transform.hpp"

#ifndef MBDIAG_FIXTURES_DIR
#define MBDIAG_FIXTURES_DIR "fixtures"
#endif

using namespace mbdiag;

namespace {

std::string fixture(const char* name) {
  return std::string(MBDIAG_FIXTURES_DIR) + "/" + name;
}

Diagram golden_heff3() { return load_diagram(fixture("golden_heff3.json")); }
Diagram golden_oeff2() { return load_diagram(fixture("golden_oeff2.json")); }
Diagram golden_factorize6() { return load_diagram(fixture("golden_factorize6.json")); }

std::vector<int> all_vertices(const Diagram& d) {
  std::vector<int> v(d.vertex_count());
  for (int i = 0; i < d.vertex_count(); ++i) v[i] = i;
  return v;
}

}  // namespace

TEST_CASE("EnergyExpr: render, parse, evaluate") {
  EnergyExpr e;
  e.add("a", 1);
  e.add("b", 1);
  e.add("t", -1);
  e.add("n", -1);
  CHECK(e.str() == "(\xCE\xB5_a+\xCE\xB5_b-\xCE\xB5_n-\xCE\xB5_t)");
  CHECK(e.matches_string("(\xCE\xB5_a+\xCE\xB5_b\xE2\x88\x92\xCE\xB5_t\xE2\x88\x92\xCE\xB5_n)"));
  CHECK(e.matches_string("(e_b + e_a - e_n - e_t)"));
  CHECK(!e.matches_string("(e_a+e_b-e_t)"));
  CHECK(e.value({{"a", 1.0}, {"b", 2.0}, {"t", 0.5}, {"n", 0.25}}) == 2.25);
}

TEST_CASE("e_noe: whole diagram vanishes, single vertex is out minus in") {
  Diagram d = golden_heff3();
  CHECK(e_noe(d, all_vertices(d), true).zero());

  // single vertex with one outgoing and one ingoing line
  Diagram s;
  s.target = Target::heff;
  s.vertices.push_back({VertexKind::V, 1, "V1"});
  s.effective_level = 2;
  Line out;
  out.type = LineType::dashed;
  out.from_vertex = 0;
  out.from_slot = 0;
  out.label = "m";
  Line in;
  in.type = LineType::dashed;
  in.to_vertex = 0;
  in.to_slot = 0;
  in.label = "p";
  s.lines = {out, in};
  s.require_valid();
  EnergyExpr e = e_noe(s, {0});
  CHECK(e.value({{"m", 1.2}, {"p", 0.5}}) == doctest::Approx(0.7));
}

TEST_CASE("e_noe: additive over disjoint vertex sets") {
  Diagram d = golden_factorize6();
  EnergyExpr lhs = e_noe(d, {0, 1, 3});
  EnergyExpr sum = e_noe(d, {0});
  sum += e_noe(d, {1});
  sum += e_noe(d, {3});
  // shared internal lines cancel inside the union, so compare numerically
  auto energies = random_line_energies(d, 7);
  double separate = e_noe(d, {0}).value(energies) + e_noe(d, {1}).value(energies) +
                    e_noe(d, {3}).value(energies);
  CHECK(lhs.value(energies) == doctest::Approx(separate).epsilon(1e-14));
}

TEST_CASE("e_noe: complement identity under degenerate valence") {
  Diagram d = golden_factorize6();
  auto energies = random_line_energies(d, 3);
  // all vertices except Vb (index 4)
  const double lhs = e_noe(d, {0, 1, 2, 3, 5}).value(energies);
  const double rhs = -e_noe(d, {4}).value(energies);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
}

TEST_CASE("cut_denominator: pinned factors of the golden fixtures") {
  Diagram d1 = golden_heff3();
  CHECK(cut_denominator(d1, 1).matches_string("(e_a+e_b-e_t-e_n)"));
  CHECK(cut_denominator(d1, 2).matches_string("(e_b+e_p+e_q-e_t-e_n-e_s)"));
  Diagram d2 = golden_oeff2();
  CHECK(cut_denominator(d2, 1).matches_string("(e_a+e_b-e_t-e_n)"));
  CHECK(cut_denominator(d2, 2).matches_string("(e_b+e_m-e_t-e_s)"));
  CHECK_THROWS(cut_denominator(d1, 0));
  CHECK_THROWS(cut_denominator(d1, 3));
}

TEST_CASE("cut_denominator equals minus the cumulative net outflow") {
  ModelInstance m = random_model(11, 2, 2, 2, 1);
  for (const Diagram& d : enumerate_oeff(2, m)) {
    for (int cut = 1; cut < d.vertex_count(); ++cut) {
      std::vector<int> below(cut);
      for (int i = 0; i < cut; ++i) below[i] = i;
      EnergyExpr sum = e_noe(d, below, d.effective_level <= cut);
      EnergyExpr c = cut_denominator(d, cut);
      c += sum;
      CHECK(c.zero());
    }
  }
}

TEST_CASE("sign and weight of the golden fixtures") {
  Diagram d1 = golden_heff3();
  CHECK(hole_count(d1) == 2);
  CHECK(loop_count(d1) == 1);
  CHECK(sign_factor(d1) == -1);
  CHECK(weight_factor(d1).num == 2);
  CHECK(weight_factor(d1).den == 1);

  Diagram d3 = golden_factorize6();
  CHECK(hole_count(d3) == 5);
  CHECK(loop_count(d3) == 1);
  CHECK(sign_factor(d3) == 1);
  CHECK(weight_factor(d3).num == 1);
}

TEST_CASE("weight_factor: all-inequivalent externals give (m!)^2") {
  // two-body effective operator, four external lines on four different ports
  // of different vertices: (2!)^2 / 1 = 4
  ModelInstance m = random_model(2, 1, 2, 1, 1);
  bool found = false;
  for (const Diagram& d : enumerate_heff(2, m)) {
    if (d.external_rank() != 2) continue;
    std::set<int> vertices;
    for (int li : d.external_bra_lines()) vertices.insert(d.lines[li].attached_vertex());
    for (int li : d.external_ket_lines()) vertices.insert(d.lines[li].attached_vertex() + 16);
    if (vertices.size() == 4) {
      CHECK(weight_factor(d).num == 4);
      CHECK(weight_factor(d).den == 1);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("canonical_key: invariant under port permutations, fresh labels") {
  std::mt19937_64 rng(5);
  ModelInstance m = random_model(13, 1, 2, 2, 1);
  auto diagrams = enumerate_heff(2, m);
  int rounds = 0;
  for (Diagram d : diagrams) {
    const std::string form = canonical_form(d);
    const auto key = canonical_key(d);
    for (int it = 0; it < 1000; ++it) {
      const int v = static_cast<int>(rng() % d.vertex_count());
      const bool bra = rng() % 2;
      std::vector<int> perm(d.vertices[v].rank);
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
      std::shuffle(perm.begin(), perm.end(), rng);
      d.permute_ports(v, bra, perm);
      d.assign_labels();
      CHECK(canonical_form(d) == form);
      CHECK(canonical_key(d) == key);
      ++rounds;
    }
  }
  CHECK(rounds >= 1000 * static_cast<int>(diagrams.size()));
}

TEST_CASE("canonical_key: enumerated diagrams are pairwise distinct") {
  ModelInstance m = random_model(17, 1, 2, 2, 1);
  auto diagrams = enumerate_heff(2, m);
  std::set<std::string> forms;
  for (const auto& d : diagrams) CHECK(forms.insert(canonical_form(d)).second);
  // ladder and ring topologies sit in that set and differ
  CHECK(diagrams.size() > 2);
}

TEST_CASE("is_linked") {
  CHECK(is_linked(golden_heff3()));
  CHECK(is_linked(golden_factorize6()));
  // two vertices, no shared lines, no dashed attachment
  Diagram d;
  d.target = Target::heff;
  d.vertices = {{VertexKind::V, 1, "V1"}, {VertexKind::V, 1, "V2"}};
  d.effective_level = 3;
  auto bubble = [&](int v, const char* label) {
    Line l;
    l.type = LineType::hole;
    l.from_vertex = v;
    l.from_slot = 0;
    l.to_vertex = v;
    l.to_slot = 0;
    l.label = label;
    return l;
  };
  d.lines = {bubble(0, "a"), bubble(1, "b")};
  d.require_valid();
  CHECK(!is_linked(d));
}

TEST_CASE("validate: broken diagrams are rejected") {
  Diagram d = golden_heff3();
  d.lines[0].label = d.lines[1].label;  // duplicate label
  CHECK(!d.validate().empty());

  Diagram d2 = golden_heff3();
  std::swap(d2.lines[0].from_vertex, d2.lines[0].to_vertex);  // particle goes down
  std::swap(d2.lines[0].from_slot, d2.lines[0].to_slot);
  CHECK(!d2.validate().empty());

  Diagram d3 = golden_oeff2();
  d3.effective_level = 4;  // O_eff effective vertex must sit at O's level
  CHECK(!d3.validate().empty());
}

TEST_CASE("wick_assembly equals sign_factor with path-paired externals") {
  ModelInstance m = random_model(19, 2, 2, 2, 1);
  auto check_diagram = [&](const Diagram& d) {
    const ExternalAssembly a = wick_assembly(d);
    REQUIRE(a.bra_lines.size() == a.ket_lines.size());
    // exit line of the open path entered by each external ket line
    std::vector<int> path_exit;
    for (int ket : a.ket_lines) {
      int line = ket;
      while (true) {
        const int v = d.lines[line].to_vertex;
        const int s = d.lines[line].to_slot;
        line = d.line_at(v, true, s);
        if (!d.lines[line].internal()) break;
      }
      path_exit.push_back(line);
    }
    // parity of matching the assembly bra order onto the path order
    std::vector<int> perm;
    for (int exit : path_exit) {
      for (std::size_t i = 0; i < a.bra_lines.size(); ++i)
        if (a.bra_lines[i] == exit) perm.push_back(static_cast<int>(i));
    }
    REQUIRE(perm.size() == a.bra_lines.size());
    int parity = 1;
    for (std::size_t i = 0; i < perm.size(); ++i)
      for (std::size_t j = i + 1; j < perm.size(); ++j)
        if (perm[i] > perm[j]) parity = -parity;
    CHECK(a.phase == sign_factor(d) * parity);
  };
  for (const auto& d : enumerate_heff(2, m)) check_diagram(d);
  for (const auto& d : enumerate_oeff(1, m)) check_diagram(d);
  check_diagram(golden_heff3());
  check_diagram(golden_oeff2());
  check_diagram(golden_factorize6());
}

TEST_CASE("render: stable text and dot output") {
  Diagram d = golden_heff3();
  const std::string text = render_text(d);
  CHECK(text == render_text(d));
  CHECK(text.find("Va") != std::string::npos);
  const std::string dot = render_dot(d);
  CHECK(dot.find("digraph") == 0);
  CHECK(dot.find("style=dashed") != std::string::npos);
  const std::string dot2 = render_dot(golden_oeff2());
  CHECK(dot2.find("style=dotted") != std::string::npos);  // free lines
}
