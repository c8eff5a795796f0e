#include <doctest.h>

#include <functional>
#include <map>
#include <set>

#include "mbdiag/fixture.hpp"
#include "mbdiag/generate.hpp"
#include "mbdiag/model.hpp"

#ifndef MBDIAG_FIXTURES_DIR
#define MBDIAG_FIXTURES_DIR "fixtures"
#endif

using namespace mbdiag;

namespace {

// Independent brute-force pairing oracle: assigns ket ports (instead of bra
// ports) and keeps every matching, then canonicalizes.
std::set<std::string> brute_force_forms(const std::vector<Vertex>& vertices,
                                        Target target) {
  struct Port {
    int vertex, slot;
  };
  std::vector<Port> bras, kets;
  for (int v = 0; v < static_cast<int>(vertices.size()); ++v)
    for (int s = 0; s < vertices[v].rank; ++s) {
      bras.push_back({v, s});
      kets.push_back({v, s});
    }
  std::set<std::string> forms;
  std::vector<int> partner(kets.size(), -1);
  std::vector<char> bra_used(bras.size(), 0);
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == kets.size()) {
      Diagram d;
      d.target = target;
      d.vertices = vertices;
      int ov = -1;
      for (int v = 0; v < d.vertex_count(); ++v)
        if (vertices[v].kind == VertexKind::O) ov = v;
      d.effective_level = target == Target::heff ? d.vertex_count() + 1
                                                 : d.level_of(ov);
      std::vector<char> bra_done(bras.size(), 0);
      for (std::size_t i = 0; i < kets.size(); ++i) {
        Line l;
        l.to_vertex = kets[i].vertex;
        l.to_slot = kets[i].slot;
        if (partner[i] >= 0) {
          bra_done[partner[i]] = 1;
          l.from_vertex = bras[partner[i]].vertex;
          l.from_slot = bras[partner[i]].slot;
          l.type = l.from_vertex < l.to_vertex ? LineType::particle : LineType::hole;
          if (l.from_vertex == l.to_vertex &&
              vertices[l.from_vertex].kind == VertexKind::O)
            return;  // no core loops on the transition operator vertex
        } else {
          l.type = vertices[l.to_vertex].kind == VertexKind::V ? LineType::dashed
                                                               : LineType::free_line;
        }
        d.lines.push_back(l);
      }
      for (std::size_t i = 0; i < bras.size(); ++i) {
        if (bra_done[i]) continue;
        Line l;
        l.from_vertex = bras[i].vertex;
        l.from_slot = bras[i].slot;
        l.type = vertices[l.from_vertex].kind == VertexKind::V ? LineType::dashed
                                                               : LineType::free_line;
        d.lines.push_back(l);
      }
      if (is_linked(d)) forms.insert(canonical_form(d));
      return;
    }
    partner[k] = -1;
    rec(k + 1);
    for (std::size_t b = 0; b < bras.size(); ++b) {
      if (bra_used[b]) continue;
      bra_used[b] = 1;
      partner[k] = static_cast<int>(b);
      rec(k + 1);
      bra_used[b] = 0;
      partner[k] = -1;
    }
  };
  rec(0);
  return forms;
}

std::set<std::string> forms_of(const std::vector<Diagram>& ds) {
  std::set<std::string> out;
  for (const auto& d : ds) out.insert(canonical_form(d));
  return out;
}

}  // namespace

TEST_CASE("external classifications of one vertex") {
  CHECK(external_classification_count(1) == 4);
  CHECK(external_classification_count(2) == 9);
}

TEST_CASE("order 1: the single-vertex diagrams") {
  ModelInstance m = random_model(1, 1, 2, 1, 1);
  auto ds = enumerate_heff(1, m);
  // rank 2: all-external, one core loop, two core loops; rank 1: all-external,
  // one core loop.
  CHECK(ds.size() == 5);
  for (const auto& d : ds) {
    CHECK(d.vertex_count() == 1);
    CHECK(is_linked(d));
    CHECK(d.validate().empty());
  }
}

TEST_CASE("wick_contractions matches the brute-force pairing oracle") {
  ModelInstance m = random_model(1, 1, 2, 1, 1);

  VertexSequence vv;
  vv.kinds = {VertexKind::V, VertexKind::V};
  auto produced = forms_of(wick_contractions(vv, m));

  std::set<std::string> expected;
  for (int r1 : {1, 2})
    for (int r2 : {1, 2}) {
      std::vector<Vertex> vertices = {{VertexKind::V, r1, "V1"},
                                      {VertexKind::V, r2, "V2"}};
      auto f = brute_force_forms(vertices, Target::heff);
      expected.insert(f.begin(), f.end());
    }
  CHECK(produced == expected);

  VertexSequence vo;
  vo.kinds = {VertexKind::V, VertexKind::O};
  auto produced_o = forms_of(wick_contractions(vo, m));
  std::set<std::string> expected_o;
  for (int r1 : {1, 2}) {
    std::vector<Vertex> vertices = {{VertexKind::V, r1, "V1"},
                                    {VertexKind::O, 2, "O"}};
    auto f = brute_force_forms(vertices, Target::oeff);
    expected_o.insert(f.begin(), f.end());
  }
  CHECK(produced_o == expected_o);
}

TEST_CASE("order-3 two-body counts match the pairing oracle") {
  ModelInstance m = random_model(1, 1, 2, 1, 1);
  m.V.erase(m.V.begin());  // two-body part only
  VertexSequence vvv;
  vvv.kinds = {VertexKind::V, VertexKind::V, VertexKind::V};
  auto produced = forms_of(wick_contractions(vvv, m));
  std::vector<Vertex> vertices = {{VertexKind::V, 2, "V1"},
                                  {VertexKind::V, 2, "V2"},
                                  {VertexKind::V, 2, "V3"}};
  CHECK(produced == brute_force_forms(vertices, Target::heff));
}

TEST_CASE("enumerate_heff: closure, determinism, fixture membership") {
  ModelInstance m = random_model(2, 2, 2, 2, 1);
  auto o2a = enumerate_heff(2, m);
  auto o2b = enumerate_heff(2, m);
  REQUIRE(o2a.size() == o2b.size());
  for (std::size_t i = 0; i < o2a.size(); ++i)
    CHECK(canonical_form(o2a[i]) == canonical_form(o2b[i]));

  std::set<std::string> forms = forms_of(o2a);
  CHECK(forms.size() == o2a.size());

  auto o3 = enumerate_heff(3, m);
  auto forms3 = forms_of(o3);
  Diagram f1 = load_diagram(std::string(MBDIAG_FIXTURES_DIR) + "/golden_heff3.json");
  CHECK(forms3.count(canonical_form(f1)) == 1);

  CHECK_THROWS(enumerate_heff(4, m));
  CHECK_THROWS(enumerate_heff(0, m));
}

TEST_CASE("enumerate_oeff: order 0 is the bare operator vertex") {
  ModelInstance m = random_model(3, 1, 2, 1, 1);
  auto ds = enumerate_oeff(0, m);
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].vertices[0].kind == VertexKind::O);
  CHECK(ds[0].external_rank() == 2);
  for (const auto& l : ds[0].lines) CHECK(l.type == LineType::free_line);
}

TEST_CASE("enumerate_oeff: order 2 holds the golden topology, all valid") {
  ModelInstance m = random_model(3, 1, 2, 1, 1);
  auto ds = enumerate_oeff(2, m);
  Diagram f2 = load_diagram(std::string(MBDIAG_FIXTURES_DIR) + "/golden_oeff2.json");
  auto forms = forms_of(ds);
  CHECK(forms.count(canonical_form(f2)) == 1);
  for (const auto& d : ds) {
    CHECK(is_linked(d));
    CHECK(d.validate().empty());
  }
  CHECK_THROWS(enumerate_oeff(3, m));
}
