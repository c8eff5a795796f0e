#include <doctest.h>

#include <cmath>

#include "mbdiag/model.hpp"

using namespace mbdiag;

TEST_CASE("antisymmetrize: rank 1 passes through") {
  RawKernel raw;
  raw[{{0}, {1}}] = 0.25;
  raw[{{1}, {0}}] = -0.5;
  OperatorTensor t = antisymmetrize(raw, 1);
  CHECK(t.coefficient({0}, {1}) == 0.25);
  CHECK(t.coefficient({1}, {0}) == -0.5);
}

TEST_CASE("antisymmetrize: ket-symmetric kernel cancels") {
  RawKernel raw;
  for (int b1 : {0, 1})
    for (int b2 : {0, 1})
      if (b1 != b2) {
        raw[{{0, 1}, {b1, b2}}] = 0.7;  // symmetric under ket exchange
      }
  OperatorTensor t = antisymmetrize(raw, 2);
  CHECK(t.empty());
}

TEST_CASE("antisymmetrize: lone kernel entry spreads by the sign rule") {
  RawKernel raw;
  raw[{{0, 1}, {0, 1}}] = 1.0;
  OperatorTensor t = antisymmetrize(raw, 2);
  CHECK(t.coefficient({0, 1}, {0, 1}) == 1.0);
  CHECK(t.coefficient({0, 1}, {1, 0}) == -1.0);
  CHECK(t.coefficient({1, 0}, {0, 1}) == -1.0);
  CHECK(t.coefficient({1, 0}, {1, 0}) == 1.0);
}

TEST_CASE("antisymmetrize: direct-minus-exchange for pair-symmetric kernels") {
  // raw(a1 a2, b1 b2) = f(a1,b1) f(a2,b2), symmetric under simultaneous
  // particle exchange.
  auto f = [](int a, int b) { return 0.3 + 0.1 * a + 0.7 * b + 0.05 * a * b; };
  RawKernel raw;
  const int n = 3;
  for (int a1 = 0; a1 < n; ++a1)
    for (int a2 = 0; a2 < n; ++a2)
      for (int b1 = 0; b1 < n; ++b1)
        for (int b2 = 0; b2 < n; ++b2)
          raw[{{a1, a2}, {b1, b2}}] = f(a1, b1) * f(a2, b2);
  OperatorTensor t = antisymmetrize(raw, 2);
  for (int a1 = 0; a1 < n; ++a1)
    for (int a2 = 0; a2 < n; ++a2)
      for (int b1 = 0; b1 < n; ++b1)
        for (int b2 = 0; b2 < n; ++b2) {
          if (a1 == a2 || b1 == b2) continue;
          const double expect = f(a1, b1) * f(a2, b2) - f(a1, b2) * f(a2, b1);
          CHECK(t.coefficient({a1, a2}, {b1, b2}) ==
                doctest::Approx(expect).epsilon(1e-13));
        }
}

TEST_CASE("coefficient: permutation signs and Pauli zeros") {
  OperatorTensor t(2);
  t.set({1, 2}, {1, 2}, 0.5);
  CHECK(t.coefficient({2, 1}, {1, 2}) == -0.5);
  CHECK(t.coefficient({2, 1}, {2, 1}) == 0.5);
  CHECK(t.coefficient({1, 1}, {1, 2}) == 0.0);
  CHECK_THROWS(t.coefficient({1}, {1, 2}));
}

TEST_CASE("coefficient: exhaustive antisymmetry on a 4-orbital tensor") {
  ModelInstance m = random_model(3, 1, 1, 2, 1);
  const OperatorTensor& t = *m.v_of_rank(2);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        for (int d = 0; d < 4; ++d) {
          CHECK(t.coefficient({a, b}, {c, d}) == -t.coefficient({b, a}, {c, d}));
          CHECK(t.coefficient({a, b}, {c, d}) == -t.coefficient({a, b}, {d, c}));
        }
}

TEST_CASE("random_model: deterministic, seed-sensitive, valid") {
  ModelInstance a = random_model(1, 2, 2, 3, 2);
  ModelInstance b = random_model(1, 2, 2, 3, 2);
  ModelInstance c = random_model(2, 2, 2, 3, 2);
  CHECK(model_to_json_text(a) == model_to_json_text(b));
  CHECK(model_to_json_text(a) != model_to_json_text(c));
  CHECK(validate_model(a).empty());
  ModelInstance big = random_model(7, 2, 4, 4, 2);
  CHECK(validate_model(big).empty());
}

TEST_CASE("random_model: denominator building blocks stay away from zero") {
  ModelInstance m = random_model(5, 3, 3, 4, 2);
  for (const auto& o : m.orbitals) {
    if (o.space == Space::core) CHECK(o.energy <= -1.2);
    if (o.space == Space::virt) CHECK(o.energy >= 1.2);
    if (o.space == Space::valence) CHECK(o.energy == 0.0);
  }
}

TEST_CASE("validate_model: violations are reported as data") {
  ModelInstance m = random_model(1, 1, 2, 1, 1);
  CHECK(validate_model(m).empty());

  ModelInstance bad = m;
  bad.orbitals[1].energy = 0.25;  // valence orbital off the degenerate shelf
  auto v = validate_model(bad);
  REQUIRE(!v.empty());
  CHECK(v.front().find("non-degenerate") != std::string::npos);

  ModelInstance bad2 = m;
  OperatorTensor t(1);
  t.set({99}, {0}, 1.0);
  bad2.V[0] = t;
  CHECK(!validate_model(bad2).empty());

  ModelInstance bad3 = m;
  bad3.valence_electrons = 5;
  CHECK(!validate_model(bad3).empty());

  ModelInstance bad4 = m;
  bad4.V.push_back(m.V[0]);  // duplicate rank
  CHECK(!validate_model(bad4).empty());
}

TEST_CASE("model json: round trip and strict fields") {
  ModelInstance m = random_model(4, 1, 2, 2, 1);
  const std::string text = model_to_json_text(m);
  ModelInstance back = model_from_json_text(text);
  CHECK(model_to_json_text(back) == text);

  CHECK_THROWS(model_from_json_text(R"({"orbitals": [], "valence_electrons": 0,
      "V": [], "surprise": 1})"));

  // Raw kernels are antisymmetrized on load.
  const std::string raw = R"({
    "orbitals": [
      {"id": 0, "energy": -1.5, "space": "core"},
      {"id": 1, "energy": 0.0, "space": "valence"},
      {"id": 2, "energy": 0.0, "space": "valence"},
      {"id": 3, "energy": 1.5, "space": "virtual"}
    ],
    "valence_electrons": 1,
    "V": [{"rank": 2, "entries": [
      {"bra": [0, 1], "ket": [0, 1], "value": 1.0},
      {"bra": [0, 1], "ket": [1, 0], "value": 0.25}
    ]}]
  })";
  ModelInstance loaded = model_from_json_text(raw);
  CHECK(loaded.V[0].coefficient({0, 1}, {0, 1}) == 0.75);
  CHECK(loaded.V[0].coefficient({0, 1}, {1, 0}) == -0.75);
}
