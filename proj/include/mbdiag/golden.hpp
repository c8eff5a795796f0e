#pragma once

#include <string>
#include <vector>

#include "mbdiag/diagram.hpp"
#include "mbdiag/evaluate.hpp"

namespace mbdiag {

struct GoldenResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Runs the shipped golden fixtures: the third-order two-body H_eff diagram,
/// the second-order O_eff diagram, the six-vertex factorization example and
/// the two-line skeleton group. Checks denominator strings, signs, weights,
/// eta tables and values against direct nested-loop evaluation.
std::vector<GoldenResult> run_golden(const std::string& fixtures_dir);

/// Direct nested-loop evaluation of the pinned expression for the
/// third-order H_eff fixture (independent of evaluate_diagram).
OperatorTensor heff3_reference_value(const ModelInstance& m);

/// Same for the second-order O_eff fixture.
OperatorTensor oeff2_reference_value(const ModelInstance& m);

}  // namespace mbdiag
