#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mbdiag/diagram.hpp"
#include "mbdiag/model.hpp"

namespace mbdiag {

struct DegenerateDenominator : std::runtime_error {
  explicit DegenerateDenominator(const std::string& what)
      : std::runtime_error(what) {}
};

struct UnassignedExternal : std::runtime_error {
  explicit UnassignedExternal(const std::string& what)
      : std::runtime_error(what) {}
};

/// Valence-space operator split by body rank (an order sum generally mixes a
/// scalar part with 1-, 2-, ... body pieces).
struct EffectiveOperator {
  double scalar = 0.0;
  std::map<int, OperatorTensor> tensors;

  EffectiveOperator& operator+=(const EffectiveOperator& o);
  EffectiveOperator scaled(double f) const;
  double max_abs() const;
};

struct EvalOptions {
  /// Rule 7: keep terms in which independent line summations assign the same
  /// orbital to two internal lines. Switching this off is a negative control.
  bool include_exclusion_violating = true;
  /// |denominator| below tol * (energy scale) on a non-model-space cut aborts.
  double degeneracy_tol = 1e-12;
};

struct DiagramValue {
  OperatorTensor tensor;  // rank 0 holds a pure scalar
  int sign = 1;
  Rational weight;            // rule-3 external factor
  Rational internal_factor;   // equivalent internal lines
  std::vector<EnergyExpr> denominators;  // cut factors, bottom to top
  long long terms_summed = 0;
  long long terms_skipped = 0;  // model-space intermediates projected out

  double scalar() const { return tensor.coefficient({}, {}); }
};

/// Rules 1-7: sign * weight * sum over internal hole lines (core) and
/// particle lines (all non-core), independently, of the antisymmetrized
/// matrix-element product over the cut denominators, projected onto an
/// antisymmetric valence tensor. Index assignments whose intermediate state
/// stays inside the model space are projected out.
DiagramValue evaluate_diagram(const Diagram& d, const ModelInstance& m,
                              const EvalOptions& opts = {});

struct DenominatorProduct {
  int sign = 1;  // (-1)^(n-1)
  std::vector<EnergyExpr> factors;  // cumulative net-outflow sums
};

/// D = (-1)^(n-1) * E_noe(V1) * E_noe(V1 V2) * ... * E_noe(V1..V_{n-1});
/// numerically identical to the product of cut denominators.
DenominatorProduct denominator_product(const Diagram& d);

/// Sum of evaluate_diagram over the enumerated diagrams of one order; H_eff
/// order 3 also adds the folded composite.
EffectiveOperator evaluate_order_sum(Target target, int order,
                                     const ModelInstance& m,
                                     const EvalOptions& opts = {});

/// Same, with the diagram list supplied by the caller (no folded term).
EffectiveOperator sum_diagrams(const std::vector<Diagram>& diagrams,
                               const ModelInstance& m,
                               const EvalOptions& opts = {});

}  // namespace mbdiag
