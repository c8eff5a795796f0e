#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mbdiag/diagram.hpp"
#include "mbdiag/evaluate.hpp"

namespace mbdiag {

struct PartsNotDisconnected : std::runtime_error {
  explicit PartsNotDisconnected(const std::string& what)
      : std::runtime_error(what) {}
};

/// Diagrams sharing vertices, connections, directions and line types, and
/// differing only in the relative vertical ordering of disconnected sub-parts
/// at the bottom and/or top of the diagram.
struct OrderingFamily {
  Diagram base;
  /// Vertex indices of `base`, bottom-up inside each part. Bottom parts must
  /// tile the lowest positions, top parts the highest, and parts of a region
  /// must share no solid line.
  std::vector<std::vector<int>> bottom_parts;
  std::vector<std::vector<int>> top_parts;

  /// All interleavings (each part keeps its internal order).
  std::vector<Diagram> members() const;
};

struct DenominatorFactor {
  std::string name;  // e.g. "E_noe(VbVc)"
  EnergyExpr expr;
};

/// Factored denominator of the family: per part its own cumulative
/// net-outflow sums, untouched middle cuts kept as they are. The reciprocal
/// product equals the sum of the members' denominator reciprocals for every
/// energy assignment (degenerate valence energies for top regions).
std::vector<DenominatorFactor> factorize(const OrderingFamily& fam);

struct FactorizationReport {
  int trials = 0;
  double max_rel_error = 0.0;
  bool pass = false;
};

/// Numeric check of the factorization identity over random energy
/// assignments (valence-dashed labels share one value).
FactorizationReport verify_factorization(const OrderingFamily& fam, int trials,
                                         std::uint64_t seed = 1,
                                         double tol = 1e-12);

/// Random energy assignment for a diagram's line labels: holes in [-2,-1.2],
/// particles in [1.2,2], every dashed label one shared value.
std::map<std::string, double> random_line_energies(const Diagram& d,
                                                   std::uint64_t seed);

/// Sum over members of 1 / (product of cut denominators).
double member_reciprocal_sum(const std::vector<Diagram>& members,
                             const std::map<std::string, double>& energies);

/// Random two-part ordering family (3..6 vertices) for property tests.
OrderingFamily random_ordering_family(std::uint64_t seed);

/// Diagrams with one internal typing, grouped over vertical reorderings.
struct TypingClass {
  std::string typing_key;
  std::vector<int> members;  // indices into SkeletonGroup::members
  int eta1 = 1;              // occupancy sign (-1)^(l+h)
  int eta2 = 0;              // denominator sign vs the reference; 0 = n/a
  std::string ordering_notation;  // "[DVW+DWV]"
};

/// Family of diagrams with the same vertices, line connections and
/// directions, differing in internal hole/particle typing and the induced
/// vertex ordering.
struct SkeletonGroup {
  std::string skeleton_key;
  std::vector<Diagram> members;
  std::vector<TypingClass> classes;
  std::string walk_notation;  // "(VDW)" style line walks
};

/// Partition of an enumeration by skeleton identity.
std::vector<SkeletonGroup> group_skeletons(const std::vector<Diagram>& diagrams);

/// Grouped value = sum of the member values.
EffectiveOperator evaluate_group(const SkeletonGroup& g, const ModelInstance& m,
                                 const EvalOptions& opts = {});

/// Sign relating the combined denominator of a typing class to a reference
/// monomial product under a degenerate-valence assignment; 0 if the ratio is
/// not a clean sign.
int denominator_sign(const std::vector<Diagram>& class_members,
                     const std::vector<EnergyExpr>& reference,
                     const std::map<std::string, double>& energies);

/// Line-walk and ordering notation, e.g. "(VDW)[DVW+DWV]".
std::string walk_notation(const Diagram& d);
std::string ordering_notation(const Diagram& d);

}  // namespace mbdiag
