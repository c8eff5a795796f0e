#pragma once

#include <vector>

#include "mbdiag/diagram.hpp"
#include "mbdiag/model.hpp"

namespace mbdiag {

/// Bottom-to-top vertex kinds of one time ordering, e.g. (V,V,V) for H_eff
/// order 3 or (V,O,V) for an O_eff term with one V below and one above O.
struct VertexSequence {
  std::vector<VertexKind> kinds;

  int order_in_v() const;
  bool has_o() const;
};

/// All inequivalent line assignments of the sequence: every port either
/// contracts with a port of another vertex (or the same vertex as a core
/// loop) or becomes an external valence-dashed/free line. Duplicates by
/// canonical key are removed and diagrams with an empty cut are dropped.
/// Vertex ranks run over the ranks present in the model's V (and O's rank).
std::vector<Diagram> wick_contractions(const VertexSequence& seq,
                                       const ModelInstance& model);

/// Linked H_eff diagrams of the given order in V (1..3 supported).
std::vector<Diagram> enumerate_heff(int order, const ModelInstance& model);

/// Linked O_eff diagrams with `order_in_v` V vertices (0..2 supported); the
/// effective vertex shares the O vertex level and O's uncontracted ports stay
/// as free lines.
std::vector<Diagram> enumerate_oeff(int order_in_v, const ModelInstance& model);

/// Number of external hole/particle classifications of a single n-body vertex
/// over a closed-shell vacuum: (n+1)^2.
int external_classification_count(int rank);

}  // namespace mbdiag
