#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mbdiag/model.hpp"

namespace mbdiag {

enum class Target { heff, oeff };
const char* to_string(Target t);

enum class VertexKind { V, O };

enum class LineType {
  particle,  // solid, upgoing; summed over non-core orbitals
  hole,      // solid, downgoing (or a same-vertex core loop); summed over core
  dashed,    // external model-space line ending at the effective vertex
  free_line  // external stub at the O vertex, indices only
};

struct Vertex {
  VertexKind kind = VertexKind::V;
  int rank = 2;
  std::string name;  // display only
};

/// One fermion line. The electron is created at the `from` port (a bra slot of
/// that vertex) and annihilated at the `to` port (a ket slot). External lines
/// leave one side unset (vertex = -1): an external bra line has only `from`,
/// an external ket line only `to`; the free end belongs to the effective
/// vertex for dashed lines and to nothing for free lines.
struct Line {
  LineType type = LineType::particle;
  int from_vertex = -1;
  int from_slot = -1;
  int to_vertex = -1;
  int to_slot = -1;
  std::string label;

  bool internal() const { return from_vertex >= 0 && to_vertex >= 0; }
  bool external_bra() const { return from_vertex >= 0 && to_vertex < 0; }
  bool external_ket() const { return to_vertex >= 0 && from_vertex < 0; }
  bool solid() const { return type == LineType::particle || type == LineType::hole; }
  /// Vertex the line is attached to, for external lines.
  int attached_vertex() const { return from_vertex >= 0 ? from_vertex : to_vertex; }
};

/// Symbolic integer combination of orbital energies, keyed by line label.
struct EnergyExpr {
  std::map<std::string, int> terms;

  EnergyExpr& operator+=(const EnergyExpr& o);
  EnergyExpr& operator-=(const EnergyExpr& o);
  void add(const std::string& label, int coeff);
  bool zero() const { return terms.empty(); }
  bool operator==(const EnergyExpr& o) const { return terms == o.terms; }

  /// "(ε_a+ε_b−ε_t−ε_n)" with positive terms first; term order inside each
  /// sign group is alphabetical.
  std::string str() const;
  /// Structural match against a rendered sum, ignoring term order.
  bool matches_string(const std::string& rendered) const;
  static EnergyExpr parse(const std::string& rendered);

  double value(const std::map<std::string, double>& energies) const;
};

struct Rational {
  long long num = 1;
  long long den = 1;
  double value() const { return double(num) / double(den); }
  std::string str() const;
};

/// A time-ordered diagram. Vertices are stored bottom to top; vertex i sits at
/// level i+1. The single effective (dashed) vertex sits at `effective_level`:
/// one level above everything for H_eff, exactly at the O vertex level for
/// O_eff. Cut i (i = 1..n-1) is the horizontal line between levels i and i+1.
struct Diagram {
  Target target = Target::heff;
  std::vector<Vertex> vertices;
  std::vector<Line> lines;
  int effective_level = 0;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int level_of(int vertex) const { return vertex + 1; }
  int o_vertex() const;  // -1 when absent

  /// Lines crossing cut i, with the sign of their denominator contribution
  /// (+1 downgoing, -1 upgoing). Free lines never cross.
  std::vector<std::pair<int, int>> crossing(int cut) const;

  /// Line index attached to (vertex, bra/ket, slot); -1 if none.
  int line_at(int vertex, bool bra_side, int slot) const;

  std::vector<int> external_bra_lines() const;  // dashed/free bra, canonical order
  std::vector<int> external_ket_lines() const;
  int external_rank() const { return static_cast<int>(external_bra_lines().size()); }

  /// Structural checks; returns violations (empty when well formed).
  std::vector<std::string> validate() const;
  void require_valid() const;

  /// Relabel all lines with fresh deterministic names (holes a,b,..;
  /// particles s,t,..; external bras m,n,..; external kets p,q,..).
  void assign_labels();

  /// Permute the ket (bra) slots of one vertex: slot s takes what used to be
  /// attached to slot perm[s]. The diagram value is invariant under this.
  void permute_ports(int vertex, bool bra_side, const std::vector<int>& perm);
};

/// Net outflow energy of a vertex subset: energy carried out of the set minus
/// energy carried in, over non-free lines. `include_effective` adds the
/// effective vertex's ends to the set.
EnergyExpr e_noe(const Diagram& d, const std::vector<int>& vertex_set,
                 bool include_effective = false);

/// Energy denominator for the cut just above vertex `i` (1-based, 1..n-1):
/// sum of downgoing crossing energies minus upgoing. Equals minus the
/// cumulative e_noe of everything below the cut (effective vertex included
/// when co-level with a vertex below).
EnergyExpr cut_denominator(const Diagram& d, int cut);

/// (-1)^(l+h): l = closed loops of solid lines, h = hole lines. Dashed and
/// free lines join neither count.
int sign_factor(const Diagram& d);
int loop_count(const Diagram& d);
int hole_count(const Diagram& d);

/// Rule-3 weight (m!)^2 / prod(class sizes!) over the 2m external lines;
/// lines are equivalent when they share start and end interaction.
Rational weight_factor(const Diagram& d);

/// 1 / prod(i_k!) over classes of equivalent internal lines (same endpoints,
/// same direction).
Rational internal_symmetry_factor(const Diagram& d);

/// Equal keys for diagrams related by port permutations, orbital relabeling
/// or horizontal rearrangement; distinct otherwise. Minimal lexicographic
/// encoding over all per-vertex port permutations.
std::string canonical_form(const Diagram& d);
std::uint64_t canonical_key(const Diagram& d);

/// Canonical form that also forgets internal hole/particle typing and the
/// vertical ordering of vertices (skeleton identity).
std::string skeleton_form(const Diagram& d);

/// Canonical form with line typing kept but vertical ordering forgotten:
/// diagrams of one ordering family collapse onto one key.
std::string typed_skeleton_form(const Diagram& d);

/// True iff no cut separates the diagram into a finished part below and an
/// untouched part above, i.e. every cut is crossed by at least one internal
/// solid line. Single-vertex diagrams are linked.
bool is_linked(const Diagram& d);

/// Wick phase and external operator order of the time-ordered vertex product.
/// `phase` carries the contraction crossing parity together with the parity
/// of normal-ordering the leftover external operators; the bra (ket) tuple
/// slots are listed in the resulting operator order. Equivalent to
/// sign_factor with bra/ket slots paired along open fermion paths.
struct ExternalAssembly {
  int phase = 1;
  std::vector<int> bra_lines;  // external creation lines, operator order
  std::vector<int> ket_lines;  // external annihilation lines, tensor order
};
ExternalAssembly wick_assembly(const Diagram& d);

}  // namespace mbdiag
