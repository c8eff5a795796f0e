#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbdiag {

enum class Space { core, valence, virt };

const char* to_string(Space s);
Space space_from_string(const std::string& s);

struct Orbital {
  int id = 0;
  double energy = 0.0;
  Space space = Space::core;
};

using IndexTuple = std::vector<int>;

/// Sign of the permutation that sorts `t` ascending; 0 if `t` has a repeated
/// entry.
int sort_sign(IndexTuple& t);

/// Antisymmetrized coefficient table of an n-body second-quantized operator
///   T_n = 1/(n!)^2 sum t_{a1..an,b1..bn} a+_{a1}..a+_{an} a_{bn}..a_{b1}.
/// Entries are stored on strictly increasing bra/ket tuples; all other index
/// orders are reached through the permutation sign, so antisymmetry is
/// structural.
class OperatorTensor {
 public:
  OperatorTensor() = default;
  explicit OperatorTensor(int rank) : rank_(rank) {}

  int rank() const { return rank_; }

  /// Value for arbitrary tuple order. Repeated indices inside a tuple give 0.
  double coefficient(IndexTuple bra, IndexTuple ket) const;

  /// Store on canonical (strictly increasing) tuples.
  void set(const IndexTuple& bra, const IndexTuple& ket, double value);

  /// Accumulate an arbitrarily ordered entry into canonical storage.
  void add(IndexTuple bra, IndexTuple ket, double value);

  const std::map<std::pair<IndexTuple, IndexTuple>, double>& entries() const {
    return data_;
  }

  OperatorTensor scaled(double factor) const;
  OperatorTensor& operator+=(const OperatorTensor& other);

  double max_abs() const;
  bool empty() const { return data_.empty(); }

 private:
  int rank_ = 0;
  std::map<std::pair<IndexTuple, IndexTuple>, double> data_;
};

/// Plain (not antisymmetrized) kernel: exact tuple -> value.
using RawKernel = std::map<std::pair<IndexTuple, IndexTuple>, double>;

/// Builds the antisymmetrized tensor from a plain kernel. For every strictly
/// increasing bra/ket pair the stored value is sum_perm sgn(perm) *
/// raw(bra, perm(ket)); the rest of the tensor follows from the sign rule.
/// For a kernel symmetric under simultaneous particle exchange this is the
/// usual direct-minus-exchange matrix element.
OperatorTensor antisymmetrize(const RawKernel& raw, int rank);

struct ModelInstance {
  std::vector<Orbital> orbitals;
  int valence_electrons = 0;
  std::vector<OperatorTensor> V;  // 1- and/or 2-body parts
  std::optional<OperatorTensor> O;
  double lambda = 1.0;

  int orbital_count() const { return static_cast<int>(orbitals.size()); }
  const Orbital& orbital(int id) const;
  double energy(int id) const { return orbital(id).energy; }
  Space space(int id) const { return orbital(id).space; }

  std::vector<int> ids_in(Space s) const;
  /// "particle" summation range: every non-core orbital.
  std::vector<int> particle_ids() const;
  int core_count() const;
  int valence_count() const;

  /// Unperturbed energy of every model-space determinant.
  double e0() const;

  const OperatorTensor* v_of_rank(int rank) const;
  std::vector<int> v_ranks() const;
};

/// Deterministic test-model generator. Core energies lie in [-2,-1.2],
/// virtual in [1.2,2], valence orbitals are exactly degenerate at 0, so any
/// denominator involving at least one core or virtual line is bounded away
/// from zero by more than `min_gap`.
ModelInstance random_model(std::uint64_t seed, int n_core, int n_valence,
                           int n_virtual, int valence_electrons,
                           double min_gap = 0.1);

/// Empty list iff all type invariants hold. Violations are data, not errors.
std::vector<std::string> validate_model(const ModelInstance& m);

/// Throws std::runtime_error listing the violations unless the model is valid.
void require_valid(const ModelInstance& m);

// Model file I/O (JSON). Unknown fields are rejected.
ModelInstance load_model(const std::string& path);
ModelInstance model_from_json_text(const std::string& text);
std::string model_to_json_text(const ModelInstance& m);
void save_model(const ModelInstance& m, const std::string& path);

}  // namespace mbdiag
