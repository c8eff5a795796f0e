#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mbdiag/evaluate.hpp"
#include "mbdiag/model.hpp"

namespace mbdiag {

using Matrix = Eigen::MatrixXd;

/// Determinant basis of a fixed-electron-number sector, as occupation bit
/// masks in ascending numeric order. The model space P is the subset with
/// full core occupation and no virtual occupation.
class FockBasis {
 public:
  FockBasis(const ModelInstance& m, int electrons);

  int size() const { return static_cast<int>(dets_.size()); }
  std::uint64_t det(int i) const { return dets_[i]; }
  int index_of(std::uint64_t det) const;
  int electrons() const { return electrons_; }
  int orbitals() const { return n_orbitals_; }

  bool in_model_space(int i) const { return is_p_[i] != 0; }
  const std::vector<int>& model_space() const { return p_indices_; }
  double det_energy(int i) const { return det_energy_[i]; }

  /// Sector holding the model space itself.
  static FockBasis model_sector(const ModelInstance& m);

 private:
  int n_orbitals_ = 0;
  int electrons_ = 0;
  std::vector<std::uint64_t> dets_;
  std::vector<char> is_p_;
  std::vector<int> p_indices_;
  std::vector<double> det_energy_;
};

/// Dense matrix of the normalized second-quantized operator on the basis,
/// with fermionic sign bookkeeping.
Matrix matrix_of(const OperatorTensor& t, const FockBasis& b,
                 const ModelInstance& m);

/// Sum of per-rank matrices plus the scalar part.
Matrix matrix_of(const EffectiveOperator& op, const FockBasis& b,
                 const ModelInstance& m);

/// H0 (diagonal), full V (lambda-scaled), and projector helpers.
Matrix h0_matrix(const ModelInstance& m, const FockBasis& b);
Matrix v_matrix(const ModelInstance& m, const FockBasis& b);  // lambda applied
Matrix resolvent(const ModelInstance& m, const FockBasis& b, int power = 1);

/// Model-space matrices of the Bloch recursion for a complete degenerate
/// model space: order 1 = PVP, order 2 = PVRVP, order 3 = PVRVRVP -
/// PVR^2VP * PVP.
Matrix bloch_heff(int order, const ModelInstance& m);

/// Per-order model-space matrices (0..max_order) extracted from the exact
/// nonhermitian H_eff(lambda) by polynomial fitting. Lambdas default to
/// +-0.02..0.08 plus a tighter inner set.
std::vector<Matrix> lambda_extract(const ModelInstance& m, int max_order,
                                   std::vector<double> lambdas = {});

/// Max |a - b| / scale over the model space, scale = max(entries, 1e-6).
double compare_tensors(const EffectiveOperator& a, const Matrix& b,
                       const ModelInstance& m);

/// Least-squares conversion of a model-space matrix into valence tensors of
/// rank 0..max_rank; throws if the fit does not reproduce the matrix.
EffectiveOperator tensors_from_model_matrix(const Matrix& mat,
                                            const ModelInstance& m,
                                            int max_rank);

/// Folded (renormalization) third-order term -(P V R^2 V P)(P V P) as a
/// valence operator.
EffectiveOperator folded_third_order(const ModelInstance& m);

}  // namespace mbdiag
