#include "mbdiag/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "mbdiag/threads.hpp"

namespace mbdiag {

namespace {

int popcount_below(std::uint64_t det, int orbital) {
  const std::uint64_t mask = (orbital == 0) ? 0ULL : ((1ULL << orbital) - 1);
  return __builtin_popcountll(det & mask);
}

}  // namespace

FockBasis::FockBasis(const ModelInstance& m, int electrons)
    : n_orbitals_(m.orbital_count()), electrons_(electrons) {
  if (n_orbitals_ > 24)
    throw std::runtime_error("FockBasis: orbital count beyond desk scale");
  std::uint64_t core_mask = 0, virt_mask = 0;
  for (const auto& o : m.orbitals) {
    if (o.space == Space::core) core_mask |= 1ULL << o.id;
    if (o.space == Space::virt) virt_mask |= 1ULL << o.id;
  }
  for (std::uint64_t det = 0; det < (1ULL << n_orbitals_); ++det) {
    if (__builtin_popcountll(det) != electrons) continue;
    dets_.push_back(det);
  }
  if (dets_.size() > 5000)
    throw std::runtime_error("FockBasis: sector dimension above the 5000 cap");
  is_p_.resize(dets_.size());
  det_energy_.resize(dets_.size());
  for (std::size_t i = 0; i < dets_.size(); ++i) {
    const std::uint64_t det = dets_[i];
    is_p_[i] = ((det & core_mask) == core_mask) && ((det & virt_mask) == 0);
    if (is_p_[i]) p_indices_.push_back(static_cast<int>(i));
    double e = 0.0;
    for (int o = 0; o < n_orbitals_; ++o)
      if (det & (1ULL << o)) e += m.orbitals[o].energy;
    det_energy_[i] = e;
  }
}

int FockBasis::index_of(std::uint64_t det) const {
  auto it = std::lower_bound(dets_.begin(), dets_.end(), det);
  if (it == dets_.end() || *it != det) return -1;
  return static_cast<int>(it - dets_.begin());
}

FockBasis FockBasis::model_sector(const ModelInstance& m) {
  int core = m.core_count();
  return FockBasis(m, core + m.valence_electrons);
}

Matrix matrix_of(const OperatorTensor& t, const FockBasis& b,
                 const ModelInstance& m) {
  (void)m;
  const int dim = b.size();
  const int rank = t.rank();
  Matrix out = Matrix::Zero(dim, dim);
  if (rank == 0) {
    return t.coefficient({}, {}) * Matrix::Identity(dim, dim);
  }
  // Column-parallel over source determinants; threads write disjoint columns.
  parallel_for(dim, [&](std::size_t j) {
    const std::uint64_t det = b.det(static_cast<int>(j));
    // annihilate a strictly increasing ket set B (applied low orbital first)
    std::vector<int> occ;
    for (int o = 0; o < b.orbitals(); ++o)
      if (det & (1ULL << o)) occ.push_back(o);
    std::vector<int> pick(rank);
    std::function<void(int, int)> rec = [&](int start, int depth) {
      if (depth == rank) {
        std::uint64_t mid = det;
        int phase = 1;
        IndexTuple ket(rank);
        for (int i = 0; i < rank; ++i) {
          const int o = occ[pick[i]];
          ket[i] = o;
          if (popcount_below(mid, o) % 2) phase = -phase;
          mid &= ~(1ULL << o);
        }
        // create a strictly increasing bra set A (applied high orbital first)
        std::vector<int> free_orb;
        for (int o = 0; o < b.orbitals(); ++o)
          if (!(mid & (1ULL << o))) free_orb.push_back(o);
        std::vector<int> cpick(rank);
        std::function<void(int, int)> crec = [&](int cstart, int cdepth) {
          if (cdepth == rank) {
            IndexTuple bra(rank);
            std::uint64_t fin = mid;
            int cphase = phase;
            for (int i = rank - 1; i >= 0; --i) {
              const int o = free_orb[cpick[i]];
              bra[i] = o;
              if (popcount_below(fin, o) % 2) cphase = -cphase;
              fin |= 1ULL << o;
            }
            const double v = t.coefficient(bra, ket);
            if (v != 0.0) {
              const int i = b.index_of(fin);
              if (i >= 0) out(i, static_cast<int>(j)) += cphase * v;
            }
            return;
          }
          for (int i = cstart; i <= static_cast<int>(free_orb.size()) - (rank - cdepth); ++i) {
            cpick[cdepth] = i;
            crec(i + 1, cdepth + 1);
          }
        };
        crec(0, 0);
        return;
      }
      for (int i = start; i <= static_cast<int>(occ.size()) - (rank - depth); ++i) {
        pick[depth] = i;
        rec(i + 1, depth + 1);
      }
    };
    if (static_cast<int>(occ.size()) >= rank) rec(0, 0);
  });
  return out;
}

Matrix matrix_of(const EffectiveOperator& op, const FockBasis& b,
                 const ModelInstance& m) {
  Matrix out = op.scalar * Matrix::Identity(b.size(), b.size());
  for (const auto& [r, t] : op.tensors) {
    (void)r;
    out += matrix_of(t, b, m);
  }
  return out;
}

Matrix h0_matrix(const ModelInstance& m, const FockBasis& b) {
  (void)m;
  Matrix out = Matrix::Zero(b.size(), b.size());
  for (int i = 0; i < b.size(); ++i) out(i, i) = b.det_energy(i);
  return out;
}

Matrix v_matrix(const ModelInstance& m, const FockBasis& b) {
  Matrix out = Matrix::Zero(b.size(), b.size());
  for (const auto& t : m.V) out += matrix_of(t, b, m);
  return out * m.lambda;
}

Matrix resolvent(const ModelInstance& m, const FockBasis& b, int power) {
  const double e0 = m.e0();
  Matrix out = Matrix::Zero(b.size(), b.size());
  for (int i = 0; i < b.size(); ++i) {
    if (b.in_model_space(i)) continue;
    const double de = e0 - b.det_energy(i);
    if (std::abs(de) < 1e-9)
      throw std::runtime_error("singular resolvent: Q determinant degenerate with the model space");
    out(i, i) = std::pow(1.0 / de, power);
  }
  return out;
}

namespace {

Matrix p_block(const Matrix& full, const FockBasis& b) {
  const auto& p = b.model_space();
  Matrix out(p.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) out(i, j) = full(p[i], p[j]);
  return out;
}

}  // namespace

Matrix bloch_heff(int order, const ModelInstance& m) {
  if (order < 1 || order > 3)
    throw std::runtime_error("bloch_heff supports orders 1..3");
  const FockBasis b = FockBasis::model_sector(m);
  const Matrix v = v_matrix(m, b);
  if (order == 1) return p_block(v, b);
  const Matrix r = resolvent(m, b, 1);
  if (order == 2) return p_block(v * r * v, b);
  const Matrix r2 = resolvent(m, b, 2);
  return p_block(v * r * v * r * v, b) - p_block(v * r2 * v, b) * p_block(v, b);
}

std::vector<Matrix> lambda_extract(const ModelInstance& m, int max_order,
                                   std::vector<double> lambdas) {
  using Real = long double;
  using MatrixL = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
  using MatrixCL = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
  if (lambdas.empty()) {
    // Small radius keeps the series remainder below the fit order; extended
    // precision keeps the small-lambda division off the noise floor.
    for (int k = 1; k <= 8; ++k) {
      lambdas.push_back(0.00125 * k);
      lambdas.push_back(-0.00125 * k);
    }
  }
  const FockBasis b = FockBasis::model_sector(m);
  const int dim = b.size();
  const int dp = static_cast<int>(b.model_space().size());
  const MatrixL h0 = h0_matrix(m, b).cast<Real>();
  const MatrixL v = (v_matrix(m, b) / m.lambda).cast<Real>();  // unit perturbation
  const auto& p = b.model_space();

  const int npts = static_cast<int>(lambdas.size());
  std::vector<MatrixL> samples(npts);
  std::vector<std::exception_ptr> errors(npts);
  parallel_for(npts, [&](std::size_t si) {
    try {
      const Real lam = static_cast<Real>(lambdas[si]);
      const MatrixL h = h0 + lam * v;
      Eigen::EigenSolver<MatrixL> es(h);
      if (es.info() != Eigen::Success)
        throw std::runtime_error("lambda_extract: eigensolver failed");
      const auto& evec = es.eigenvectors();
      const auto& eval = es.eigenvalues();
      // Rank states by model-space overlap.
      std::vector<std::pair<Real, int>> overlap(dim);
      for (int k = 0; k < dim; ++k) {
        Real num = 0;
        for (int pi : p) num += std::norm(evec(pi, k));
        overlap[k] = {num / evec.col(k).squaredNorm(), k};
      }
      std::sort(overlap.begin(), overlap.end(),
                [](const auto& a, const auto& c) { return a.first > c.first; });
      if (dp < dim && overlap[dp - 1].first - overlap[dp].first < Real(0.2)) {
        throw std::runtime_error(
            "lambda_extract: overlap ambiguity, two eigenvectors share "
            "comparable model-space projection");
      }
      // H_eff = U diag(E) U^{-1} over the P projections of the selected
      // cluster (intermediate normalization); conjugate pairs keep it real.
      MatrixCL psel(dp, dp);
      Eigen::Vector<std::complex<Real>, Eigen::Dynamic> esel(dp);
      for (int k = 0; k < dp; ++k) {
        for (int i = 0; i < dp; ++i) psel(i, k) = evec(p[i], overlap[k].second);
        esel(k) = eval(overlap[k].second);
      }
      MatrixCL heff_c = psel * esel.asDiagonal() * psel.inverse();
      Real worst = 0;
      for (int i = 0; i < dp; ++i)
        for (int j = 0; j < dp; ++j)
          worst = std::max(worst, std::abs(heff_c(i, j).imag()));
      if (worst > Real(1e-8))
        throw std::runtime_error("lambda_extract: effective matrix not real");
      samples[si] = heff_c.real();
    } catch (...) {
      errors[si] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  // Componentwise polynomial interpolation in the scaled variable.
  Real lmax = 0;
  for (double l : lambdas) lmax = std::max(lmax, static_cast<Real>(std::abs(l)));
  const int degree = npts - 1;
  MatrixL vand(npts, degree + 1);
  for (int i = 0; i < npts; ++i) {
    Real pw = 1;
    const Real u = static_cast<Real>(lambdas[i]) / lmax;
    for (int k = 0; k <= degree; ++k) {
      vand(i, k) = pw;
      pw *= u;
    }
  }
  const auto qr = vand.colPivHouseholderQr();
  std::vector<Matrix> out(max_order + 1, Matrix::Zero(dp, dp));
  Eigen::Vector<Real, Eigen::Dynamic> rhs(npts);
  for (int i = 0; i < dp; ++i)
    for (int j = 0; j < dp; ++j) {
      for (int s = 0; s < npts; ++s) rhs(s) = samples[s](i, j);
      Eigen::Vector<Real, Eigen::Dynamic> coef = qr.solve(rhs);
      Real scale = 1;
      for (int k = 0; k <= max_order; ++k) {
        out[k](i, j) = static_cast<double>(coef(k) / scale);
        scale *= lmax;
      }
    }
  // Report orders at the model's lambda scale.
  double pw = 1.0;
  for (int k = 0; k <= max_order; ++k) {
    out[k] *= pw;
    pw *= m.lambda;
  }
  return out;
}

double compare_tensors(const EffectiveOperator& a, const Matrix& b,
                       const ModelInstance& m) {
  const FockBasis sector = FockBasis::model_sector(m);
  const auto& p = sector.model_space();
  if (b.rows() != static_cast<int>(p.size()) ||
      b.cols() != static_cast<int>(p.size()))
    throw std::runtime_error("compare_tensors: model-space shape mismatch");
  const Matrix full = matrix_of(a, sector, m);
  double scale = 1e-6, diff = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) {
      scale = std::max({scale, std::abs(full(p[i], p[j])), std::abs(b(i, j))});
      diff = std::max(diff, std::abs(full(p[i], p[j]) - b(i, j)));
    }
  return diff / scale;
}

EffectiveOperator tensors_from_model_matrix(const Matrix& mat,
                                            const ModelInstance& m,
                                            int max_rank) {
  const FockBasis sector = FockBasis::model_sector(m);
  const auto& p = sector.model_space();
  const int dp = static_cast<int>(p.size());
  if (mat.rows() != dp || mat.cols() != dp)
    throw std::runtime_error("tensors_from_model_matrix: shape mismatch");
  const auto valence = m.ids_in(Space::valence);

  struct BasisOp {
    int rank;
    IndexTuple bra, ket;
  };
  std::vector<BasisOp> ops;
  for (int r = 0; r <= max_rank && r <= 4; ++r) {
    std::vector<IndexTuple> tuples;
    std::vector<int> pick;
    std::function<void(std::size_t)> rec = [&](std::size_t start) {
      if (static_cast<int>(pick.size()) == r) {
        IndexTuple t(pick.begin(), pick.end());
        tuples.push_back(t);
        return;
      }
      for (std::size_t i = start; i < valence.size(); ++i) {
        pick.push_back(valence[i]);
        rec(i + 1);
        pick.pop_back();
      }
    };
    rec(0);
    for (const auto& bra : tuples)
      for (const auto& ket : tuples) ops.push_back({r, bra, ket});
  }

  Matrix a(dp * dp, static_cast<int>(ops.size()));
  for (std::size_t c = 0; c < ops.size(); ++c) {
    Matrix mc;
    if (ops[c].rank == 0) {
      mc = Matrix::Identity(dp, dp);
    } else {
      OperatorTensor unit(ops[c].rank);
      unit.set(ops[c].bra, ops[c].ket, 1.0);
      const Matrix full = matrix_of(unit, sector, m);
      mc.resize(dp, dp);
      for (int i = 0; i < dp; ++i)
        for (int j = 0; j < dp; ++j) mc(i, j) = full(p[i], p[j]);
    }
    for (int i = 0; i < dp; ++i)
      for (int j = 0; j < dp; ++j) a(i * dp + j, static_cast<int>(c)) = mc(i, j);
  }
  Eigen::VectorXd rhs(dp * dp);
  for (int i = 0; i < dp; ++i)
    for (int j = 0; j < dp; ++j) rhs(i * dp + j) = mat(i, j);
  Eigen::VectorXd x = a.colPivHouseholderQr().solve(rhs);
  const double resid = (a * x - rhs).norm();
  const double scale = std::max(1e-6, rhs.norm());
  if (resid > 1e-9 * scale)
    throw std::runtime_error("tensors_from_model_matrix: matrix is not a valence operator on this model space");

  EffectiveOperator out;
  for (std::size_t c = 0; c < ops.size(); ++c) {
    const double v = x(static_cast<int>(c));
    if (v == 0.0) continue;
    if (ops[c].rank == 0) {
      out.scalar += v;
    } else {
      auto it = out.tensors.find(ops[c].rank);
      if (it == out.tensors.end())
        it = out.tensors.emplace(ops[c].rank, OperatorTensor(ops[c].rank)).first;
      it->second.add(ops[c].bra, ops[c].ket, v);
    }
  }
  return out;
}

EffectiveOperator folded_third_order(const ModelInstance& m) {
  const FockBasis b = FockBasis::model_sector(m);
  const Matrix v = v_matrix(m, b);
  const Matrix r2 = resolvent(m, b, 2);
  const Matrix folded = -p_block(v * r2 * v, b) * p_block(v, b);
  const int max_rank = std::min(m.valence_electrons, 4);
  return tensors_from_model_matrix(folded, m, max_rank);
}

}  // namespace mbdiag
