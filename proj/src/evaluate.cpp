#include "mbdiag/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "mbdiag/generate.hpp"
#include "mbdiag/oracle.hpp"
#include "mbdiag/threads.hpp"

namespace mbdiag {

EffectiveOperator& EffectiveOperator::operator+=(const EffectiveOperator& o) {
  scalar += o.scalar;
  for (const auto& [r, t] : o.tensors) {
    auto it = tensors.find(r);
    if (it == tensors.end()) tensors.emplace(r, t);
    else it->second += t;
  }
  return *this;
}

EffectiveOperator EffectiveOperator::scaled(double f) const {
  EffectiveOperator out;
  out.scalar = scalar * f;
  for (const auto& [r, t] : tensors) out.tensors.emplace(r, t.scaled(f));
  return out;
}

double EffectiveOperator::max_abs() const {
  double m = std::abs(scalar);
  for (const auto& [r, t] : tensors) {
    (void)r;
    m = std::max(m, t.max_abs());
  }
  return m;
}

namespace {

long long factorial_ll(int n) {
  long long f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Strictly increasing index tuples of the given size drawn from `ids`.
std::vector<IndexTuple> combinations(const std::vector<int>& ids, int size) {
  std::vector<IndexTuple> out;
  if (size == 0) {
    out.push_back({});
    return out;
  }
  if (size > static_cast<int>(ids.size())) return out;
  std::vector<int> pick(size);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == size) {
      IndexTuple t(size);
      for (int i = 0; i < size; ++i) t[i] = ids[pick[i]];
      out.push_back(std::move(t));
      return;
    }
    for (int i = start; i <= static_cast<int>(ids.size()) - (size - depth); ++i) {
      pick[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return out;
}

const std::vector<std::vector<int>>& small_perms(int r) {
  static const std::vector<std::vector<std::vector<int>>> cache = [] {
    std::vector<std::vector<std::vector<int>>> all(7);
    for (int k = 0; k <= 6; ++k) {
      std::vector<int> p(k);
      std::iota(p.begin(), p.end(), 0);
      do {
        all[k].push_back(p);
      } while (std::next_permutation(p.begin(), p.end()));
    }
    return all;
  }();
  return cache.at(r);
}

int perm_sign(const std::vector<int>& p) {
  int sign = 1;
  std::vector<int> q = p;
  for (std::size_t i = 1; i < q.size(); ++i)
    for (std::size_t j = i; j > 0 && q[j - 1] > q[j]; --j) {
      std::swap(q[j - 1], q[j]);
      sign = -sign;
    }
  return sign;
}

}  // namespace

DenominatorProduct denominator_product(const Diagram& d) {
  DenominatorProduct out;
  const int n = d.vertex_count();
  out.sign = (n - 1) % 2 == 0 ? 1 : -1;
  for (int i = 1; i < n; ++i) {
    std::vector<int> below(i);
    std::iota(below.begin(), below.end(), 0);
    const bool eff_below = d.effective_level <= i;
    out.factors.push_back(e_noe(d, below, eff_below));
  }
  return out;
}

DiagramValue evaluate_diagram(const Diagram& d, const ModelInstance& m,
                              const EvalOptions& opts) {
  d.require_valid();
  const int nv = d.vertex_count();

  // Tensor per vertex.
  std::vector<const OperatorTensor*> vertex_tensor(nv);
  int v_vertices = 0;
  for (int v = 0; v < nv; ++v) {
    if (d.vertices[v].kind == VertexKind::V) {
      vertex_tensor[v] = m.v_of_rank(d.vertices[v].rank);
      ++v_vertices;
      if (!vertex_tensor[v])
        throw std::runtime_error("model has no V of rank " +
                                 std::to_string(d.vertices[v].rank));
    } else {
      if (!m.O) throw std::runtime_error("model has no transition operator");
      vertex_tensor[v] = &*m.O;
      if (m.O->rank() != d.vertices[v].rank)
        throw std::runtime_error("O vertex rank does not match model");
    }
  }

  // Line bookkeeping. External tuple order and overall phase come from the
  // Wick assembly of the time-ordered product.
  std::vector<int> internal_lines, orbital_of(d.lines.size(), -1);
  for (int i = 0; i < static_cast<int>(d.lines.size()); ++i)
    if (d.lines[i].internal()) internal_lines.push_back(i);
  const ExternalAssembly assembly = wick_assembly(d);
  const auto& ext_bra = assembly.bra_lines;
  const auto& ext_ket = assembly.ket_lines;
  if (ext_bra.size() != ext_ket.size())
    throw UnassignedExternal("unbalanced external lines");
  const int rank = static_cast<int>(ext_bra.size());

  // Summation range per internal line.
  const auto core_ids = m.ids_in(Space::core);
  const auto particle_ids = m.particle_ids();
  std::vector<const std::vector<int>*> range(internal_lines.size());
  bool empty_range = false;
  for (std::size_t i = 0; i < internal_lines.size(); ++i) {
    range[i] = d.lines[internal_lines[i]].type == LineType::hole ? &core_ids
                                                                 : &particle_ids;
    if (range[i]->empty()) empty_range = true;
  }

  // Cuts: (line, direction) lists.
  std::vector<std::vector<std::pair<int, int>>> cuts;
  for (int c = 1; c < nv; ++c) cuts.push_back(d.crossing(c));

  double energy_scale = 1e-6;
  for (const auto& o : m.orbitals) energy_scale = std::max(energy_scale, std::abs(o.energy));
  const double zero_tol = opts.degeneracy_tol * energy_scale;

  DiagramValue out;
  out.sign = sign_factor(d);
  out.weight = weight_factor(d);
  out.internal_factor = internal_symmetry_factor(d);
  for (int c = 1; c < nv; ++c) out.denominators.push_back(cut_denominator(d, c));
  out.tensor = OperatorTensor(rank);

  // External equivalence classes (same attachment vertex and side).
  double ext_class_div = 1.0;
  {
    std::map<std::pair<int, int>, int> klass;
    for (int li : ext_bra) ++klass[{d.lines[li].attached_vertex(), 0}];
    for (int li : ext_ket) ++klass[{d.lines[li].attached_vertex(), 1}];
    for (const auto& [k, c] : klass) {
      (void)k;
      ext_class_div *= factorial_ll(c);
    }
  }
  const double prefactor = assembly.phase * out.internal_factor.value() /
                           ext_class_div * std::pow(m.lambda, v_vertices);

  if (empty_range) return out;  // a summation range is empty: zero value

  const auto valence_ids = m.ids_in(Space::valence);
  const auto bra_tuples = combinations(valence_ids, rank);
  const auto& perms = small_perms(rank);

  std::vector<double> energy(m.orbital_count());
  std::vector<char> is_valence(m.orbital_count());
  for (const auto& o : m.orbitals) {
    energy[o.id] = o.energy;
    is_valence[o.id] = o.space == Space::valence;
  }

  // Per-vertex slot -> line tables.
  std::vector<std::vector<int>> bra_line(nv), ket_line(nv);
  for (int v = 0; v < nv; ++v) {
    bra_line[v].resize(d.vertices[v].rank);
    ket_line[v].resize(d.vertices[v].rank);
    for (int s = 0; s < d.vertices[v].rank; ++s) {
      bra_line[v][s] = d.line_at(v, true, s);
      ket_line[v][s] = d.line_at(v, false, s);
      if (bra_line[v][s] < 0 || ket_line[v][s] < 0)
        throw UnassignedExternal("vertex port without line");
    }
  }

  long long summed = 0, skipped = 0;

  for (const auto& bra : bra_tuples) {
    for (const auto& ket : bra_tuples) {
      double acc = 0.0;
      for (const auto& ps : perms) {
        const int sgn_s = perm_sign(ps);
        for (std::size_t i = 0; i < ext_bra.size(); ++i)
          orbital_of[ext_bra[i]] = bra[ps[i]];
        for (const auto& pt : perms) {
          const int sgn_t = perm_sign(pt);
          for (std::size_t j = 0; j < ext_ket.size(); ++j)
            orbital_of[ext_ket[j]] = ket[pt[j]];

          // Odometer over internal line assignments.
          std::vector<int> idx(internal_lines.size(), 0);
          while (true) {
            for (std::size_t i = 0; i < internal_lines.size(); ++i)
              orbital_of[internal_lines[i]] = (*range[i])[idx[i]];

            bool drop = false;
            if (!opts.include_exclusion_violating) {
              for (std::size_t i = 0; i < internal_lines.size() && !drop; ++i)
                for (std::size_t j = i + 1; j < internal_lines.size(); ++j)
                  if (orbital_of[internal_lines[i]] == orbital_of[internal_lines[j]]) {
                    drop = true;
                    break;
                  }
            }

            if (!drop) {
              double denom = 1.0;
              bool skip_term = false;
              for (const auto& cut : cuts) {
                double dval = 0.0;
                bool nonvalence = false;
                for (const auto& [li, dir] : cut) {
                  dval += dir * energy[orbital_of[li]];
                  if (!is_valence[orbital_of[li]]) nonvalence = true;
                }
                if (!nonvalence) {
                  // Intermediate state inside the model space: projected out.
                  skip_term = true;
                  break;
                }
                if (std::abs(dval) < zero_tol) {
                  std::ostringstream msg;
                  msg << "degenerate denominator at cut, assignment:";
                  for (int li : internal_lines)
                    msg << " " << d.lines[li].label << "=" << orbital_of[li];
                  throw DegenerateDenominator(msg.str());
                }
                denom *= dval;
              }
              if (skip_term) {
                ++skipped;
              } else {
                double prod = 1.0;
                for (int v = 0; v < nv && prod != 0.0; ++v) {
                  const int r = d.vertices[v].rank;
                  IndexTuple vb(r), vk(r);
                  for (int s = 0; s < r; ++s) {
                    vb[s] = orbital_of[bra_line[v][s]];
                    vk[s] = orbital_of[ket_line[v][s]];
                  }
                  prod *= vertex_tensor[v]->coefficient(std::move(vb), std::move(vk));
                }
                if (prod != 0.0) acc += sgn_s * sgn_t * prod / denom;
                ++summed;
              }
            }

            std::size_t adv = 0;
            for (; adv < idx.size(); ++adv) {
              if (++idx[adv] < static_cast<int>(range[adv]->size())) break;
              idx[adv] = 0;
            }
            if (adv == idx.size()) break;
          }
        }
      }
      const double value = prefactor * acc;
      if (value != 0.0) out.tensor.set(bra, ket, value);
    }
  }

  out.terms_summed = summed;
  out.terms_skipped = skipped;
  return out;
}

EffectiveOperator sum_diagrams(const std::vector<Diagram>& diagrams,
                               const ModelInstance& m, const EvalOptions& opts) {
  std::vector<DiagramValue> values(diagrams.size());
  std::vector<std::exception_ptr> errors(diagrams.size());
  parallel_for(diagrams.size(), [&](std::size_t i) {
    try {
      values[i] = evaluate_diagram(diagrams[i], m, opts);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  EffectiveOperator out;
  for (const auto& v : values) {
    if (v.tensor.rank() == 0) {
      out.scalar += v.scalar();
    } else {
      auto it = out.tensors.find(v.tensor.rank());
      if (it == out.tensors.end()) out.tensors.emplace(v.tensor.rank(), v.tensor);
      else it->second += v.tensor;
    }
  }
  return out;
}

EffectiveOperator evaluate_order_sum(Target target, int order,
                                     const ModelInstance& m,
                                     const EvalOptions& opts) {
  std::vector<Diagram> diagrams = target == Target::heff
                                      ? enumerate_heff(order, m)
                                      : enumerate_oeff(order, m);
  EffectiveOperator out = sum_diagrams(diagrams, m, opts);
  if (target == Target::heff && order == 3) out += folded_third_order(m);
  return out;
}

}  // namespace mbdiag
