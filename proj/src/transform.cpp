#include "mbdiag/transform.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace mbdiag {

namespace {

// Remaps vertex indices of a diagram: new_of[old] = new index, with vertices
// re-sorted into the new bottom-up order. Line types are preserved and must
// stay consistent with the new ordering.
Diagram reorder(const Diagram& d, const std::vector<int>& new_of) {
  Diagram out;
  out.target = d.target;
  out.vertices.resize(d.vertex_count());
  for (int v = 0; v < d.vertex_count(); ++v) out.vertices[new_of[v]] = d.vertices[v];
  out.lines = d.lines;
  for (auto& l : out.lines) {
    if (l.from_vertex >= 0) l.from_vertex = new_of[l.from_vertex];
    if (l.to_vertex >= 0) l.to_vertex = new_of[l.to_vertex];
  }
  if (d.target == Target::heff) {
    out.effective_level = d.vertex_count() + 1;
  } else {
    out.effective_level = out.level_of(out.o_vertex());
  }
  return out;
}

void interleavings(const std::vector<std::vector<int>>& parts,
                   std::vector<std::vector<int>>& out) {
  // Sequences over part ids, with multiplicity = part size.
  std::vector<int> counts(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) counts[i] = static_cast<int>(parts[i].size());
  std::vector<int> seq;
  std::function<void()> rec = [&]() {
    bool done = true;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (counts[i] > 0) {
        done = false;
        --counts[i];
        seq.push_back(static_cast<int>(i));
        rec();
        seq.pop_back();
        ++counts[i];
      }
    }
    if (done) out.push_back(seq);
  };
  rec();
}

}  // namespace

std::vector<Diagram> OrderingFamily::members() const {
  const int n = base.vertex_count();
  int p = 0, q = 0;
  for (const auto& part : bottom_parts) p += static_cast<int>(part.size());
  for (const auto& part : top_parts) q += static_cast<int>(part.size());

  // Validations shared with factorize().
  auto check_region = [&](const std::vector<std::vector<int>>& parts, bool bottom) {
    std::set<int> region;
    for (const auto& part : parts) {
      if (part.empty()) throw PartsNotDisconnected("empty part");
      for (std::size_t i = 0; i + 1 < part.size(); ++i)
        if (part[i] >= part[i + 1])
          throw PartsNotDisconnected("part vertices must be listed bottom-up");
      for (int v : part)
        if (!region.insert(v).second)
          throw PartsNotDisconnected("parts overlap");
    }
    const int size = static_cast<int>(region.size());
    for (int v : region) {
      const bool ok = bottom ? v < size : v >= n - size;
      if (!ok)
        throw PartsNotDisconnected(bottom ? "bottom parts must tile the lowest positions"
                                          : "top parts must tile the highest positions");
    }
    // Mutual solid disconnection inside the region.
    std::map<int, int> part_of;
    for (std::size_t i = 0; i < parts.size(); ++i)
      for (int v : parts[i]) part_of[v] = static_cast<int>(i);
    for (const auto& l : base.lines) {
      if (!l.internal()) continue;
      auto a = part_of.find(l.from_vertex);
      auto b = part_of.find(l.to_vertex);
      if (a != part_of.end() && b != part_of.end() && a->second != b->second)
        throw PartsNotDisconnected("parts of one region share a solid line");
    }
  };
  if (!bottom_parts.empty()) check_region(bottom_parts, true);
  if (!top_parts.empty()) check_region(top_parts, false);
  if (p + q > n || (p == n && !top_parts.empty()) ||
      (p > 0 && q > 0 && p + q == n))
    throw PartsNotDisconnected("regions must leave a shared trunk between them");
  if (!top_parts.empty() && base.target != Target::heff)
    throw PartsNotDisconnected("top regions are supported for H_eff diagrams");

  std::vector<std::vector<int>> bottom_orders, top_orders;
  if (bottom_parts.empty()) bottom_orders.push_back({});
  else interleavings(bottom_parts, bottom_orders);
  if (top_parts.empty()) top_orders.push_back({});
  else interleavings(top_parts, top_orders);

  std::vector<Diagram> out;
  for (const auto& bo : bottom_orders)
    for (const auto& to : top_orders) {
      std::vector<int> new_of(n, -1);
      std::vector<int> cursor_b(bottom_parts.size(), 0), cursor_t(top_parts.size(), 0);
      int pos = 0;
      for (int part : bo) new_of[bottom_parts[part][cursor_b[part]++]] = pos++;
      for (int v = 0; v < n; ++v) {
        bool in_region = false;
        for (const auto& part : bottom_parts)
          for (int w : part)
            if (w == v) in_region = true;
        for (const auto& part : top_parts)
          for (int w : part)
            if (w == v) in_region = true;
        if (!in_region) new_of[v] = pos++;
      }
      for (int part : to) new_of[top_parts[part][cursor_t[part]++]] = pos++;
      out.push_back(reorder(base, new_of));
    }
  return out;
}

std::vector<DenominatorFactor> factorize(const OrderingFamily& fam) {
  (void)fam.members();  // runs the structural validation
  const Diagram& d = fam.base;
  const int n = d.vertex_count();
  int p = 0, q = 0;
  for (const auto& part : fam.bottom_parts) p += static_cast<int>(part.size());
  for (const auto& part : fam.top_parts) q += static_cast<int>(part.size());

  auto part_name = [&](const std::vector<int>& prefix) {
    std::string s = "E_noe(";
    for (int v : prefix) s += d.vertices[v].name;
    return s + ")";
  };

  std::vector<DenominatorFactor> out;
  // Bottom parts: cut-oriented cumulative sums, measured bottom-up.
  for (const auto& part : fam.bottom_parts) {
    std::vector<int> prefix;
    for (int v : part) {
      prefix.push_back(v);
      EnergyExpr e = e_noe(d, prefix, false);
      EnergyExpr neg;
      for (const auto& [k, c] : e.terms) neg.add(k, -c);
      out.push_back({"-" + part_name(prefix), neg});
    }
  }
  // Untouched middle cuts.
  for (int cut = p + 1; cut <= n - q - 1; ++cut) {
    out.push_back({"cut" + std::to_string(cut), cut_denominator(d, cut)});
  }
  // Top parts: cumulative sums measured top-down.
  for (const auto& part : fam.top_parts) {
    std::vector<int> prefix;
    for (auto it = part.rbegin(); it != part.rend(); ++it) {
      prefix.push_back(*it);
      std::vector<int> sorted = prefix;
      std::sort(sorted.begin(), sorted.end(), std::greater<int>());
      out.push_back({part_name(sorted), e_noe(d, prefix, false)});
    }
  }
  return out;
}

std::map<std::string, double> random_line_energies(const Diagram& d,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 17);
  auto uni = [&](double lo, double hi) {
    return lo + ((rng() >> 11) * 0x1.0p-53) * (hi - lo);
  };
  std::map<std::string, double> out;
  const double valence_value = 0.0;
  for (const auto& l : d.lines) {
    switch (l.type) {
      case LineType::hole: out[l.label] = uni(-2.0, -1.2); break;
      case LineType::particle: out[l.label] = uni(1.2, 2.0); break;
      case LineType::dashed: out[l.label] = valence_value; break;
      case LineType::free_line: out[l.label] = valence_value; break;
    }
  }
  return out;
}

double member_reciprocal_sum(const std::vector<Diagram>& members,
                             const std::map<std::string, double>& energies) {
  double sum = 0.0;
  for (const auto& d : members) {
    double prod = 1.0;
    for (int cut = 1; cut < d.vertex_count(); ++cut) {
      const double v = cut_denominator(d, cut).value(energies);
      if (v == 0.0) throw std::runtime_error("vanishing cut in reciprocal sum");
      prod *= v;
    }
    sum += 1.0 / prod;
  }
  return sum;
}

FactorizationReport verify_factorization(const OrderingFamily& fam, int trials,
                                         std::uint64_t seed, double tol) {
  FactorizationReport rep;
  rep.trials = trials;
  const auto members = fam.members();
  const auto factors = factorize(fam);
  for (int t = 0; t < trials; ++t) {
    const auto energies = random_line_energies(fam.base, seed + 977 * t);
    const double lhs = member_reciprocal_sum(members, energies);
    double rhs = 1.0;
    for (const auto& f : factors) rhs *= f.expr.value(energies);
    const double rhs_rec = 1.0 / rhs;
    const double err = std::abs(lhs - rhs_rec) /
                       std::max({std::abs(lhs), std::abs(rhs_rec), 1e-300});
    rep.max_rel_error = std::max(rep.max_rel_error, err);
  }
  rep.pass = rep.max_rel_error <= tol;
  return rep;
}

OrderingFamily random_ordering_family(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 3);
  auto pick = [&](int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  };
  const int s1 = pick(1, 2), s2 = pick(1, 2);
  const bool bottom = pick(0, 1) == 1;
  const int region = s1 + s2;
  const int n = region + 1;

  // Region parts wired to a single trunk vertex; a part of size two is an
  // internal chain. Ranks are whatever the port counts require; only the
  // denominators of these diagrams are ever used.
  Diagram d;
  d.target = Target::heff;
  d.effective_level = n + 1;
  std::vector<std::vector<int>> parts;
  const int trunk = bottom ? n - 1 : 0;
  int first = bottom ? 0 : 1;
  parts.push_back(s1 == 1 ? std::vector<int>{first} : std::vector<int>{first, first + 1});
  parts.push_back(s2 == 1 ? std::vector<int>{first + s1}
                          : std::vector<int>{first + s1, first + s1 + 1});

  d.vertices.resize(n);
  for (int v = 0; v < n; ++v) {
    d.vertices[v].kind = VertexKind::V;
    d.vertices[v].name = "V" + std::to_string(v + 1);
    d.vertices[v].rank = 0;  // set below from port usage
  }
  std::vector<int> bra_used(n, 0), ket_used(n, 0);
  auto add_line = [&](LineType type, int from, int to) {
    Line l;
    l.type = type;
    l.from_vertex = from;
    l.to_vertex = to;
    if (from >= 0) l.from_slot = bra_used[from]++;
    if (to >= 0) l.to_slot = ket_used[to]++;
    d.lines.push_back(l);
  };
  for (const auto& part : parts) {
    // chain inside the part
    for (std::size_t i = 0; i + 1 < part.size(); ++i) {
      if (part[i] < part[i + 1]) add_line(LineType::particle, part[i], part[i + 1]);
      else add_line(LineType::hole, part[i], part[i + 1]);
    }
    // anchor the part to the trunk, sometimes twice
    const int anchors = pick(1, 2);
    for (int a = 0; a < anchors; ++a) {
      const int v = part[rng() % part.size()];
      if (bottom) {
        if (pick(0, 1)) add_line(LineType::particle, v, trunk);
        else add_line(LineType::hole, trunk, v);
      } else {
        if (pick(0, 1)) add_line(LineType::particle, trunk, v);
        else add_line(LineType::hole, v, trunk);
      }
    }
  }
  // Close every vertex with external dashed lines so ports balance.
  for (int v = 0; v < n; ++v)
    d.vertices[v].rank = std::max({bra_used[v], ket_used[v], 1});
  for (int v = 0; v < n; ++v) {
    while (bra_used[v] < d.vertices[v].rank) add_line(LineType::dashed, v, -1);
    while (ket_used[v] < d.vertices[v].rank) add_line(LineType::dashed, -1, v);
  }
  d.assign_labels();
  d.require_valid();

  OrderingFamily fam;
  fam.base = d;
  if (bottom) fam.bottom_parts = parts;
  else fam.top_parts = parts;
  return fam;
}

std::string walk_notation(const Diagram& d) {
  // Open solid walks written as (VnVn-1..V1) from exit back to entry, loops
  // as (V1Vn..V1). External and dashed lines break walks.
  const int nl = static_cast<int>(d.lines.size());
  std::vector<int> next(nl, -1), prev(nl, -1);
  for (int i = 0; i < nl; ++i) {
    if (!d.lines[i].internal()) continue;
    const int cont = d.line_at(d.lines[i].to_vertex, true, d.lines[i].to_slot);
    if (cont >= 0 && d.lines[cont].internal()) {
      next[i] = cont;
      prev[cont] = i;
    }
  }
  std::vector<std::string> walks;
  std::vector<char> seen(nl, 0);
  // Open walks first.
  for (int i = 0; i < nl; ++i) {
    if (seen[i] || !d.lines[i].internal() || prev[i] >= 0) continue;
    std::vector<int> chain;
    for (int j = i; j >= 0; j = next[j]) {
      seen[j] = 1;
      chain.push_back(j);
    }
    std::string s = "(";
    // exit vertex first
    s += d.vertices[d.lines[chain.back()].to_vertex].name;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it)
      s += d.vertices[d.lines[*it].from_vertex].name;
    walks.push_back(s + ")");
  }
  // Loops.
  for (int i = 0; i < nl; ++i) {
    if (seen[i] || !d.lines[i].internal()) continue;
    std::vector<int> cyc;
    for (int j = i; !seen[j]; j = next[j]) {
      seen[j] = 1;
      cyc.push_back(j);
    }
    std::string s = "(";
    s += d.vertices[d.lines[cyc.front()].from_vertex].name;
    for (auto it = cyc.rbegin(); it != cyc.rend(); ++it)
      s += d.vertices[d.lines[*it].from_vertex].name;
    walks.push_back(s + ")");
  }
  std::sort(walks.begin(), walks.end());
  std::string out;
  for (const auto& w : walks) out += w;
  return out;
}

std::string ordering_notation(const Diagram& d) {
  std::string s = "[";
  for (int v = d.vertex_count() - 1; v >= 0; --v) s += d.vertices[v].name;
  return s + "]";
}

std::vector<SkeletonGroup> group_skeletons(const std::vector<Diagram>& diagrams) {
  std::map<std::string, SkeletonGroup> groups;
  for (const auto& d : diagrams) {
    const std::string key = skeleton_form(d);
    auto& g = groups[key];
    if (g.members.empty()) {
      g.skeleton_key = key;
      g.walk_notation = walk_notation(d);
    }
    g.members.push_back(d);
  }
  std::vector<SkeletonGroup> out;
  for (auto& [key, g] : groups) {
    (void)key;
    // Typing classes: order-erased canonical form with typing kept.
    std::map<std::string, int> class_of;
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      const std::string tkey = typed_skeleton_form(g.members[i]);
      auto it = class_of.find(tkey);
      if (it == class_of.end()) {
        TypingClass tc;
        tc.typing_key = tkey;
        tc.eta1 = sign_factor(g.members[i]);
        g.classes.push_back(tc);
        it = class_of.emplace(tkey, static_cast<int>(g.classes.size()) - 1).first;
      }
      g.classes[it->second].members.push_back(static_cast<int>(i));
    }
    for (auto& tc : g.classes) {
      std::string notation;
      for (std::size_t k = 0; k < tc.members.size(); ++k) {
        if (k) notation += "+";
        std::string o = ordering_notation(g.members[tc.members[k]]);
        notation += o.substr(1, o.size() - 2);
      }
      tc.ordering_notation = "[" + notation + "]";
    }
    out.push_back(std::move(g));
  }
  return out;
}

EffectiveOperator evaluate_group(const SkeletonGroup& g, const ModelInstance& m,
                                 const EvalOptions& opts) {
  return sum_diagrams(g.members, m, opts);
}

int denominator_sign(const std::vector<Diagram>& class_members,
                     const std::vector<EnergyExpr>& reference,
                     const std::map<std::string, double>& energies) {
  const double lhs = member_reciprocal_sum(class_members, energies);
  double ref = 1.0;
  for (const auto& e : reference) ref *= e.value(energies);
  if (lhs == 0.0 || ref == 0.0) return 0;
  const double ratio = 1.0 / (lhs * ref);
  if (std::abs(ratio - 1.0) < 1e-6) return 1;
  if (std::abs(ratio + 1.0) < 1e-6) return -1;
  return 0;
}

}  // namespace mbdiag
