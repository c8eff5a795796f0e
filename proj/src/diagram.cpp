#include "mbdiag/diagram.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace mbdiag {

const char* to_string(Target t) { return t == Target::heff ? "heff" : "oeff"; }

EnergyExpr& EnergyExpr::operator+=(const EnergyExpr& o) {
  for (const auto& [k, c] : o.terms) add(k, c);
  return *this;
}

EnergyExpr& EnergyExpr::operator-=(const EnergyExpr& o) {
  for (const auto& [k, c] : o.terms) add(k, -c);
  return *this;
}

void EnergyExpr::add(const std::string& label, int coeff) {
  if (coeff == 0) return;
  auto it = terms.find(label);
  if (it == terms.end()) {
    terms[label] = coeff;
  } else {
    it->second += coeff;
    if (it->second == 0) terms.erase(it);
  }
}

std::string EnergyExpr::str() const {
  if (terms.empty()) return "(0)";
  std::ostringstream out;
  out << "(";
  bool first = true;
  auto emit = [&](const std::string& label, int coeff) {
    if (coeff > 0) {
      if (!first) out << "+";
    } else {
      out << "-";
    }
    const int a = std::abs(coeff);
    if (a != 1) out << a;
    out << "\xCE\xB5_" << label;  // ε_label
    first = false;
  };
  for (const auto& [k, c] : terms)
    if (c > 0) emit(k, c);
  for (const auto& [k, c] : terms)
    if (c < 0) emit(k, c);
  out << ")";
  return out.str();
}

EnergyExpr EnergyExpr::parse(const std::string& rendered) {
  // Accepts "(ε_a+ε_b−ε_t−ε_n)" with ASCII '-' or U+2212, optional integer
  // coefficients and whitespace.
  std::string s;
  for (std::size_t i = 0; i < rendered.size();) {
    if (rendered.compare(i, 3, "\xE2\x88\x92") == 0) {  // U+2212 minus
      s += '-';
      i += 3;
    } else if (rendered[i] == '(' || rendered[i] == ')' || rendered[i] == ' ') {
      ++i;
    } else {
      s += rendered[i++];
    }
  }
  EnergyExpr out;
  std::size_t i = 0;
  while (i < s.size()) {
    int sign = 1;
    while (i < s.size() && (s[i] == '+' || s[i] == '-')) {
      if (s[i] == '-') sign = -sign;
      ++i;
    }
    int coeff = 1;
    if (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
      coeff = 0;
      while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])))
        coeff = coeff * 10 + (s[i++] - '0');
    }
    if (s.compare(i, 2, "\xCE\xB5") == 0) i += 2;  // ε
    else if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) ++i;
    else throw std::runtime_error("cannot parse energy term in '" + rendered + "'");
    if (i < s.size() && s[i] == '_') ++i;
    std::string label;
    while (i < s.size() && s[i] != '+' && s[i] != '-') label += s[i++];
    if (label.empty()) throw std::runtime_error("empty label in '" + rendered + "'");
    out.add(label, sign * coeff);
  }
  return out;
}

bool EnergyExpr::matches_string(const std::string& rendered) const {
  return parse(rendered) == *this;
}

double EnergyExpr::value(const std::map<std::string, double>& energies) const {
  double v = 0.0;
  for (const auto& [k, c] : terms) {
    auto it = energies.find(k);
    if (it == energies.end())
      throw std::runtime_error("no energy assigned to label '" + k + "'");
    v += c * it->second;
  }
  return v;
}

static long long factorial(int n) {
  long long f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

static Rational reduced(long long num, long long den) {
  const long long g = std::gcd(num, den);
  return {num / g, den / g};
}

int Diagram::o_vertex() const {
  for (int i = 0; i < vertex_count(); ++i)
    if (vertices[i].kind == VertexKind::O) return i;
  return -1;
}

namespace {

// Level span and flow direction of a line; returns false for lines that never
// cross a cut (free lines, bubbles, co-level dashed lines).
bool line_span(const Diagram& d, const Line& l, int& lo, int& hi, int& down) {
  if (l.type == LineType::free_line) return false;
  int from_level, to_level;
  if (l.internal()) {
    from_level = d.level_of(l.from_vertex);
    to_level = d.level_of(l.to_vertex);
  } else if (l.external_bra()) {
    from_level = d.level_of(l.from_vertex);
    to_level = d.effective_level;
  } else {
    from_level = d.effective_level;
    to_level = d.level_of(l.to_vertex);
  }
  if (from_level == to_level) return false;
  lo = std::min(from_level, to_level);
  hi = std::max(from_level, to_level);
  down = from_level > to_level ? 1 : -1;
  return true;
}

}  // namespace

std::vector<std::pair<int, int>> Diagram::crossing(int cut) const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < static_cast<int>(lines.size()); ++i) {
    int lo, hi, down;
    if (!line_span(*this, lines[i], lo, hi, down)) continue;
    if (lo <= cut && cut + 1 <= hi) out.push_back({i, down});
  }
  return out;
}

int Diagram::line_at(int vertex, bool bra_side, int slot) const {
  for (int i = 0; i < static_cast<int>(lines.size()); ++i) {
    const Line& l = lines[i];
    if (bra_side) {
      if (l.from_vertex == vertex && l.from_slot == slot) return i;
    } else {
      if (l.to_vertex == vertex && l.to_slot == slot) return i;
    }
  }
  return -1;
}

std::vector<int> Diagram::external_bra_lines() const {
  std::vector<int> out;
  for (int v = 0; v < vertex_count(); ++v)
    for (int s = 0; s < vertices[v].rank; ++s) {
      const int li = line_at(v, true, s);
      if (li >= 0 && !lines[li].internal()) out.push_back(li);
    }
  return out;
}

std::vector<int> Diagram::external_ket_lines() const {
  std::vector<int> out;
  for (int v = 0; v < vertex_count(); ++v)
    for (int s = 0; s < vertices[v].rank; ++s) {
      const int li = line_at(v, false, s);
      if (li >= 0 && !lines[li].internal()) out.push_back(li);
    }
  return out;
}

std::vector<std::string> Diagram::validate() const {
  std::vector<std::string> out;
  const int n = vertex_count();
  if (n == 0) {
    out.push_back("diagram has no vertices");
    return out;
  }
  const int ov = o_vertex();
  int o_count = 0;
  for (const auto& v : vertices)
    if (v.kind == VertexKind::O) ++o_count;
  if (target == Target::heff) {
    if (o_count != 0) out.push_back("H_eff diagram must not contain an O vertex");
    if (effective_level != n + 1)
      out.push_back("H_eff effective vertex must sit strictly above all vertices");
  } else {
    if (o_count != 1) out.push_back("O_eff diagram needs exactly one O vertex");
    else if (effective_level != level_of(ov))
      out.push_back("O_eff effective vertex must share the O vertex level");
  }
  // Port conservation.
  for (int v = 0; v < n; ++v) {
    if (vertices[v].rank < 1) out.push_back("vertex rank must be at least 1");
    for (int side = 0; side < 2; ++side)
      for (int s = 0; s < vertices[v].rank; ++s) {
        int hits = 0;
        for (const auto& l : lines) {
          if (side == 0 && l.from_vertex == v && l.from_slot == s) ++hits;
          if (side == 1 && l.to_vertex == v && l.to_slot == s) ++hits;
        }
        if (hits != 1)
          out.push_back("vertex " + std::to_string(v) + " " +
                        (side == 0 ? "bra" : "ket") + " slot " + std::to_string(s) +
                        " occupied " + std::to_string(hits) + " times");
      }
  }
  std::set<std::string> labels;
  for (const auto& l : lines) {
    if (l.label.empty()) out.push_back("line without label");
    else if (!labels.insert(l.label).second)
      out.push_back("duplicate line label '" + l.label + "'");
    switch (l.type) {
      case LineType::particle:
        if (!l.internal()) { out.push_back("particle line must be internal"); break; }
        if (level_of(l.from_vertex) >= level_of(l.to_vertex))
          out.push_back("particle line '" + l.label + "' must go upward");
        break;
      case LineType::hole:
        if (!l.internal()) { out.push_back("hole line must be internal"); break; }
        if (level_of(l.from_vertex) < level_of(l.to_vertex))
          out.push_back("hole line '" + l.label + "' must go downward or loop");
        if (l.from_vertex == l.to_vertex &&
            vertices[l.from_vertex].kind == VertexKind::O)
          out.push_back("core loop '" + l.label + "' on the O vertex");
        break;
      case LineType::dashed:
        if (l.internal()) out.push_back("dashed line '" + l.label + "' has two solid ends");
        else if (vertices[l.attached_vertex()].kind != VertexKind::V)
          out.push_back("dashed line '" + l.label + "' must attach to a V vertex");
        break;
      case LineType::free_line:
        if (l.internal()) out.push_back("free line '" + l.label + "' has two solid ends");
        else if (vertices[l.attached_vertex()].kind != VertexKind::O)
          out.push_back("free line '" + l.label + "' must attach to the O vertex");
        break;
    }
    if (l.from_vertex >= n || l.to_vertex >= n ||
        (l.from_vertex >= 0 && l.from_slot >= vertices[l.from_vertex].rank) ||
        (l.to_vertex >= 0 && l.to_slot >= vertices[l.to_vertex].rank))
      out.push_back("line endpoint out of range");
  }
  if (!out.empty()) return out;
  // Net outflow over everything (effective vertex included) must vanish.
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  if (!e_noe(*this, all, true).zero())
    out.push_back("net outflow energies do not add up to zero");
  return out;
}

void Diagram::require_valid() const {
  auto v = validate();
  if (v.empty()) return;
  std::string msg = "invalid diagram:";
  for (const auto& s : v) msg += "\n  - " + s;
  throw std::runtime_error(msg);
}

void Diagram::assign_labels() {
  const std::vector<std::string> holes = {"a", "b", "c", "d", "e", "f", "g", "h"};
  const std::vector<std::string> parts = {"s", "t", "u", "w", "x", "y", "z"};
  const std::vector<std::string> bras = {"m", "n", "o"};
  const std::vector<std::string> kets = {"p", "q", "r"};
  auto pick = [](const std::vector<std::string>& pool, int& used) {
    std::string s = used < static_cast<int>(pool.size())
                        ? pool[used]
                        : pool[0] + std::to_string(used + 1);
    ++used;
    return s;
  };
  int nh = 0, np = 0, nb = 0, nk = 0;
  for (auto& l : lines) {
    switch (l.type) {
      case LineType::hole: l.label = pick(holes, nh); break;
      case LineType::particle: l.label = pick(parts, np); break;
      default:
        l.label = l.external_bra() ? pick(bras, nb) : pick(kets, nk);
    }
  }
}

void Diagram::permute_ports(int vertex, bool bra_side, const std::vector<int>& perm) {
  const int r = vertices[vertex].rank;
  if (static_cast<int>(perm.size()) != r)
    throw std::runtime_error("permute_ports: bad permutation size");
  std::vector<int> line_of(r, -1);
  for (int s = 0; s < r; ++s) line_of[s] = line_at(vertex, bra_side, perm[s]);
  for (int s = 0; s < r; ++s) {
    if (line_of[s] < 0) throw std::runtime_error("permute_ports: unoccupied slot");
    Line& l = lines[line_of[s]];
    if (bra_side) l.from_slot = s;
    else l.to_slot = s;
  }
}

EnergyExpr e_noe(const Diagram& d, const std::vector<int>& vertex_set,
                 bool include_effective) {
  std::vector<char> in_set(d.vertex_count(), 0);
  for (int v : vertex_set) in_set.at(v) = 1;
  EnergyExpr out;
  for (const auto& l : d.lines) {
    if (l.type == LineType::free_line) continue;
    const bool creator_in = l.from_vertex >= 0 ? bool(in_set[l.from_vertex])
                                               : include_effective;
    const bool annih_in = l.to_vertex >= 0 ? bool(in_set[l.to_vertex])
                                           : include_effective;
    if (creator_in && !annih_in) out.add(l.label, +1);
    if (!creator_in && annih_in) out.add(l.label, -1);
  }
  return out;
}

EnergyExpr cut_denominator(const Diagram& d, int cut) {
  if (cut < 1 || cut >= d.vertex_count())
    throw std::runtime_error("cut_denominator: cut index out of range");
  EnergyExpr out;
  for (const auto& [li, down] : d.crossing(cut)) out.add(d.lines[li].label, down);
  return out;
}

int hole_count(const Diagram& d) {
  int h = 0;
  for (const auto& l : d.lines)
    if (l.type == LineType::hole) ++h;
  return h;
}

int loop_count(const Diagram& d) {
  // Fermion paths continue through a vertex from ket slot k to bra slot k.
  const int nl = static_cast<int>(d.lines.size());
  std::vector<int> next(nl, -1);
  for (int i = 0; i < nl; ++i) {
    const Line& l = d.lines[i];
    if (!l.internal()) continue;
    const int cont = d.line_at(l.to_vertex, true, l.to_slot);
    if (cont >= 0 && d.lines[cont].internal()) next[i] = cont;
  }
  std::vector<char> seen(nl, 0);
  int loops = 0;
  for (int i = 0; i < nl; ++i) {
    if (seen[i] || !d.lines[i].internal()) continue;
    // Walk forward; either we come back to i (cycle) or leave the internal set.
    int j = i;
    std::vector<int> trail;
    while (j >= 0 && !seen[j]) {
      seen[j] = 1;
      trail.push_back(j);
      j = next[j];
    }
    if (j >= 0 && std::find(trail.begin(), trail.end(), j) != trail.end()) ++loops;
  }
  return loops;
}

int sign_factor(const Diagram& d) {
  return ((loop_count(d) + hole_count(d)) % 2 == 0) ? 1 : -1;
}

Rational weight_factor(const Diagram& d) {
  std::map<std::pair<int, int>, int> klass;  // (vertex, side) -> count
  int m = 0;
  for (const auto& l : d.lines) {
    if (l.internal() || !(l.type == LineType::dashed || l.type == LineType::free_line))
      continue;
    const int side = l.external_bra() ? 0 : 1;
    ++klass[{l.attached_vertex(), side}];
    if (side == 0) ++m;
  }
  long long num = factorial(m) * factorial(m);
  long long den = 1;
  for (const auto& [k, c] : klass) {
    (void)k;
    den *= factorial(c);
  }
  return reduced(num, den);
}

Rational internal_symmetry_factor(const Diagram& d) {
  std::map<std::pair<int, int>, int> klass;  // (from, to) -> count
  for (const auto& l : d.lines)
    if (l.internal()) ++klass[{l.from_vertex, l.to_vertex}];
  long long den = 1;
  for (const auto& [k, c] : klass) {
    (void)k;
    den *= factorial(c);
  }
  return {1, den};
}

namespace {

// All permutations of {0..r-1}, precomputed for small r.
const std::vector<std::vector<int>>& perms_of(int r) {
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
  if (r < 0 || r > 6) throw std::runtime_error("vertex rank out of supported range");
  return cache[r];
}

char type_char(LineType t, bool keep_solid_typing) {
  switch (t) {
    case LineType::particle: return keep_solid_typing ? 'p' : 's';
    case LineType::hole: return keep_solid_typing ? 'h' : 's';
    case LineType::dashed: return 'D';
    case LineType::free_line: return 'F';
  }
  return '?';
}

// Minimal lexicographic encoding over per-vertex port permutations and, when
// `vertex_order` candidates are given, over vertex relabelings.
std::string minimal_encoding(const Diagram& d, bool keep_solid_typing,
                             bool keep_vertex_order) {
  const int n = d.vertex_count();
  std::vector<std::vector<int>> vertex_orders;
  if (keep_vertex_order) {
    std::vector<int> id(n);
    std::iota(id.begin(), id.end(), 0);
    vertex_orders.push_back(id);
  } else {
    // Vertical order is forgotten: every arrangement competes and the kind
    // tag written per position keeps different multisets apart.
    std::vector<int> p(n);
    std::iota(p.begin(), p.end(), 0);
    do {
      vertex_orders.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
  }

  std::string best;
  for (const auto& order : vertex_orders) {
    std::vector<int> pos_of(n);  // original vertex -> displayed position
    for (int i = 0; i < n; ++i) pos_of[order[i]] = i;
    // Odometer over per-vertex (bra perm, ket perm) choices.
    std::vector<int> bi(n, 0), ki(n, 0);
    auto perm_count = [&](int v) {
      return static_cast<int>(perms_of(d.vertices[v].rank).size());
    };
    while (true) {
      std::ostringstream enc;
      enc << to_string(d.target) << ";";
      if (keep_vertex_order) enc << "L" << d.effective_level << ";";
      for (int i = 0; i < n; ++i) {
        const int v = order[i];
        const Vertex& vx = d.vertices[v];
        enc << (vx.kind == VertexKind::V ? "V" : "O") << vx.rank << "[";
        const auto& bp = perms_of(vx.rank)[bi[v]];
        for (int s = 0; s < vx.rank; ++s) {
          const int li = d.line_at(v, true, bp[s]);
          const Line& l = d.lines[li];
          enc << type_char(l.type, keep_solid_typing);
          if (l.internal()) {
            const auto& kp = perms_of(d.vertices[l.to_vertex].rank)[ki[l.to_vertex]];
            int shown_slot = 0;
            for (int t = 0; t < d.vertices[l.to_vertex].rank; ++t)
              if (kp[t] == l.to_slot) shown_slot = t;
            enc << pos_of[l.to_vertex] << "." << shown_slot;
          }
          enc << ",";
        }
        enc << "|";
        const auto& kp = perms_of(vx.rank)[ki[v]];
        for (int s = 0; s < vx.rank; ++s) {
          const int li = d.line_at(v, false, kp[s]);
          const Line& l = d.lines[li];
          enc << type_char(l.type, keep_solid_typing);
          if (l.internal()) {
            const auto& bp2 = perms_of(d.vertices[l.from_vertex].rank)[bi[l.from_vertex]];
            int shown_slot = 0;
            for (int t = 0; t < d.vertices[l.from_vertex].rank; ++t)
              if (bp2[t] == l.from_slot) shown_slot = t;
            enc << pos_of[l.from_vertex] << "." << shown_slot;
          }
          enc << ",";
        }
        enc << "]";
      }
      std::string s = enc.str();
      if (best.empty() || s < best) best = std::move(s);
      // Advance the odometer.
      int v = 0;
      for (; v < n; ++v) {
        if (++bi[v] < perm_count(v)) break;
        bi[v] = 0;
        if (++ki[v] < perm_count(v)) break;
        ki[v] = 0;
      }
      if (v == n) break;
    }
  }
  return best;
}

}  // namespace

std::string canonical_form(const Diagram& d) {
  return minimal_encoding(d, /*keep_solid_typing=*/true, /*keep_vertex_order=*/true);
}

std::uint64_t canonical_key(const Diagram& d) {
  // FNV-1a over the canonical form.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical_form(d)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string skeleton_form(const Diagram& d) {
  return minimal_encoding(d, /*keep_solid_typing=*/false, /*keep_vertex_order=*/false);
}

std::string typed_skeleton_form(const Diagram& d) {
  return minimal_encoding(d, /*keep_solid_typing=*/true, /*keep_vertex_order=*/false);
}

bool is_linked(const Diagram& d) {
  const int n = d.vertex_count();
  for (int cut = 1; cut < n; ++cut) {
    bool solid = false;
    for (const auto& [li, down] : d.crossing(cut)) {
      (void)down;
      if (d.lines[li].solid()) solid = true;
    }
    if (!solid) return false;
  }
  return true;
}

ExternalAssembly wick_assembly(const Diagram& d) {
  // Operator string of the time-ordered product, leftmost = latest: per
  // vertex (top to bottom) the creations out0..out_{r-1} followed by the
  // annihilations in_{r-1}..in0.
  struct Elem {
    int line;
    bool creation;
  };
  std::vector<Elem> str;
  for (int v = d.vertex_count() - 1; v >= 0; --v) {
    const int r = d.vertices[v].rank;
    for (int s = 0; s < r; ++s) str.push_back({d.line_at(v, true, s), true});
    for (int s = r - 1; s >= 0; --s) str.push_back({d.line_at(v, false, s), false});
  }
  const int len = static_cast<int>(str.size());
  std::vector<char> alive(len, 1);
  long crossings = 0;
  // Pull each contracted pair together, counting the live operators between.
  for (int li = 0; li < static_cast<int>(d.lines.size()); ++li) {
    if (!d.lines[li].internal()) continue;
    int a = -1, b = -1;
    for (int i = 0; i < len; ++i)
      if (str[i].line == li) (a < 0 ? a : b) = i;
    for (int i = a + 1; i < b; ++i)
      if (alive[i]) ++crossings;
    alive[a] = alive[b] = 0;
  }
  ExternalAssembly out;
  long inversions = 0;
  int annihilations_seen = 0;
  std::vector<int> ket_order;
  for (int i = 0; i < len; ++i) {
    if (!alive[i]) continue;
    if (str[i].creation) {
      out.bra_lines.push_back(str[i].line);
      inversions += annihilations_seen;
    } else {
      ket_order.push_back(str[i].line);
      ++annihilations_seen;
    }
  }
  // a+_{B1}..a+_{Bm} a_{Km}..a_{K1}: the rightmost annihilator is K1.
  out.ket_lines.assign(ket_order.rbegin(), ket_order.rend());
  out.phase = ((crossings + inversions) % 2 == 0) ? 1 : -1;
  return out;
}

}  // namespace mbdiag
