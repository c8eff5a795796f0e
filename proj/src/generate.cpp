#include "mbdiag/generate.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>

namespace mbdiag {

int VertexSequence::order_in_v() const {
  int k = 0;
  for (auto kind : kinds)
    if (kind == VertexKind::V) ++k;
  return k;
}

bool VertexSequence::has_o() const {
  return std::find(kinds.begin(), kinds.end(), VertexKind::O) != kinds.end();
}

int external_classification_count(int rank) { return (rank + 1) * (rank + 1); }

namespace {

struct PortId {
  int vertex;
  int slot;
};

// Exhaustive pairing of bra ports with ket ports; unmatched ports become
// external lines. `partner[bra index] = ket index or -1`. `forbidden`
// blanks out pairings that are never drawn (same-vertex loops on the O
// vertex: the transition operator carries no core spectators, its order-0
// term is the bare valence block).
void recurse_matchings(int next_bra, int n_bra,
                       const std::vector<char>& ket_used_in, int n_ket,
                       const std::vector<std::vector<char>>& forbidden,
                       std::vector<int>& partner,
                       const std::function<void(const std::vector<int>&)>& emit) {
  if (next_bra == n_bra) {
    emit(partner);
    return;
  }
  // external
  partner[next_bra] = -1;
  recurse_matchings(next_bra + 1, n_bra, ket_used_in, n_ket, forbidden, partner, emit);
  for (int k = 0; k < n_ket; ++k) {
    if (ket_used_in[k] || forbidden[next_bra][k]) continue;
    auto used = ket_used_in;
    used[k] = 1;
    partner[next_bra] = k;
    recurse_matchings(next_bra + 1, n_bra, used, n_ket, forbidden, partner, emit);
  }
  partner[next_bra] = -1;
}

Diagram diagram_from_matching(Target target, const std::vector<Vertex>& vertices,
                              const std::vector<PortId>& bra_ports,
                              const std::vector<PortId>& ket_ports,
                              const std::vector<int>& partner) {
  Diagram d;
  d.target = target;
  d.vertices = vertices;
  int ov = -1;
  for (int i = 0; i < d.vertex_count(); ++i)
    if (vertices[i].kind == VertexKind::O) ov = i;
  d.effective_level = target == Target::heff ? d.vertex_count() + 1
                                             : d.level_of(ov);
  std::vector<char> ket_done(ket_ports.size(), 0);
  for (std::size_t b = 0; b < bra_ports.size(); ++b) {
    Line l;
    l.from_vertex = bra_ports[b].vertex;
    l.from_slot = bra_ports[b].slot;
    if (partner[b] >= 0) {
      ket_done[partner[b]] = 1;
      l.to_vertex = ket_ports[partner[b]].vertex;
      l.to_slot = ket_ports[partner[b]].slot;
      l.type = l.from_vertex < l.to_vertex ? LineType::particle : LineType::hole;
    } else {
      l.type = vertices[l.from_vertex].kind == VertexKind::V ? LineType::dashed
                                                             : LineType::free_line;
    }
    d.lines.push_back(l);
  }
  for (std::size_t k = 0; k < ket_ports.size(); ++k) {
    if (ket_done[k]) continue;
    Line l;
    l.to_vertex = ket_ports[k].vertex;
    l.to_slot = ket_ports[k].slot;
    l.type = d.vertices[l.to_vertex].kind == VertexKind::V ? LineType::dashed
                                                           : LineType::free_line;
    d.lines.push_back(l);
  }
  return d;
}

}  // namespace

namespace {

// Enumeration depends only on the sequence and available ranks; results are
// cached so model sweeps do not re-run the contraction search.
std::mutex cache_mutex;
std::map<std::string, std::vector<Diagram>> contraction_cache;

std::string cache_key(const VertexSequence& seq, const std::vector<int>& v_ranks,
                      int o_rank) {
  std::string key;
  for (auto k : seq.kinds) key += k == VertexKind::O ? 'O' : 'V';
  key += '|';
  for (int r : v_ranks) key += static_cast<char>('0' + r);
  key += '|';
  key += static_cast<char>('0' + o_rank);
  return key;
}

}  // namespace

std::vector<Diagram> wick_contractions(const VertexSequence& seq,
                                       const ModelInstance& model) {
  const auto v_ranks = model.v_ranks();
  if (v_ranks.empty() && seq.order_in_v() > 0)
    throw std::runtime_error("model has no perturbation tensors");
  if (seq.has_o() && !model.O)
    throw std::runtime_error("model has no transition operator");
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = contraction_cache.find(
        cache_key(seq, v_ranks, model.O ? model.O->rank() : 0));
    if (it != contraction_cache.end()) return it->second;
  }
  const Target target = seq.has_o() ? Target::oeff : Target::heff;
  const int n = static_cast<int>(seq.kinds.size());

  // Rank choice per V vertex.
  std::vector<std::vector<int>> rank_options(n);
  for (int i = 0; i < n; ++i) {
    if (seq.kinds[i] == VertexKind::O) rank_options[i] = {model.O->rank()};
    else rank_options[i] = v_ranks;
  }

  std::map<std::string, Diagram> unique;
  std::vector<int> choice(n, 0);
  while (true) {
    std::vector<Vertex> vertices(n);
    for (int i = 0; i < n; ++i) {
      vertices[i].kind = seq.kinds[i];
      vertices[i].rank = rank_options[i][choice[i]];
      vertices[i].name = (seq.kinds[i] == VertexKind::O)
                             ? "O"
                             : "V" + std::to_string(i + 1);
    }
    std::vector<PortId> bra_ports, ket_ports;
    for (int i = 0; i < n; ++i)
      for (int s = 0; s < vertices[i].rank; ++s) {
        bra_ports.push_back({i, s});
        ket_ports.push_back({i, s});
      }
    std::vector<int> partner(bra_ports.size(), -1);
    std::vector<char> used(ket_ports.size(), 0);
    std::vector<std::vector<char>> forbidden(
        bra_ports.size(), std::vector<char>(ket_ports.size(), 0));
    for (std::size_t b = 0; b < bra_ports.size(); ++b)
      for (std::size_t k = 0; k < ket_ports.size(); ++k)
        if (bra_ports[b].vertex == ket_ports[k].vertex &&
            vertices[bra_ports[b].vertex].kind == VertexKind::O)
          forbidden[b][k] = 1;
    recurse_matchings(
        0, static_cast<int>(bra_ports.size()), used,
        static_cast<int>(ket_ports.size()), forbidden, partner,
        [&](const std::vector<int>& match) {
          Diagram d = diagram_from_matching(target, vertices, bra_ports,
                                            ket_ports, match);
          if (!is_linked(d)) return;
          std::string key = canonical_form(d);
          if (unique.count(key)) return;
          d.assign_labels();
          d.require_valid();
          unique.emplace(std::move(key), std::move(d));
        });
    int i = 0;
    for (; i < n; ++i) {
      if (++choice[i] < static_cast<int>(rank_options[i].size())) break;
      choice[i] = 0;
    }
    if (i == n) break;
  }

  std::vector<Diagram> out;
  out.reserve(unique.size());
  for (auto& [key, d] : unique) {
    (void)key;
    out.push_back(std::move(d));
  }
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    contraction_cache.emplace(
        cache_key(seq, v_ranks, model.O ? model.O->rank() : 0), out);
  }
  return out;
}

std::vector<Diagram> enumerate_heff(int order, const ModelInstance& model) {
  if (order < 1 || order > 3)
    throw std::runtime_error("enumerate_heff supports orders 1..3");
  VertexSequence seq;
  seq.kinds.assign(order, VertexKind::V);
  return wick_contractions(seq, model);
}

std::vector<Diagram> enumerate_oeff(int order_in_v, const ModelInstance& model) {
  if (order_in_v < 0 || order_in_v > 2)
    throw std::runtime_error("enumerate_oeff supports orders 0..2 in V");
  std::map<std::string, Diagram> unique;
  std::vector<Diagram> out;
  for (int pos = 0; pos <= order_in_v; ++pos) {
    VertexSequence seq;
    seq.kinds.assign(order_in_v + 1, VertexKind::V);
    seq.kinds[pos] = VertexKind::O;
    for (auto& d : wick_contractions(seq, model)) {
      std::string key = canonical_form(d);
      if (unique.count(key)) continue;
      unique.emplace(std::move(key), std::move(d));
    }
  }
  out.reserve(unique.size());
  for (auto& [key, d] : unique) {
    (void)key;
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace mbdiag
