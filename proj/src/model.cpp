#include "mbdiag/model.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace mbdiag {

const char* to_string(Space s) {
  switch (s) {
    case Space::core: return "core";
    case Space::valence: return "valence";
    case Space::virt: return "virtual";
  }
  return "?";
}

Space space_from_string(const std::string& s) {
  if (s == "core") return Space::core;
  if (s == "valence") return Space::valence;
  if (s == "virtual") return Space::virt;
  throw std::runtime_error("unknown orbital space '" + s + "'");
}

int sort_sign(IndexTuple& t) {
  int sign = 1;
  for (std::size_t i = 1; i < t.size(); ++i) {
    for (std::size_t j = i; j > 0 && t[j - 1] >= t[j]; --j) {
      if (t[j - 1] == t[j]) return 0;
      std::swap(t[j - 1], t[j]);
      sign = -sign;
    }
  }
  return sign;
}

double OperatorTensor::coefficient(IndexTuple bra, IndexTuple ket) const {
  if (static_cast<int>(bra.size()) != rank_ ||
      static_cast<int>(ket.size()) != rank_) {
    throw std::runtime_error("coefficient(): tuple length does not match rank");
  }
  const int sb = sort_sign(bra);
  if (sb == 0) return 0.0;
  const int sk = sort_sign(ket);
  if (sk == 0) return 0.0;
  auto it = data_.find({bra, ket});
  if (it == data_.end()) return 0.0;
  return sb * sk * it->second;
}

void OperatorTensor::set(const IndexTuple& bra, const IndexTuple& ket,
                         double value) {
  if (static_cast<int>(bra.size()) != rank_ ||
      static_cast<int>(ket.size()) != rank_) {
    throw std::runtime_error("set(): tuple length does not match rank");
  }
  if (!std::is_sorted(bra.begin(), bra.end()) ||
      !std::is_sorted(ket.begin(), ket.end()) ||
      std::adjacent_find(bra.begin(), bra.end()) != bra.end() ||
      std::adjacent_find(ket.begin(), ket.end()) != ket.end()) {
    throw std::runtime_error("set(): tuples must be strictly increasing");
  }
  if (value == 0.0) {
    data_.erase({bra, ket});
  } else {
    data_[{bra, ket}] = value;
  }
}

void OperatorTensor::add(IndexTuple bra, IndexTuple ket, double value) {
  const int sb = sort_sign(bra);
  if (sb == 0) return;
  const int sk = sort_sign(ket);
  if (sk == 0) return;
  double& slot = data_[{bra, ket}];
  slot += sb * sk * value;
  if (slot == 0.0) data_.erase({bra, ket});
}

OperatorTensor OperatorTensor::scaled(double factor) const {
  OperatorTensor out(rank_);
  if (factor == 0.0) return out;
  for (const auto& [key, v] : data_) out.data_[key] = v * factor;
  return out;
}

OperatorTensor& OperatorTensor::operator+=(const OperatorTensor& other) {
  if (other.rank_ != rank_) {
    throw std::runtime_error("operator+=: rank mismatch");
  }
  for (const auto& [key, v] : other.data_) {
    double& slot = data_[key];
    slot += v;
    if (slot == 0.0) data_.erase(key);
  }
  return *this;
}

double OperatorTensor::max_abs() const {
  double m = 0.0;
  for (const auto& [key, v] : data_) m = std::max(m, std::abs(v));
  return m;
}

namespace {

void for_each_permutation(int n, const std::function<void(const std::vector<int>&, int)>& fn) {
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  // Walk all permutations with their signs.
  std::vector<int> p = perm;
  do {
    // sign of p
    std::vector<int> q = p;
    int sign = 1;
    for (std::size_t i = 1; i < q.size(); ++i) {
      for (std::size_t j = i; j > 0 && q[j - 1] > q[j]; --j) {
        std::swap(q[j - 1], q[j]);
        sign = -sign;
      }
    }
    fn(p, sign);
  } while (std::next_permutation(p.begin(), p.end()));
}

}  // namespace

OperatorTensor antisymmetrize(const RawKernel& raw, int rank) {
  OperatorTensor out(rank);
  std::set<std::pair<IndexTuple, IndexTuple>> candidates;
  for (const auto& [key, value] : raw) {
    (void)value;
    const auto& [bra, ket] = key;
    if (static_cast<int>(bra.size()) != rank ||
        static_cast<int>(ket.size()) != rank) {
      throw std::runtime_error("antisymmetrize(): entry tuple length does not match rank");
    }
    if (!std::is_sorted(bra.begin(), bra.end()) ||
        std::adjacent_find(bra.begin(), bra.end()) != bra.end()) {
      continue;  // reached only through the sign extension
    }
    IndexTuple k = ket;
    if (sort_sign(k) == 0) continue;
    candidates.insert({bra, k});
  }
  for (const auto& [bra, ket] : candidates) {
    double t = 0.0;
    for_each_permutation(rank, [&](const std::vector<int>& p, int sign) {
      IndexTuple kk(rank);
      for (int i = 0; i < rank; ++i) kk[i] = ket[p[i]];
      auto it = raw.find({bra, kk});
      if (it != raw.end()) t += sign * it->second;
    });
    if (t != 0.0) out.set(bra, ket, t);
  }
  return out;
}

const Orbital& ModelInstance::orbital(int id) const {
  if (id < 0 || id >= orbital_count()) {
    throw std::runtime_error("unknown orbital id " + std::to_string(id));
  }
  return orbitals[id];
}

std::vector<int> ModelInstance::ids_in(Space s) const {
  std::vector<int> out;
  for (const auto& o : orbitals)
    if (o.space == s) out.push_back(o.id);
  return out;
}

std::vector<int> ModelInstance::particle_ids() const {
  std::vector<int> out;
  for (const auto& o : orbitals)
    if (o.space != Space::core) out.push_back(o.id);
  return out;
}

int ModelInstance::core_count() const {
  return static_cast<int>(ids_in(Space::core).size());
}

int ModelInstance::valence_count() const {
  return static_cast<int>(ids_in(Space::valence).size());
}

double ModelInstance::e0() const {
  double e = 0.0;
  for (const auto& o : orbitals)
    if (o.space == Space::core) e += o.energy;
  const auto val = ids_in(Space::valence);
  if (!val.empty()) e += valence_electrons * orbitals[val.front()].energy;
  return e;
}

const OperatorTensor* ModelInstance::v_of_rank(int rank) const {
  for (const auto& t : V)
    if (t.rank() == rank) return &t;
  return nullptr;
}

std::vector<int> ModelInstance::v_ranks() const {
  std::vector<int> out;
  for (const auto& t : V) out.push_back(t.rank());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// Portable uniform double in [lo, hi) from a mt19937_64 draw.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = (rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

std::vector<double> spaced_energies(std::mt19937_64& rng, int n, double lo,
                                    double hi) {
  // Jittered grid keeps same-space energies separated without rejection loops.
  std::vector<double> out;
  if (n == 0) return out;
  const double step = (hi - lo) / n;
  for (int i = 0; i < n; ++i) {
    out.push_back(lo + step * i + uniform(rng, 0.1, 0.9) * step);
  }
  return out;
}

OperatorTensor random_tensor(std::mt19937_64& rng, int rank, int n_orbitals) {
  OperatorTensor t(rank);
  std::vector<int> bra(rank), ket(rank);
  // Walk strictly increasing bra/ket tuples in lexicographic order.
  auto next_tuple = [&](IndexTuple& tup) {
    int r = rank;
    while (--r >= 0) {
      if (tup[r] < n_orbitals - (rank - r)) {
        ++tup[r];
        for (int j = r + 1; j < rank; ++j) tup[j] = tup[j - 1] + 1;
        return true;
      }
    }
    return false;
  };
  auto first_tuple = [&](IndexTuple& tup) {
    for (int i = 0; i < rank; ++i) tup[i] = i;
    return rank <= n_orbitals;
  };
  if (!first_tuple(bra)) return t;
  do {
    if (!first_tuple(ket)) return t;
    do {
      t.set(bra, ket, uniform(rng, -1.0, 1.0));
    } while (next_tuple(ket));
  } while (next_tuple(bra));
  return t;
}

}  // namespace

ModelInstance random_model(std::uint64_t seed, int n_core, int n_valence,
                           int n_virtual, int valence_electrons,
                           double min_gap) {
  if (n_core < 0 || n_valence < 0 || n_virtual < 0 || valence_electrons < 0) {
    throw std::runtime_error("random_model: counts must be non-negative");
  }
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 1);
  ModelInstance m;
  const int n = n_core + n_valence + n_virtual;
  const auto core_e = spaced_energies(rng, n_core, -2.0, -1.2);
  const auto virt_e = spaced_energies(rng, n_virtual, 1.2, 2.0);
  int id = 0;
  for (int i = 0; i < n_core; ++i) m.orbitals.push_back({id++, core_e[i], Space::core});
  for (int i = 0; i < n_valence; ++i) m.orbitals.push_back({id++, 0.0, Space::valence});
  for (int i = 0; i < n_virtual; ++i) m.orbitals.push_back({id++, virt_e[i], Space::virt});
  m.valence_electrons = std::min(valence_electrons, n_valence);
  m.V.push_back(random_tensor(rng, 1, n));
  m.V.push_back(random_tensor(rng, 2, n));
  m.O = random_tensor(rng, 2, n);
  m.lambda = 1.0;
  // Every cut crosses at least one core or virtual line, so |denominator|
  // >= 1.2 by construction; min_gap only needs a sanity check here.
  if (min_gap > 1.2) {
    throw std::runtime_error("random_model: min_gap larger than the built-in denominator bound");
  }
  return m;
}

std::vector<std::string> validate_model(const ModelInstance& m) {
  std::vector<std::string> out;
  const int n = m.orbital_count();
  for (int i = 0; i < n; ++i) {
    if (m.orbitals[i].id != i) {
      out.push_back("orbital ids must be contiguous from 0 (position " +
                    std::to_string(i) + " has id " +
                    std::to_string(m.orbitals[i].id) + ")");
      break;
    }
  }
  double max_core = -1e300, min_virt = 1e300;
  bool has_core = false, has_virt = false;
  std::vector<double> val_e;
  for (const auto& o : m.orbitals) {
    if (!std::isfinite(o.energy)) out.push_back("non-finite orbital energy");
    if (o.space == Space::core) { has_core = true; max_core = std::max(max_core, o.energy); }
    if (o.space == Space::virt) { has_virt = true; min_virt = std::min(min_virt, o.energy); }
    if (o.space == Space::valence) val_e.push_back(o.energy);
  }
  if (has_core && has_virt && !(max_core < min_virt)) {
    out.push_back("every core orbital energy must lie strictly below every virtual energy");
  }
  for (double e : val_e) {
    if (e != val_e.front()) {
      out.push_back("non-degenerate model space: valence orbitals must share one energy");
      break;
    }
  }
  if (m.valence_electrons < 0 ||
      m.valence_electrons > static_cast<int>(val_e.size())) {
    out.push_back("valence_electrons must lie in [0, number of valence orbitals]");
  }
  auto check_tensor = [&](const OperatorTensor& t, const std::string& name) {
    if (t.rank() < 1 || t.rank() > 2) {
      out.push_back(name + ": rank must be 1 or 2");
    }
    for (const auto& [key, v] : t.entries()) {
      (void)v;
      for (int idx : key.first)
        if (idx < 0 || idx >= n) {
          out.push_back(name + " references unknown orbital id " + std::to_string(idx));
          return;
        }
      for (int idx : key.second)
        if (idx < 0 || idx >= n) {
          out.push_back(name + " references unknown orbital id " + std::to_string(idx));
          return;
        }
    }
  };
  std::set<int> ranks;
  for (std::size_t i = 0; i < m.V.size(); ++i) {
    check_tensor(m.V[i], "V[" + std::to_string(i) + "]");
    if (!ranks.insert(m.V[i].rank()).second) {
      out.push_back("V holds more than one tensor of rank " + std::to_string(m.V[i].rank()));
    }
  }
  if (m.O) check_tensor(*m.O, "O");
  if (!std::isfinite(m.lambda)) out.push_back("lambda must be finite");
  return out;
}

void require_valid(const ModelInstance& m) {
  auto v = validate_model(m);
  if (v.empty()) return;
  std::string msg = "invalid model:";
  for (const auto& s : v) msg += "\n  - " + s;
  throw std::runtime_error(msg);
}

namespace {

using nlohmann::ordered_json;

void reject_unknown(const ordered_json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) ok = true;
    if (!ok) throw std::runtime_error("unknown field '" + it.key() + "' in " + where);
  }
}

OperatorTensor tensor_from_json(const ordered_json& j, const std::string& where) {
  reject_unknown(j, {"rank", "entries", "antisymmetrized"}, where);
  if (!j.contains("rank") || !j.contains("entries")) {
    throw std::runtime_error(where + " needs 'rank' and 'entries'");
  }
  const int rank = j.at("rank").get<int>();
  const bool pre = j.value("antisymmetrized", false);
  RawKernel raw;
  OperatorTensor direct(rank);
  for (const auto& e : j.at("entries")) {
    reject_unknown(e, {"bra", "ket", "value"}, where + " entry");
    IndexTuple bra = e.at("bra").get<IndexTuple>();
    IndexTuple ket = e.at("ket").get<IndexTuple>();
    const double v = e.at("value").get<double>();
    if (pre) {
      direct.add(bra, ket, v);
    } else {
      auto key = std::make_pair(bra, ket);
      if (raw.count(key)) throw std::runtime_error(where + ": duplicate kernel entry");
      raw[key] = v;
    }
  }
  return pre ? direct : antisymmetrize(raw, rank);
}

ordered_json tensor_to_json(const OperatorTensor& t) {
  ordered_json j;
  j["rank"] = t.rank();
  j["antisymmetrized"] = true;
  ordered_json entries = ordered_json::array();
  for (const auto& [key, v] : t.entries()) {
    ordered_json e;
    e["bra"] = key.first;
    e["ket"] = key.second;
    e["value"] = v;
    entries.push_back(std::move(e));
  }
  j["entries"] = std::move(entries);
  return j;
}

}  // namespace

ModelInstance model_from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  reject_unknown(j, {"orbitals", "valence_electrons", "V", "O", "lambda"}, "model");
  ModelInstance m;
  if (!j.contains("orbitals") || !j.contains("valence_electrons") || !j.contains("V")) {
    throw std::runtime_error("model needs 'orbitals', 'valence_electrons' and 'V'");
  }
  for (const auto& jo : j.at("orbitals")) {
    reject_unknown(jo, {"id", "energy", "space"}, "orbital");
    Orbital o;
    o.id = jo.at("id").get<int>();
    o.energy = jo.at("energy").get<double>();
    o.space = space_from_string(jo.at("space").get<std::string>());
    m.orbitals.push_back(o);
  }
  m.valence_electrons = j.at("valence_electrons").get<int>();
  for (std::size_t i = 0; i < j.at("V").size(); ++i) {
    m.V.push_back(tensor_from_json(j.at("V")[i], "V[" + std::to_string(i) + "]"));
  }
  if (j.contains("O") && !j.at("O").is_null()) {
    m.O = tensor_from_json(j.at("O"), "O");
  }
  m.lambda = j.value("lambda", 1.0);
  return m;
}

ModelInstance load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json_text(ss.str());
}

std::string model_to_json_text(const ModelInstance& m) {
  ordered_json j;
  ordered_json orbs = ordered_json::array();
  for (const auto& o : m.orbitals) {
    ordered_json jo;
    jo["id"] = o.id;
    jo["energy"] = o.energy;
    jo["space"] = to_string(o.space);
    orbs.push_back(std::move(jo));
  }
  j["orbitals"] = std::move(orbs);
  j["valence_electrons"] = m.valence_electrons;
  ordered_json vlist = ordered_json::array();
  for (const auto& t : m.V) vlist.push_back(tensor_to_json(t));
  j["V"] = std::move(vlist);
  if (m.O) j["O"] = tensor_to_json(*m.O);
  j["lambda"] = m.lambda;
  return j.dump(2) + "\n";
}

void save_model(const ModelInstance& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
  out << model_to_json_text(m);
}

}  // namespace mbdiag
