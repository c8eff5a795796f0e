#include "mbdiag/golden.hpp"

#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "mbdiag/fixture.hpp"
#include "mbdiag/transform.hpp"

namespace mbdiag {

namespace {

double rel_diff(const OperatorTensor& a, const OperatorTensor& b) {
  double scale = std::max({a.max_abs(), b.max_abs(), 1e-6});
  double diff = 0.0;
  for (const auto& [key, v] : a.entries())
    diff = std::max(diff, std::abs(v - b.coefficient(key.first, key.second)));
  for (const auto& [key, v] : b.entries())
    diff = std::max(diff, std::abs(v - a.coefficient(key.first, key.second)));
  return diff / scale;
}

// Antisymmetric projection of a placement kernel over sorted valence tuples.
OperatorTensor project_kernel(
    const ModelInstance& m, int rank,
    const std::function<double(const IndexTuple&, const IndexTuple&)>& kernel,
    double prefactor) {
  OperatorTensor out(rank);
  const auto valence = m.ids_in(Space::valence);
  std::vector<IndexTuple> tuples;
  std::vector<int> pick;
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (static_cast<int>(pick.size()) == rank) {
      tuples.push_back(IndexTuple(pick.begin(), pick.end()));
      return;
    }
    for (std::size_t i = start; i < valence.size(); ++i) {
      pick.push_back(valence[i]);
      rec(i + 1);
      pick.pop_back();
    }
  };
  rec(0);
  std::vector<std::vector<int>> perms;
  {
    std::vector<int> p(rank);
    for (int i = 0; i < rank; ++i) p[i] = i;
    do {
      perms.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
  }
  auto psign = [](const std::vector<int>& p) {
    int s = 1;
    auto q = p;
    for (std::size_t i = 1; i < q.size(); ++i)
      for (std::size_t j = i; j > 0 && q[j - 1] > q[j]; --j) {
        std::swap(q[j - 1], q[j]);
        s = -s;
      }
    return s;
  };
  for (const auto& bra : tuples)
    for (const auto& ket : tuples) {
      double acc = 0.0;
      IndexTuple pb(rank), pk(rank);
      for (const auto& ps : perms)
        for (const auto& pt : perms) {
          for (int i = 0; i < rank; ++i) {
            pb[i] = bra[ps[i]];
            pk[i] = ket[pt[i]];
          }
          acc += psign(ps) * psign(pt) * kernel(pb, pk);
        }
      const double v = prefactor * acc;
      if (v != 0.0) out.set(bra, ket, v);
    }
  return out;
}

}  // namespace

OperatorTensor heff3_reference_value(const ModelInstance& m) {
  const OperatorTensor& v2 = *m.v_of_rank(2);
  const auto core = m.ids_in(Space::core);
  const auto parts = m.particle_ids();
  auto e = [&](int id) { return m.energy(id); };
  auto kernel = [&](const IndexTuple& bra, const IndexTuple& ket) {
    const int mm = bra[0], nn = bra[1], pp = ket[0], qq = ket[1];
    double sum = 0.0;
    for (int a : core)
      for (int b : core)
        for (int s : parts)
          for (int t : parts) {
            const double d1 = e(a) + e(b) - e(t) - e(nn);
            const double d2 = e(b) + e(pp) + e(qq) - e(t) - e(nn) - e(s);
            sum += v2.coefficient({t, nn}, {b, a}) *
                   v2.coefficient({s, a}, {pp, qq}) *
                   v2.coefficient({mm, b}, {s, t}) / (d1 * d2);
          }
    return sum;
  };
  // sign -1, rule-3 weight 2, two equivalent external kets: -(1/2) sum.
  const double lam = std::pow(m.lambda, 3);
  return project_kernel(m, 2, kernel, -0.5 * lam);
}

OperatorTensor oeff2_reference_value(const ModelInstance& m) {
  const OperatorTensor& v2 = *m.v_of_rank(2);
  const OperatorTensor& o = *m.O;
  const auto core = m.ids_in(Space::core);
  const auto parts = m.particle_ids();
  auto e = [&](int id) { return m.energy(id); };
  // Tensor slots pair the two open fermion paths (n with p, m with q), which
  // is the convention under which the (-1)^(l+h) sign of the pinned
  // expression is consistent.
  auto kernel = [&](const IndexTuple& bra, const IndexTuple& ket) {
    const int nn = bra[0], mm = bra[1], pp = ket[0], qq = ket[1];
    double sum = 0.0;
    for (int a : core)
      for (int b : core)
        for (int s : parts)
          for (int t : parts) {
            const double d1 = e(a) + e(b) - e(t) - e(nn);
            const double d2 = e(b) + e(mm) - e(t) - e(s);
            sum += v2.coefficient({mm, b}, {s, t}) *
                   v2.coefficient({nn, t}, {a, b}) *
                   o.coefficient({a, s}, {pp, qq}) / (d1 * d2);
          }
    return sum;
  };
  const double lam = std::pow(m.lambda, 2);
  return project_kernel(m, 2, kernel, -0.5 * lam);
}

namespace {

GoldenResult check_heff3(const std::string& dir) {
  GoldenResult r{"heff3", false, ""};
  std::ostringstream detail;
  try {
    Diagram d = load_diagram(dir + "/golden_heff3.json");
    bool ok = true;
    if (sign_factor(d) != -1) {
      ok = false;
      detail << "sign != -1; ";
    }
    const Rational w = weight_factor(d);
    if (!(w.num == 2 && w.den == 1)) {
      ok = false;
      detail << "weight != 2; ";
    }
    const EnergyExpr c1 = cut_denominator(d, 1), c2 = cut_denominator(d, 2);
    if (!c1.matches_string("(\xCE\xB5_a+\xCE\xB5_b\xE2\x88\x92\xCE\xB5_t\xE2\x88\x92\xCE\xB5_n)")) {
      ok = false;
      detail << "cut1 " << c1.str() << "; ";
    }
    if (!c2.matches_string(
            "(\xCE\xB5_b+\xCE\xB5_p+\xCE\xB5_q\xE2\x88\x92\xCE\xB5_t\xE2\x88\x92\xCE\xB5_n\xE2\x88\x92\xCE\xB5_s)")) {
      ok = false;
      detail << "cut2 " << c2.str() << "; ";
    }
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed <= 4; ++seed) {
      const ModelInstance m = seed == 0 ? load_model(dir + "/model_golden.json")
                                        : random_model(seed, 2, 2, 2, 1);
      const DiagramValue dv = evaluate_diagram(d, m);
      worst = std::max(worst, rel_diff(dv.tensor, heff3_reference_value(m)));
    }
    detail << "max rel err vs direct loops " << worst;
    if (worst > 1e-12) ok = false;
    r.pass = ok;
  } catch (const std::exception& e) {
    detail << "exception: " << e.what();
  }
  r.detail = detail.str();
  return r;
}

GoldenResult check_oeff2(const std::string& dir) {
  GoldenResult r{"oeff2", false, ""};
  std::ostringstream detail;
  try {
    Diagram d = load_diagram(dir + "/golden_oeff2.json");
    bool ok = true;
    if (sign_factor(d) != -1) {
      ok = false;
      detail << "sign != -1; ";
    }
    const Rational w = weight_factor(d);
    if (!(w.num == 2 && w.den == 1)) {
      ok = false;
      detail << "weight != 2; ";
    }
    const EnergyExpr c1 = cut_denominator(d, 1), c2 = cut_denominator(d, 2);
    if (!c1.matches_string("(\xCE\xB5_a+\xCE\xB5_b\xE2\x88\x92\xCE\xB5_t\xE2\x88\x92\xCE\xB5_n)")) {
      ok = false;
      detail << "cut1 " << c1.str() << "; ";
    }
    if (!c2.matches_string("(\xCE\xB5_b+\xCE\xB5_m\xE2\x88\x92\xCE\xB5_t\xE2\x88\x92\xCE\xB5_s)")) {
      ok = false;
      detail << "cut2 " << c2.str() << "; ";
    }
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed <= 4; ++seed) {
      const ModelInstance m = seed == 0 ? load_model(dir + "/model_golden.json")
                                        : random_model(seed + 10, 2, 2, 2, 1);
      const DiagramValue dv = evaluate_diagram(d, m);
      worst = std::max(worst, rel_diff(dv.tensor, oeff2_reference_value(m)));
    }
    detail << "max rel err vs direct loops " << worst;
    if (worst > 1e-12) ok = false;
    r.pass = ok;
  } catch (const std::exception& e) {
    detail << "exception: " << e.what();
  }
  r.detail = detail.str();
  return r;
}

GoldenResult check_factorize6(const std::string& dir) {
  GoldenResult r{"factorize6", false, ""};
  std::ostringstream detail;
  try {
    Diagram d = load_diagram(dir + "/golden_factorize6.json");
    bool ok = true;
    if (hole_count(d) != 5 || loop_count(d) != 1 || sign_factor(d) != 1) {
      ok = false;
      detail << "sign structure l=" << loop_count(d) << " h=" << hole_count(d) << "; ";
    }
    OrderingFamily fam;
    fam.base = d;
    fam.bottom_parts = {{0}, {1}};
    fam.top_parts = {{5}, {3, 4}};
    if (fam.members().size() != 6) {
      ok = false;
      detail << "family size != 6; ";
    }
    const auto factors = factorize(fam);
    std::multiset<std::string> names;
    for (const auto& f : factors) {
      std::string n = f.name;
      if (!n.empty() && n[0] == '-') n = n.substr(1);
      names.insert(n);
    }
    const std::multiset<std::string> expected = {
        "E_noe(Va)", "E_noe(Vb)", "E_noe(VbVc)", "E_noe(Ve)", "E_noe(Vf)"};
    if (names != expected) {
      ok = false;
      detail << "factor names:";
      for (const auto& n : names) detail << " " << n;
      detail << "; ";
    }
    const auto rep = verify_factorization(fam, 100, 7);
    detail << "factorization max rel err " << rep.max_rel_error;
    if (!rep.pass) ok = false;
    r.pass = ok;
  } catch (const std::exception& e) {
    detail << "exception: " << e.what();
  }
  r.detail = detail.str();
  return r;
}

GoldenResult check_grouping(const std::string& dir) {
  GoldenResult r{"grouping", false, ""};
  std::ostringstream detail;
  try {
    const Diagram b = load_diagram(dir + "/golden_chain_pp.json");
    const Diagram c = load_diagram(dir + "/golden_chain_hp.json");
    const Diagram dd = load_diagram(dir + "/golden_chain_ph.json");
    const Diagram e = load_diagram(dir + "/golden_chain_hh.json");
    bool ok = true;

    OrderingFamily fc;
    fc.base = c;
    fc.bottom_parts = {{0}, {1}};
    OrderingFamily fd;
    fd.base = dd;
    fd.top_parts = {{1}, {2}};

    std::vector<Diagram> members = {b};
    for (auto& mm : fc.members()) members.push_back(mm);
    for (auto& mm : fd.members()) members.push_back(mm);
    members.push_back(e);

    auto groups = group_skeletons(members);
    if (groups.size() != 1 || groups[0].members.size() != 6 ||
        groups[0].classes.size() != 4) {
      ok = false;
      detail << "grouping: " << groups.size() << " groups; ";
    } else {
      const auto& g = groups[0];
      if (g.walk_notation != "(VDW)") {
        ok = false;
        detail << "walk " << g.walk_notation << "; ";
      }
      // Classes in member order: b, c, d, e.
      const std::vector<int> eta1_expect = {1, -1, -1, 1};
      const std::vector<int> eta2_expect = {-1, 1, 1, -1};
      const std::vector<std::string> notation_expect = {
          "[VDW]", "[DVW+DWV]", "[VWD+WVD]", "[WDV]"};
      const std::map<std::string, double> energies = {
          {"i", 1.7}, {"j", 1.3}, {"m", 0.0}, {"n", 0.0}};
      const std::vector<EnergyExpr> reference = {
          EnergyExpr::parse("(e_m-e_i)"), EnergyExpr::parse("(e_j-e_n)")};
      for (int k = 0; k < 4; ++k) {
        const auto& tc = g.classes[k];
        if (tc.eta1 != eta1_expect[k]) {
          ok = false;
          detail << "eta1[" << k << "]=" << tc.eta1 << "; ";
        }
        std::vector<Diagram> cls;
        for (int mi : tc.members) cls.push_back(g.members[mi]);
        const int eta2 = denominator_sign(cls, reference, energies);
        if (eta2 != eta2_expect[k]) {
          ok = false;
          detail << "eta2[" << k << "]=" << eta2 << "; ";
        }
        if (tc.ordering_notation != notation_expect[k]) {
          ok = false;
          detail << "notation[" << k << "]=" << tc.ordering_notation << "; ";
        }
      }
      // Grouped value against the combined formula (i, j over core and
      // virtual) plus the pieces with a valence particle line riding on a
      // core hole, which survive one ordering of class (c) and one of (d).
      const ModelInstance m = load_model(dir + "/model_golden.json");
      const EffectiveOperator grouped = evaluate_group(g, m);
      const OperatorTensor& v1 = *m.v_of_rank(1);
      OperatorTensor unified(1);
      std::vector<int> ij;
      for (const auto& o : m.orbitals)
        if (o.space != Space::valence) ij.push_back(o.id);
      for (int mm : m.ids_in(Space::valence))
        for (int nn : m.ids_in(Space::valence)) {
          double sum = 0.0;
          for (int i : ij)
            for (int j : ij)
              sum += v1.coefficient({mm}, {i}) * v1.coefficient({i}, {j}) *
                     v1.coefficient({j}, {nn}) /
                     ((m.energy(nn) - m.energy(j)) * (m.energy(mm) - m.energy(i)));
          for (int cc : m.ids_in(Space::core))
            for (int w : m.ids_in(Space::valence)) {
              const double d2 = m.energy(cc) * m.energy(cc);
              sum -= v1.coefficient({mm}, {cc}) * v1.coefficient({cc}, {w}) *
                     v1.coefficient({w}, {nn}) / d2;
              sum -= v1.coefficient({mm}, {w}) * v1.coefficient({w}, {cc}) *
                     v1.coefficient({cc}, {nn}) / d2;
            }
          if (sum != 0.0) unified.set({mm}, {nn}, sum);
        }
      const double err = rel_diff(grouped.tensors.at(1), unified);
      detail << "grouped vs combined formula rel err " << err;
      if (err > 1e-12) ok = false;
    }
    r.pass = ok;
  } catch (const std::exception& ex) {
    detail << "exception: " << ex.what();
  }
  r.detail = detail.str();
  return r;
}

}  // namespace

std::vector<GoldenResult> run_golden(const std::string& fixtures_dir) {
  return {check_heff3(fixtures_dir), check_oeff2(fixtures_dir),
          check_factorize6(fixtures_dir), check_grouping(fixtures_dir)};
}

}  // namespace mbdiag
