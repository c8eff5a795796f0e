#include "mbdiag/fixture.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mbdiag {

namespace {

using nlohmann::ordered_json;

LineType line_type_from_string(const std::string& s) {
  if (s == "particle") return LineType::particle;
  if (s == "hole") return LineType::hole;
  if (s == "dashed") return LineType::dashed;
  if (s == "free") return LineType::free_line;
  throw std::runtime_error("unknown line type '" + s + "'");
}

const char* line_type_to_string(LineType t) {
  switch (t) {
    case LineType::particle: return "particle";
    case LineType::hole: return "hole";
    case LineType::dashed: return "dashed";
    case LineType::free_line: return "free";
  }
  return "?";
}

}  // namespace

Diagram diagram_from_json_text(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  Diagram d;
  const std::string target = j.at("target").get<std::string>();
  if (target == "heff") d.target = Target::heff;
  else if (target == "oeff") d.target = Target::oeff;
  else throw std::runtime_error("unknown target '" + target + "'");
  for (const auto& jv : j.at("vertices")) {
    Vertex v;
    const std::string kind = jv.at("kind").get<std::string>();
    if (kind == "V") v.kind = VertexKind::V;
    else if (kind == "O") v.kind = VertexKind::O;
    else throw std::runtime_error("unknown vertex kind '" + kind + "'");
    v.rank = jv.at("rank").get<int>();
    v.name = jv.value("name", "");
    if (v.name.empty())
      v.name = (v.kind == VertexKind::O ? "O" : "V") +
               std::to_string(d.vertex_count() + 1);
    d.vertices.push_back(v);
  }
  for (const auto& jl : j.at("lines")) {
    Line l;
    l.type = line_type_from_string(jl.at("type").get<std::string>());
    l.label = jl.value("label", "");
    if (jl.contains("from")) {
      l.from_vertex = jl.at("from").at(0).get<int>();
      l.from_slot = jl.at("from").at(1).get<int>();
    }
    if (jl.contains("to")) {
      l.to_vertex = jl.at("to").at(0).get<int>();
      l.to_slot = jl.at("to").at(1).get<int>();
    }
    d.lines.push_back(l);
  }
  d.effective_level = d.target == Target::heff ? d.vertex_count() + 1
                                               : d.level_of(d.o_vertex());
  d.require_valid();
  return d;
}

Diagram load_diagram(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open diagram file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return diagram_from_json_text(ss.str());
}

std::string diagram_to_json_text(const Diagram& d) {
  ordered_json j;
  j["target"] = to_string(d.target);
  ordered_json vs = ordered_json::array();
  for (const auto& v : d.vertices) {
    ordered_json jv;
    jv["kind"] = v.kind == VertexKind::V ? "V" : "O";
    jv["rank"] = v.rank;
    jv["name"] = v.name;
    vs.push_back(std::move(jv));
  }
  j["vertices"] = std::move(vs);
  ordered_json ls = ordered_json::array();
  for (const auto& l : d.lines) {
    ordered_json jl;
    jl["type"] = line_type_to_string(l.type);
    jl["label"] = l.label;
    if (l.from_vertex >= 0) jl["from"] = {l.from_vertex, l.from_slot};
    if (l.to_vertex >= 0) jl["to"] = {l.to_vertex, l.to_slot};
    ls.push_back(std::move(jl));
  }
  j["lines"] = std::move(ls);
  return j.dump(2) + "\n";
}

}  // namespace mbdiag
