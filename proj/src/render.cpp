#include "mbdiag/render.hpp"

#include <sstream>

namespace mbdiag {

namespace {

const char* type_name(LineType t) {
  switch (t) {
    case LineType::particle: return "particle";
    case LineType::hole: return "hole";
    case LineType::dashed: return "dashed";
    case LineType::free_line: return "free";
  }
  return "?";
}

std::string endpoint(const Diagram& d, int vertex, int slot, bool bra) {
  if (vertex < 0) return "ext";
  std::ostringstream s;
  s << d.vertices[vertex].name << "." << (bra ? "out" : "in") << slot;
  return s.str();
}

}  // namespace

std::string render_text(const Diagram& d) {
  std::ostringstream out;
  out << to_string(d.target) << " diagram, " << d.vertex_count()
      << " vertices, effective level " << d.effective_level << "\n";
  for (int v = d.vertex_count() - 1; v >= 0; --v) {
    out << "  level " << d.level_of(v) << ": " << d.vertices[v].name << " ("
        << (d.vertices[v].kind == VertexKind::V ? "V" : "O") << ", "
        << d.vertices[v].rank << "-body)\n";
  }
  for (const auto& l : d.lines) {
    out << "  line " << l.label << " [" << type_name(l.type) << "] "
        << endpoint(d, l.from_vertex, l.from_slot, true) << " -> "
        << endpoint(d, l.to_vertex, l.to_slot, false) << "\n";
  }
  return out.str();
}

std::string render_dot(const Diagram& d, const std::string& graph_name) {
  std::ostringstream out;
  out << "digraph " << graph_name << " {\n";
  out << "  rankdir=BT;\n";
  for (int v = 0; v < d.vertex_count(); ++v) {
    out << "  v" << v << " [label=\"" << d.vertices[v].name
        << "\", shape=" << (d.vertices[v].kind == VertexKind::O ? "doublecircle" : "circle")
        << "];\n";
  }
  out << "  eff [label=\"eff\", shape=box, style=dashed];\n";
  // Same-level ranks keep the vertical order readable.
  for (int v = 0; v < d.vertex_count(); ++v) {
    if (d.target == Target::oeff && d.effective_level == d.level_of(v))
      out << "  {rank=same; v" << v << "; eff;}\n";
  }
  for (const auto& l : d.lines) {
    std::string style;
    switch (l.type) {
      case LineType::particle:
      case LineType::hole: style = "solid"; break;
      case LineType::dashed: style = "dashed"; break;
      case LineType::free_line: style = "dotted"; break;
    }
    const std::string from = l.from_vertex >= 0 ? "v" + std::to_string(l.from_vertex)
                             : l.type == LineType::dashed ? "eff"
                                                          : "ext_" + l.label;
    const std::string to = l.to_vertex >= 0 ? "v" + std::to_string(l.to_vertex)
                           : l.type == LineType::dashed ? "eff"
                                                        : "ext_" + l.label;
    if (from.rfind("ext_", 0) == 0)
      out << "  " << from << " [shape=point, label=\"\"];\n";
    if (to.rfind("ext_", 0) == 0)
      out << "  " << to << " [shape=point, label=\"\"];\n";
    out << "  " << from << " -> " << to << " [label=\"" << l.label
        << "\", style=" << style << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace mbdiag
