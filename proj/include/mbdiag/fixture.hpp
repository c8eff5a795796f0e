#pragma once

#include <string>

#include "mbdiag/diagram.hpp"

namespace mbdiag {

/// Diagram fixture files: JSON with target, vertices (bottom to top) and
/// explicitly slotted, labeled lines.
Diagram load_diagram(const std::string& path);
Diagram diagram_from_json_text(const std::string& text);
std::string diagram_to_json_text(const Diagram& d);

}  // namespace mbdiag
