#pragma once

#include <string>

#include "mbdiag/diagram.hpp"

namespace mbdiag {

/// Stable plain-text description (diffable).
std::string render_text(const Diagram& d);

/// Graphviz export; solid = particle/hole, dashed = valence, dotted = free.
std::string render_dot(const Diagram& d, const std::string& graph_name = "diagram");

}  // namespace mbdiag
