#include <sstream>

#include "pdexn/analysis.hpp"

namespace pdexn {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string action_label(const Program& p, const abstract::ContextTable& ctx, const pds::Dsg& g,
                         const pds::StackAction& a) {
  switch (a.kind) {
    case pds::StackAction::Kind::Eps: return "ε";
    case pds::StackAction::Kind::Push: return "push:" + abstract::to_string(p, ctx, g.frames[a.frame]);
    case pds::StackAction::Kind::Pop: return "pop:" + abstract::to_string(p, ctx, g.frames[a.frame]);
  }
  return "?";
}

void write_graph(std::ostream& out, const Program& p, const abstract::ContextTable& ctx, const pds::Dsg& g,
                 const std::string& prefix, const std::string& indent) {
  for (pds::NodeId n = 0; n < g.nodes.size(); ++n) {
    const auto& s = g.nodes[n];
    std::string label = p.stmt_name(s.code) + "@" + ctx.name(p, s.fp);
    out << indent << prefix << n << " [label=\"" << escape(label) << "\"";
    if (s.uncaught) out << ", shape=doubleoctagon, xlabel=\"uncaught\"";
    if (n == g.root) out << ", penwidth=2";
    out << "];\n";
  }
  for (const pds::Edge& e : g.edges) {
    out << indent << prefix << e.from << " -> " << prefix << e.to << " [label=\""
        << escape(action_label(p, ctx, g, e.action)) << "\"];\n";
  }
  for (const auto& [a, b] : g.summaries) {
    out << indent << prefix << a << " -> " << prefix << b << " [label=\"ε\", style=dashed];\n";
  }
}

}  // namespace

std::string dsg_to_dot(const Program& p, const abstract::ContextTable& contexts, const pds::Dsg& g,
                       const std::string& name) {
  std::ostringstream out;
  out << "digraph \"" << escape(name) << "\" {\n";
  out << "  node [shape=box, fontname=\"monospace\"];\n";
  write_graph(out, p, contexts, g, "n", "  ");
  out << "}\n";
  return out.str();
}

std::string emit_dot(const AnalysisResult& r) {
  const Program& p = r.machine->program();
  std::ostringstream out;
  out << "digraph dsg {\n";
  out << "  node [shape=box, fontname=\"monospace\"];\n";
  for (std::size_t i = 0; i < r.graphs.size(); ++i) {
    out << "  subgraph cluster_" << i << " {\n";
    out << "    label=\"" << escape(r.graphs[i].name) << "\";\n";
    write_graph(out, p, r.machine->contexts(), r.graphs[i].dsg, "e" + std::to_string(i) + "n", "    ");
    out << "  }\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace pdexn
