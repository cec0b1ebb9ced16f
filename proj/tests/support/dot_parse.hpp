#pragma once

// Just enough DOT reading to count what the emitter produced: node and edge
// statements, grouped by the cluster they appear in.

#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

namespace mlfsm::testing {

struct DotEdge {
  std::string from, to, label;
};

struct DotScope {
  std::vector<std::string> nodes;
  std::vector<DotEdge> edges;
};

struct DotGraph {
  std::string name;
  DotScope top;
  std::map<std::string, DotScope> clusters;
  int open_braces = 0;  // must be 0 at end
};

inline DotGraph parse_dot(const std::string& text) {
  static const std::regex header(R"re(^\s*digraph\s+"([^"]*)"\s*\{\s*$)re");
  static const std::regex cluster(R"re(^\s*subgraph\s+"cluster_([^"]+)"\s*\{\s*$)re");
  static const std::regex edge(R"re(^\s*"([^"]+)"\s*->\s*"([^"]+)"(\s*\[(.*)\])?;\s*$)re");
  static const std::regex node(R"re(^\s*"([^"]+)"\s*(\[.*\])?;\s*$)re");
  static const std::regex label(R"re(label="((\\.|[^"\\])*)")re");

  DotGraph g;
  std::istringstream in(text);
  std::string line;
  std::string current;  // cluster id or empty
  while (std::getline(in, line)) {
    std::smatch m;
    if (std::regex_match(line, m, header)) {
      g.name = m[1];
      ++g.open_braces;
    } else if (std::regex_match(line, m, cluster)) {
      current = m[1];
      g.clusters[current];
      ++g.open_braces;
    } else if (std::regex_match(line, m, edge)) {
      DotEdge e{m[1], m[2], {}};
      std::smatch lm;
      const std::string attrs = m[4];
      if (std::regex_search(attrs, lm, label)) e.label = lm[1];
      (current.empty() ? g.top : g.clusters[current]).edges.push_back(e);
    } else if (std::regex_match(line, m, node)) {
      (current.empty() ? g.top : g.clusters[current]).nodes.push_back(m[1]);
    } else if (line.find('}') != std::string::npos) {
      --g.open_braces;
      current.clear();
    }
  }
  return g;
}

}  // namespace mlfsm::testing
