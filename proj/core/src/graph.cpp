#include "netdist/network.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <random>
#include <set>
#include <sstream>

namespace netdist {

std::string_view to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::erdos_renyi: return "erdos_renyi";
    case GraphKind::ring: return "ring";
    case GraphKind::star: return "star";
    case GraphKind::grid: return "grid";
    case GraphKind::complete: return "complete";
    case GraphKind::custom: return "custom";
  }
  return "custom";
}

GraphKind parse_graph_kind(std::string_view name) {
  if (name == "erdos_renyi" || name == "er") return GraphKind::erdos_renyi;
  if (name == "ring") return GraphKind::ring;
  if (name == "star") return GraphKind::star;
  if (name == "grid") return GraphKind::grid;
  if (name == "complete") return GraphKind::complete;
  if (name == "custom" || name == "file") return GraphKind::custom;
  throw ConfigError("unknown graph kind '" + std::string(name) + "'");
}

Graph::Graph(int n, std::vector<std::pair<int, int>> edges, GraphKind kind)
    : n_(n), kind_(kind) {
  if (n < 1) throw ConfigError("graph needs at least one node");
  std::set<std::pair<int, int>> unique;
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw ValidationError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                            ") out of range for n=" + std::to_string(n));
    if (i == j) throw ValidationError("self-loop at node " + std::to_string(i));
    unique.insert({std::min(i, j), std::max(i, j)});
  }
  edges_.assign(unique.begin(), unique.end());
  adjacency_.resize(static_cast<std::size_t>(n));
  for (auto [i, j] : edges_) {
    adjacency_[static_cast<std::size_t>(i)].push_back(j);
    adjacency_[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
}

bool Graph::has_edge(int i, int j) const {
  const auto& nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

bool Graph::connected() const {
  std::vector<char> seen(static_cast<std::size_t>(n_), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : neighbors(u)) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        ++count;
        q.push(v);
      }
    }
  }
  return count == n_;
}

namespace {

std::vector<std::pair<int, int>> erdos_renyi_edges(int n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng)) edges.emplace_back(i, j);
  return edges;
}

}  // namespace

Graph build_graph(GraphKind kind, int n, const GraphParams& params, std::uint64_t seed) {
  if (n < 2) throw ConfigError("graph needs n >= 2, got " + std::to_string(n));
  std::vector<std::pair<int, int>> edges;
  switch (kind) {
    case GraphKind::erdos_renyi: {
      if (!(params.p > 0.0 && params.p <= 1.0))
        throw ConfigError("erdos_renyi needs 0 < p <= 1");
      constexpr int kMaxAttempts = 1000;
      for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Graph g(n, erdos_renyi_edges(n, params.p, seed + static_cast<std::uint64_t>(attempt)),
                GraphKind::erdos_renyi);
        if (g.connected()) return g;
      }
      throw ConfigError("no connected erdos_renyi graph after 1000 attempts (n=" +
                        std::to_string(n) + ", p=" + std::to_string(params.p) + ")");
    }
    case GraphKind::ring:
      for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
      break;
    case GraphKind::star:
      for (int i = 1; i < n; ++i) edges.emplace_back(0, i);
      break;
    case GraphKind::grid: {
      const int r = params.rows, c = params.cols;
      if (r < 1 || c < 1 || r * c != n)
        throw ConfigError("grid dims " + std::to_string(r) + "x" + std::to_string(c) +
                          " do not match n=" + std::to_string(n));
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) {
          int u = i * c + j;
          if (j + 1 < c) edges.emplace_back(u, u + 1);
          if (i + 1 < r) edges.emplace_back(u, u + c);
        }
      break;
    }
    case GraphKind::complete:
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) edges.emplace_back(i, j);
      break;
    case GraphKind::custom:
      throw ConfigError("custom graphs are read from an edge list");
  }
  return Graph(n, std::move(edges), kind);
}

Graph read_edge_list(const std::filesystem::path& path, int n) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open edge list '" + path.string() + "'");
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int lineno = 0, max_node = -1;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    int i, j;
    if (!(ss >> i)) continue;  // blank
    if (!(ss >> j)) throw ParseError("expected 'i j' in edge list", lineno);
    std::string rest;
    if (ss >> rest) throw ParseError("trailing token '" + rest + "' in edge list", lineno);
    edges.emplace_back(i, j);
    max_node = std::max({max_node, i, j});
  }
  if (n <= 0) n = max_node + 1;
  Graph g(n, std::move(edges), GraphKind::custom);
  if (!g.connected()) throw ValidationError("edge list graph is not connected");
  return g;
}

void write_edge_list(const std::filesystem::path& path, const Graph& graph) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (auto [i, j] : graph.edges()) out << i << ' ' << j << '\n';
}

}  // namespace netdist
