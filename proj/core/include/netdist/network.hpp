#pragma once

// Communication graphs, mixing matrices, K-round / Chebyshev mixing and
// dynamic-average-consensus gradient tracking.

#include "netdist/common.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace netdist {

enum class GraphKind { erdos_renyi, ring, star, grid, complete, custom };

std::string_view to_string(GraphKind kind);
GraphKind parse_graph_kind(std::string_view name);

struct GraphParams {
  double p = 0.3;  // Erdős–Rényi edge probability
  int rows = 0;    // grid dimensions; rows * cols must equal n
  int cols = 0;
};

/// Undirected simple graph on nodes [0, n). Edges are stored as (i, j) with i < j.
class Graph {
 public:
  Graph(int n, std::vector<std::pair<int, int>> edges, GraphKind kind = GraphKind::custom);

  int size() const { return n_; }
  GraphKind kind() const { return kind_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::vector<int>& neighbors(int i) const { return adjacency_[static_cast<std::size_t>(i)]; }
  int degree(int i) const { return static_cast<int>(neighbors(i).size()); }
  bool has_edge(int i, int j) const;
  /// Breadth-first reachability from node 0.
  bool connected() const;

 private:
  int n_;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adjacency_;
  GraphKind kind_;
};

/// Builds a connected graph. Erdős–Rényi draws are retried with sub-seed
/// seed + attempt for up to 1000 attempts.
Graph build_graph(GraphKind kind, int n, const GraphParams& params, std::uint64_t seed);

constexpr double kStochasticTol = 1e-12;

/// Doubly stochastic n×n matrix together with its mixing rate
/// alpha0 = ||W - (1/n) 11^T||.
class MixingMatrix {
 public:
  /// Validates double stochasticity (and edge support when a graph is given).
  /// Matrices with alpha0 >= 1 are degenerate (disconnected) and rejected.
  static MixingMatrix from_matrix(Matrix weights, const Graph* graph = nullptr);

  const Matrix& weights() const { return weights_; }
  double alpha0() const { return alpha0_; }
  int size() const { return static_cast<int>(weights_.rows()); }
  bool symmetric() const { return symmetric_; }

 private:
  MixingMatrix(Matrix w, double alpha0, bool symmetric)
      : weights_(std::move(w)), alpha0_(alpha0), symmetric_(symmetric) {}

  Matrix weights_;
  double alpha0_;
  bool symmetric_;
};

/// Metropolis–Hastings weights w_ij = 1 / (1 + max(deg_i, deg_j)).
MixingMatrix metropolis_weights(const Graph& graph);

/// Symmetric edge weights minimizing ||W - (1/n) 11^T|| (fastest distributed
/// linear averaging), found by projected-free subgradient descent on the edge
/// weights from the Metropolis start. Weights may be negative. The result is
/// never slower than Metropolis.
MixingMatrix fdla_weights(const Graph& graph, int iterations = 3000);

/// Smallest theta in [0, 1) such that theta I + (1 - theta) W has every
/// diagonal entry >= min_diag.
double s_mixing_theta(const MixingMatrix& w, double min_diag = 0.1);
MixingMatrix s_mixing_matrix(const MixingMatrix& w, double min_diag = 0.1);

/// Spectral norm of W - (1/n) 11^T. Throws ValidationError unless W is
/// doubly stochastic. A value of 1 flags a degenerate (disconnected) matrix.
double mixing_rate(const Matrix& w);
inline bool degenerate_rate(double alpha0) { return alpha0 >= 1.0 - 1e-12; }

/// One round of neighbor averaging: row j = sum_i w_ji * row i.
Stack mix(const MixingMatrix& w, const Stack& v);

enum class MixingMode { plain, chebyshev };

std::string_view to_string(MixingMode mode);
MixingMode parse_mixing_mode(std::string_view name);

struct Mixed {
  Stack stack;
  int rounds = 0;
};

/// K communication rounds. Plain mode applies W^K; Chebyshev mode applies
/// P_K(W) = T_K(W / alpha0) / T_K(1 / alpha0).
Mixed mix_rounds(const MixingMatrix& w, MixingMode mode, int rounds, const Stack& v);

/// Contraction factor of the disagreement component after K rounds:
/// alpha0^K (plain) or 1 / T_K(1 / alpha0) (Chebyshev).
double effective_rate(double alpha0, MixingMode mode, int rounds);

/// How each iteration communicates: x/y mixed with `x_matrix`, the tracked
/// gradients with `s_matrix`.
struct MixingScheme {
  MixingMode mode = MixingMode::plain;
  int rounds = 1;
  MixingMatrix x_matrix;
  MixingMatrix s_matrix;

  /// Both vectors mixed with the same matrix.
  static MixingScheme uniform(const MixingMatrix& w, int rounds = 1,
                              MixingMode mode = MixingMode::plain);
  /// s-vectors mixed with s_mixing_matrix(w).
  static MixingScheme with_s_matrix(const MixingMatrix& w, int rounds = 1,
                                    MixingMode mode = MixingMode::plain);

  double alpha() const { return effective_rate(x_matrix.alpha0(), mode, rounds); }
};

/// Dynamic average consensus: mix_rounds(s_matrix, s_prev) + g_new - g_old.
/// Column sums of the result equal those of s_prev + g_new - g_old.
Stack track_update(const MixingScheme& scheme, const Stack& s_prev, const Stack& g_new,
                   const Stack& g_old);

/// ||V - 1 ⊗ mean(V)||_F.
double consensus_error(const Stack& v);

/// Row vector of column means.
Vector column_mean(const Stack& v);

// CSV mixing matrices: n rows of n comma-separated decimals.
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

// Edge lists: one "i j" pair per line.
Graph read_edge_list(const std::filesystem::path& path, int n = 0);
void write_edge_list(const std::filesystem::path& path, const Graph& graph);

}  // namespace netdist
