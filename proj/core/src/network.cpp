#include "netdist/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace netdist {

namespace {

void check_stochastic(const Matrix& w) {
  if (w.rows() != w.cols() || w.rows() == 0)
    throw ValidationError("mixing matrix must be square and non-empty");
  if (!w.allFinite()) throw ValidationError("mixing matrix has non-finite entries");
  const double rows = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
  if (rows > kStochasticTol || cols > kStochasticTol) {
    std::ostringstream msg;
    msg << "matrix is not doubly stochastic (max row-sum error " << rows
        << ", max column-sum error " << cols << ")";
    throw ValidationError(msg.str());
  }
}

bool is_symmetric(const Matrix& w) { return (w - w.transpose()).cwiseAbs().maxCoeff() == 0.0; }

double rate_unchecked(const Matrix& w, bool symmetric) {
  const auto n = w.rows();
  Matrix d = w.array() - 1.0 / static_cast<double>(n);
  if (symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(d, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Matrix> svd(d);
  return svd.singularValues()(0);
}

}  // namespace

MixingMatrix MixingMatrix::from_matrix(Matrix weights, const Graph* graph) {
  check_stochastic(weights);
  const int n = static_cast<int>(weights.rows());
  if (graph) {
    if (graph->size() != n)
      throw DimensionError("mixing matrix is " + std::to_string(n) + "x" + std::to_string(n) +
                           " but graph has " + std::to_string(graph->size()) + " nodes");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && weights(i, j) != 0.0 && !graph->has_edge(i, j))
          throw ValidationError("nonzero weight at (" + std::to_string(i) + "," +
                                std::to_string(j) + ") without an edge");
  }
  const bool sym = is_symmetric(weights);
  const double a = rate_unchecked(weights, sym);
  if (degenerate_rate(a))
    throw ValidationError("mixing rate alpha0 = 1: the matrix does not mix (disconnected graph?)");
  return MixingMatrix(std::move(weights), a, sym);
}

double mixing_rate(const Matrix& w) {
  check_stochastic(w);
  return std::min(1.0, rate_unchecked(w, is_symmetric(w)));
}

MixingMatrix metropolis_weights(const Graph& graph) {
  if (!graph.connected()) throw ValidationError("metropolis weights need a connected graph");
  const int n = graph.size();
  Matrix w = Matrix::Zero(n, n);
  for (auto [i, j] : graph.edges()) {
    const double v = 1.0 / (1.0 + std::max(graph.degree(i), graph.degree(j)));
    w(i, j) = v;
    w(j, i) = v;
  }
  for (int i = 0; i < n; ++i) w(i, i) = 1.0 - (w.row(i).sum() - w(i, i));
  return MixingMatrix::from_matrix(std::move(w), &graph);
}

namespace {

Matrix edge_weight_matrix(int n, const std::vector<std::pair<int, int>>& edges, const Vector& w) {
  Matrix m = Matrix::Identity(n, n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [i, j] = edges[e];
    m(i, j) += w(static_cast<Eigen::Index>(e));
    m(j, i) += w(static_cast<Eigen::Index>(e));
    m(i, i) -= w(static_cast<Eigen::Index>(e));
    m(j, j) -= w(static_cast<Eigen::Index>(e));
  }
  return m;
}

}  // namespace

MixingMatrix fdla_weights(const Graph& graph, int iterations) {
  if (!graph.connected()) throw ValidationError("fdla weights need a connected graph");
  const int n = graph.size();
  const auto& edges = graph.edges();
  if (edges.empty()) return metropolis_weights(graph);
  Vector w(static_cast<Eigen::Index>(edges.size()));
  for (std::size_t e = 0; e < edges.size(); ++e)
    w(static_cast<Eigen::Index>(e)) =
        1.0 / (1.0 + std::max(graph.degree(edges[e].first), graph.degree(edges[e].second)));

  const Matrix J = Matrix::Constant(n, n, 1.0 / n);
  Vector best = w;
  double best_rate = HUGE_VAL;
  Eigen::SelfAdjointEigenSolver<Matrix> es;
  Vector g(w.size());
  for (int k = 1; k <= iterations; ++k) {
    es.compute(edge_weight_matrix(n, edges, w) - J);
    const Vector& lam = es.eigenvalues();  // ascending
    const double top = lam(n - 1), bottom = -lam(0);
    const double rate = std::max(top, bottom);
    if (rate < best_rate) {
      best_rate = rate;
      best = w;
    }
    // d lambda / d w_e = -(u_i - u_j)^2 for the eigenvector u
    const Vector u = es.eigenvectors().col(top >= bottom ? n - 1 : 0);
    const double sign = top >= bottom ? -1.0 : 1.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const double diff = u(edges[e].first) - u(edges[e].second);
      g(static_cast<Eigen::Index>(e)) = sign * diff * diff;
    }
    const double gn = g.norm();
    if (gn == 0.0) break;
    w -= (0.5 / (std::sqrt(static_cast<double>(k)) * std::sqrt(static_cast<double>(n)))) * g / gn;
  }
  return MixingMatrix::from_matrix(edge_weight_matrix(n, edges, best), &graph);
}

double s_mixing_theta(const MixingMatrix& w, double min_diag) {
  const double lo = w.weights().diagonal().minCoeff();
  if (lo >= min_diag) return 0.0;
  // theta + (1 - theta) lo = min_diag for the worst row
  return (min_diag - lo) / (1.0 - lo);
}

MixingMatrix s_mixing_matrix(const MixingMatrix& w, double min_diag) {
  const double theta = s_mixing_theta(w, min_diag);
  if (theta == 0.0) return w;
  Matrix m = (1.0 - theta) * w.weights();
  m.diagonal().array() += theta;
  return MixingMatrix::from_matrix(std::move(m));
}

Stack mix(const MixingMatrix& w, const Stack& v) {
  if (v.rows() != w.size())
    throw DimensionError("stack has " + std::to_string(v.rows()) + " rows, mixing matrix " +
                         std::to_string(w.size()));
  return w.weights() * v;
}

std::string_view to_string(MixingMode mode) {
  return mode == MixingMode::plain ? "plain" : "chebyshev";
}

MixingMode parse_mixing_mode(std::string_view name) {
  if (name == "plain") return MixingMode::plain;
  if (name == "chebyshev") return MixingMode::chebyshev;
  throw ConfigError("unknown mixing mode '" + std::string(name) + "'");
}

Mixed mix_rounds(const MixingMatrix& w, MixingMode mode, int rounds, const Stack& v) {
  if (rounds < 1) throw ConfigError("mixing rounds K must be >= 1");
  if (mode == MixingMode::plain) {
    Stack out = v;
    for (int k = 0; k < rounds; ++k) out = mix(w, out);
    return {std::move(out), rounds};
  }
  const double a0 = w.alpha0();
  if (a0 == 0.0) return {mix(w, v), 1};  // W already averages exactly

  // Ratio form of the Chebyshev recurrence: q_k = T_{k-1}(1/a0) / T_k(1/a0),
  // which stays bounded where T_k itself would overflow.
  Stack prev = v;
  Stack cur = mix(w, v);
  double q = a0;
  for (int k = 1; k < rounds; ++k) {
    const double q_next = 1.0 / (2.0 / a0 - q);
    Stack next = (2.0 / a0 * q_next) * mix(w, cur) - (q * q_next) * prev;
    prev = std::move(cur);
    cur = std::move(next);
    q = q_next;
  }
  return {std::move(cur), rounds};
}

double effective_rate(double alpha0, MixingMode mode, int rounds) {
  if (rounds < 1) throw ConfigError("mixing rounds K must be >= 1");
  if (mode == MixingMode::plain) return std::pow(alpha0, rounds);
  if (alpha0 == 0.0) return 0.0;
  double q = alpha0, prod = alpha0;
  for (int k = 1; k < rounds; ++k) {
    q = 1.0 / (2.0 / alpha0 - q);
    prod *= q;
  }
  return prod;
}

MixingScheme MixingScheme::uniform(const MixingMatrix& w, int rounds, MixingMode mode) {
  if (rounds < 1) throw ConfigError("mixing rounds K must be >= 1");
  return MixingScheme{mode, rounds, w, w};
}

MixingScheme MixingScheme::with_s_matrix(const MixingMatrix& w, int rounds, MixingMode mode) {
  if (rounds < 1) throw ConfigError("mixing rounds K must be >= 1");
  return MixingScheme{mode, rounds, w, s_mixing_matrix(w)};
}

Stack track_update(const MixingScheme& scheme, const Stack& s_prev, const Stack& g_new,
                   const Stack& g_old) {
  if (g_new.rows() != s_prev.rows() || g_new.cols() != s_prev.cols() ||
      g_old.rows() != s_prev.rows() || g_old.cols() != s_prev.cols())
    throw DimensionError("track_update: stack shapes differ");
  Stack s = mix_rounds(scheme.s_matrix, scheme.mode, scheme.rounds, s_prev).stack;
  s += g_new - g_old;
  return s;
}

Vector column_mean(const Stack& v) { return v.colwise().mean().transpose(); }

double consensus_error(const Stack& v) {
  if (v.rows() == 0) return 0.0;
  return (v.rowwise() - v.colwise().mean()).norm();
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix file '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      if (b == std::string::npos) throw ParseError("empty cell in matrix csv", lineno);
      double x = 0.0;
      const char* first = cell.data() + b;
      const char* last = cell.data() + e + 1;
      auto [p, ec] = std::from_chars(first, last, x);
      if (ec != std::errc() || p != last)
        throw ParseError("bad number '" + cell.substr(b, e - b + 1) + "'", lineno);
      row.push_back(x);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError("row has " + std::to_string(row.size()) + " entries, expected " +
                           std::to_string(rows.front().size()),
                       lineno);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError("matrix file '" + path.string() + "' is empty");
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.front().size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

}  // namespace netdist
