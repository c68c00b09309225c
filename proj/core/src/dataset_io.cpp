#include "netdist/problem.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

namespace netdist {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view tok, int lineno) {
  tok = trim(tok);
  double x = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size())
    throw ParseError("bad number '" + std::string(tok) + "'", lineno);
  return x;
}

struct Rows {
  std::vector<double> targets;
  std::vector<std::vector<std::pair<int, double>>> features;  // (0-based index, value)
  int dim = 0;
};

Rows read_csv(std::istream& in) {
  Rows rows;
  std::string line;
  int lineno = 0;
  int width = -1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    std::vector<double> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = sv.find(',', start);
      cells.push_back(parse_double(sv.substr(start, comma - start), lineno));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (cells.size() < 2) throw ParseError("csv row needs a target and at least one feature", lineno);
    if (width < 0) width = static_cast<int>(cells.size());
    if (static_cast<int>(cells.size()) != width)
      throw ParseError("row has " + std::to_string(cells.size()) + " columns, expected " +
                           std::to_string(width),
                       lineno);
    rows.targets.push_back(cells[0]);
    std::vector<std::pair<int, double>> f;
    for (std::size_t k = 1; k < cells.size(); ++k) f.emplace_back(static_cast<int>(k - 1), cells[k]);
    rows.features.push_back(std::move(f));
  }
  rows.dim = width - 1;
  return rows;
}

Rows read_libsvm(std::istream& in) {
  Rows rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    std::vector<std::string_view> toks;
    std::size_t pos = 0;
    while (pos < sv.size()) {
      const auto b = sv.find_first_not_of(" \t", pos);
      if (b == std::string_view::npos) break;
      auto e = sv.find_first_of(" \t", b);
      if (e == std::string_view::npos) e = sv.size();
      toks.push_back(sv.substr(b, e - b));
      pos = e;
    }
    rows.targets.push_back(parse_double(toks.front(), lineno));
    std::vector<std::pair<int, double>> f;
    int last = 0;
    for (std::size_t k = 1; k < toks.size(); ++k) {
      const auto colon = toks[k].find(':');
      if (colon == std::string_view::npos)
        throw ParseError("expected idx:val, got '" + std::string(toks[k]) + "'", lineno);
      const double idx = parse_double(toks[k].substr(0, colon), lineno);
      const int i = static_cast<int>(idx);
      if (i < 1 || i != idx) throw ParseError("feature index must be a positive integer", lineno);
      if (i <= last) throw ParseError("feature indices must be increasing", lineno);
      last = i;
      f.emplace_back(i - 1, parse_double(toks[k].substr(colon + 1), lineno));
      rows.dim = std::max(rows.dim, i);
    }
    rows.features.push_back(std::move(f));
  }
  return rows;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, std::string_view format, int dim,
                     DataKind kind) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path.string() + "'");
  Rows rows;
  if (format == "csv")
    rows = read_csv(in);
  else if (format == "libsvm")
    rows = read_libsvm(in);
  else
    throw ConfigError("unknown dataset format '" + std::string(format) + "'");
  if (rows.targets.empty()) throw ValidationError("dataset '" + path.string() + "' has no rows");
  if (dim > 0) {
    if (rows.dim > dim)
      throw DimensionError("dataset has feature index " + std::to_string(rows.dim) +
                           " beyond declared dimension " + std::to_string(dim));
    if (format == "csv" && rows.dim != dim)
      throw DimensionError("csv has " + std::to_string(rows.dim) + " features, expected " +
                           std::to_string(dim));
    rows.dim = dim;
  }
  Dataset data;
  data.kind = kind;
  const auto N = static_cast<Eigen::Index>(rows.targets.size());
  data.A = Matrix::Zero(N, rows.dim);
  data.b.resize(N);
  for (Eigen::Index r = 0; r < N; ++r) {
    data.b(r) = rows.targets[static_cast<std::size_t>(r)];
    for (auto [i, v] : rows.features[static_cast<std::size_t>(r)]) data.A(r, i) = v;
  }
  if (!data.A.allFinite() || !data.b.allFinite())
    throw ValidationError("dataset has non-finite entries");
  if (kind == DataKind::binary)
    for (Eigen::Index r = 0; r < N; ++r)
      if (data.b(r) != 0.0 && data.b(r) != 1.0)
        throw ValidationError("binary labels must be 0 or 1 (row " + std::to_string(r + 1) + ")");
  return data;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data, std::string_view format) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < data.A.rows(); ++r) {
    out << data.b(r);
    for (Eigen::Index c = 0; c < data.A.cols(); ++c) {
      if (format == "csv") {
        out << ',' << data.A(r, c);
      } else if (data.A(r, c) != 0.0) {
        out << ' ' << (c + 1) << ':' << data.A(r, c);
      }
    }
    out << '\n';
  }
}

}  // namespace netdist
