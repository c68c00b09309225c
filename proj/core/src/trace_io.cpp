#include "netdist/harness.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace netdist {

const std::vector<std::string> kTraceColumns = {"t",         "comm_rounds",   "grad_evals",
                                                "rel_gap",   "consensus_err", "tracking_err",
                                                "conv_e",    "cons_e",        "grad_e"};

namespace {

using nlohmann::json;

std::string fmt17(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON has no literal for non-finite values; they travel as strings.
std::string json_number(double v) {
  return std::isfinite(v) ? fmt17(v) : "\"" + fmt17(v) + "\"";
}

std::string quoted(const std::string& s) { return json(s).dump(); }

std::string json_meta(const MetaValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
        else if constexpr (std::is_same_v<T, long long>) return std::to_string(x);
        else if constexpr (std::is_same_v<T, double>) return json_number(x);
        else return quoted(x);
      },
      v);
}

double number_from(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
  }
  throw ParseError("trace json: expected a number", 0);
}

}  // namespace

void write_csv(std::ostream& out, const MetricsTrace& trace) {
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i) out << (i ? "," : "") << kTraceColumns[i];
  out << '\n';
  for (const auto& r : trace.rows) {
    out << r.t << ',' << r.comm_rounds << ',' << fmt17(r.grad_evals) << ',' << fmt17(r.rel_gap)
        << ',' << fmt17(r.consensus_err) << ',' << fmt17(r.tracking_err) << ',' << fmt17(r.conv_e)
        << ',' << fmt17(r.cons_e) << ',' << fmt17(r.grad_e) << '\n';
  }
}

void write_json(std::ostream& out, const MetricsTrace& trace) {
  out << "{\n  \"algorithm\": " << quoted(trace.algorithm) << ",\n  \"metadata\": {";
  for (std::size_t i = 0; i < trace.metadata.size(); ++i) {
    const auto& [k, v] = trace.metadata[i];
    out << (i ? ",\n    " : "\n    ") << quoted(k) << ": " << json_meta(v);
  }
  out << (trace.metadata.empty() ? "},\n" : "\n  },\n");
  out << "  \"columns\": [";
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i) out << (i ? ", " : "") << quoted(kTraceColumns[i]);
  out << "],\n  \"rows\": [";
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const auto& r = trace.rows[i];
    out << (i ? ",\n    " : "\n    ") << '[' << r.t << ", " << r.comm_rounds << ", "
        << json_number(r.grad_evals) << ", " << json_number(r.rel_gap) << ", "
        << json_number(r.consensus_err) << ", " << json_number(r.tracking_err) << ", "
        << json_number(r.conv_e) << ", " << json_number(r.cons_e) << ", " << json_number(r.grad_e)
        << ']';
  }
  out << (trace.rows.empty() ? "]\n}\n" : "\n  ]\n}\n");
}

void emit(const MetricsTrace& trace, const std::filesystem::path& path, const std::string& format) {
  if (format != "csv" && format != "json") throw ConfigError("unknown output format '" + format + "'");
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  if (format == "csv") write_csv(out, trace);
  else write_json(out, trace);
  out.flush();
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

MetricsTrace parse_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("trace json: ") + e.what(), 0);
  }
  MetricsTrace t;
  t.algorithm = j.value("algorithm", "");
  if (j.contains("metadata")) {
    for (const auto& [k, v] : j["metadata"].items()) {
      if (v.is_boolean()) t.metadata.emplace_back(k, v.get<bool>());
      else if (v.is_number_integer()) t.metadata.emplace_back(k, v.get<long long>());
      else if (v.is_number()) t.metadata.emplace_back(k, v.get<double>());
      else if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "nan" || s == "inf" || s == "-inf") t.metadata.emplace_back(k, number_from(v));
        else t.metadata.emplace_back(k, s);
      } else {
        throw ParseError("trace json: unsupported metadata value for '" + k + "'", 0);
      }
    }
  }
  for (const auto& row : j.at("rows")) {
    if (!row.is_array() || row.size() != kTraceColumns.size())
      throw ParseError("trace json: malformed row", 0);
    TraceRow r;
    r.t = row[0].get<int>();
    r.comm_rounds = row[1].get<long>();
    r.grad_evals = number_from(row[2]);
    r.rel_gap = number_from(row[3]);
    r.consensus_err = number_from(row[4]);
    r.tracking_err = number_from(row[5]);
    r.conv_e = number_from(row[6]);
    r.cons_e = number_from(row[7]);
    r.grad_e = number_from(row[8]);
    t.rows.push_back(r);
  }
  return t;
}

MetricsTrace read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str());
}

}  // namespace netdist
