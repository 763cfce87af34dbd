#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pls/safe_optimizer.hpp"

namespace pls::safe {
namespace {

constexpr const char* kColumns =
    "iter,phase,R,G,y_r,y_g,true_Jr,true_Jg,safe_set_size,alpha_r,alpha_g,violation";

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_num(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("trailing characters in number '" + s + "'");
  return v;
}

}  // namespace

void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace, const TraceHeader& header) {
  for (const auto& [k, v] : header) os << "# " << k << '=' << v << '\n';
  os << kColumns << '\n';
  for (const auto& r : trace) {
    os << r.iteration << ',' << to_string(r.phase) << ',' << num(r.z.reward) << ',' << num(r.z.cost) << ','
       << num(r.y_r) << ',' << num(r.y_g) << ',' << num(r.true_jr) << ',' << num(r.true_jg) << ','
       << r.safe_set_size << ',' << num(r.alpha_r) << ',' << num(r.alpha_g) << ',' << (r.violation ? 1 : 0)
       << '\n';
  }
}

TraceFile read_trace_csv(std::istream& is) {
  TraceFile out;
  std::string line;
  std::size_t line_no = 0;
  bool seen_columns = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos && line.size() > 2) out.header[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (!seen_columns) {
      if (line != kColumns) throw std::invalid_argument("trace CSV: unexpected column header");
      seen_columns = true;
      continue;
    }
    std::vector<std::string> cells;
    std::istringstream in(line);
    for (std::string cell; std::getline(in, cell, ',');) cells.push_back(cell);
    if (cells.size() != 12)
      throw std::invalid_argument("trace CSV line " + std::to_string(line_no) + ": expected 12 fields");
    try {
      TraceRecord r;
      r.iteration = std::stoull(cells[0]);
      r.phase = parse_phase(cells[1]);
      r.z = {parse_num(cells[2]), parse_num(cells[3])};
      r.y_r = parse_num(cells[4]);
      r.y_g = parse_num(cells[5]);
      r.true_jr = parse_num(cells[6]);
      r.true_jg = parse_num(cells[7]);
      r.safe_set_size = std::stoull(cells[8]);
      r.alpha_r = parse_num(cells[9]);
      r.alpha_g = parse_num(cells[10]);
      r.violation = cells[11] == "1";
      out.records.push_back(r);
    } catch (const std::exception& e) {
      throw std::invalid_argument("trace CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!seen_columns) throw std::invalid_argument("trace CSV: missing column header");
  return out;
}

}  // namespace pls::safe
