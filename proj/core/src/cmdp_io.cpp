#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pls/cmdp.hpp"

namespace pls::cmdp {
namespace {

using nlohmann::json;

constexpr int kCmdpFormatVersion = 1;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

template <typename T>
T field(const json& doc, const char* key) {
  if (!doc.contains(key)) throw std::invalid_argument(std::string("CMDP file: missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("CMDP file: field '") + key + "': " + e.what());
  }
}

std::vector<std::vector<double>> table(const TabularCmdp& c, const std::vector<double>& flat) {
  std::vector<std::vector<double>> rows;
  for (int s = 0; s < c.num_states; ++s)
    rows.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(c.sa(s, 0)),
                      flat.begin() + static_cast<std::ptrdiff_t>(c.sa(s, 0) + static_cast<std::size_t>(c.num_actions)));
  return rows;
}

void fill_table(const TabularCmdp& c, const std::vector<std::vector<double>>& rows,
                std::vector<double>& flat, const char* what) {
  if (rows.size() != static_cast<std::size_t>(c.num_states))
    throw std::invalid_argument(std::string("CMDP file: '") + what + "' needs one row per state");
  for (int s = 0; s < c.num_states; ++s) {
    const auto& row = rows[static_cast<std::size_t>(s)];
    if (row.size() != static_cast<std::size_t>(c.num_actions))
      throw std::invalid_argument(std::string("CMDP file: '") + what + "' row " + std::to_string(s) +
                                  " needs one entry per action");
    for (int a = 0; a < c.num_actions; ++a) flat[c.sa(s, a)] = row[static_cast<std::size_t>(a)];
  }
}

}  // namespace

std::string format_cmdp(const TabularCmdp& c) {
  json doc;
  doc["format"] = "pls-cmdp";
  doc["version"] = kCmdpFormatVersion;
  doc["name"] = c.name;
  doc["num_states"] = c.num_states;
  doc["num_actions"] = c.num_actions;
  doc["horizon"] = c.horizon;
  doc["initial_state"] = c.initial_state;
  doc["jitter"] = c.jitter;
  json transition = json::array();
  for (int s = 0; s < c.num_states; ++s) {
    json per_action = json::array();
    for (int a = 0; a < c.num_actions; ++a) {
      json row = json::array();
      for (int n = 0; n < c.num_states; ++n) row.push_back(c.p(s, a, n));
      per_action.push_back(row);
    }
    transition.push_back(per_action);
  }
  doc["transition"] = transition;
  doc["reward"] = table(c, c.reward);
  doc["cost"] = table(c, c.cost);
  return doc.dump(2) + "\n";
}

TabularCmdp parse_cmdp(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("CMDP file: ") + e.what());
  }
  if (field<std::string>(doc, "format") != "pls-cmdp")
    throw std::invalid_argument("CMDP file: 'format' must be \"pls-cmdp\"");
  if (field<int>(doc, "version") != kCmdpFormatVersion)
    throw std::invalid_argument("CMDP file: unsupported version");

  TabularCmdp c = TabularCmdp::zeros(field<int>(doc, "num_states"), field<int>(doc, "num_actions"),
                                     field<int>(doc, "horizon"));
  if (c.num_states < 1 || c.num_actions < 1 || c.horizon < 1)
    throw std::invalid_argument("CMDP file: dimensions must be positive");
  c.name = doc.value("name", "");
  c.initial_state = field<int>(doc, "initial_state");
  c.jitter = doc.value("jitter", 0.0);

  const auto transition = field<std::vector<std::vector<std::vector<double>>>>(doc, "transition");
  if (transition.size() != static_cast<std::size_t>(c.num_states))
    throw std::invalid_argument("CMDP file: 'transition' needs one block per state");
  for (int s = 0; s < c.num_states; ++s) {
    const auto& block = transition[static_cast<std::size_t>(s)];
    if (block.size() != static_cast<std::size_t>(c.num_actions))
      throw std::invalid_argument("CMDP file: 'transition' state " + std::to_string(s) +
                                  " needs one row per action");
    for (int a = 0; a < c.num_actions; ++a) {
      const auto& row = block[static_cast<std::size_t>(a)];
      if (row.size() != static_cast<std::size_t>(c.num_states))
        throw std::invalid_argument("CMDP file: transition row (" + std::to_string(s) + ", " +
                                    std::to_string(a) + ") needs one entry per state");
      for (int n = 0; n < c.num_states; ++n) c.p(s, a, n) = row[static_cast<std::size_t>(n)];
    }
  }
  fill_table(c, field<std::vector<std::vector<double>>>(doc, "reward"), c.reward, "reward");
  fill_table(c, field<std::vector<std::vector<double>>>(doc, "cost"), c.cost, "cost");
  return c;
}

TabularCmdp load_cmdp(const std::string& path) {
  try {
    return parse_cmdp(read_file(path));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

void save_cmdp(const TabularCmdp& cmdp, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << format_cmdp(cmdp);
}

void write_dataset(std::ostream& os, const Dataset& d) {
  os << "# pls-dataset v1\n";
  os << "# seed=" << d.seed << "\n";
  os << "# behavior=" << d.behavior << "\n";
  os << "# episodes=" << d.episodes.size() << "\n";
  os << "episode t s a r g\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < d.episodes.size(); ++i) {
    const auto& steps = d.episodes[i].steps;
    for (std::size_t t = 0; t < steps.size(); ++t)
      os << i << ' ' << t << ' ' << steps[t].state << ' ' << steps[t].action << ' ' << steps[t].reward
         << ' ' << steps[t].cost << '\n';
  }
}

Dataset read_dataset(std::istream& is) {
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "seed") d.seed = std::stoull(value);
      if (key == "behavior") d.behavior = value;
      continue;
    }
    if (line.rfind("episode", 0) == 0) continue;
    std::istringstream fields(line);
    std::size_t episode = 0, t = 0;
    Step st;
    if (!(fields >> episode >> t >> st.state >> st.action >> st.reward >> st.cost))
      throw std::invalid_argument("dataset line " + std::to_string(line_no) + ": malformed step");
    if (episode == d.episodes.size()) d.episodes.emplace_back();
    if (episode + 1 != d.episodes.size() || t != d.episodes.back().steps.size())
      throw std::invalid_argument("dataset line " + std::to_string(line_no) + ": steps out of order");
    auto& ep = d.episodes.back();
    ep.steps.push_back(st);
    ep.total_reward += st.reward;
    ep.total_cost += st.cost;
  }
  return d;
}

}  // namespace pls::cmdp
