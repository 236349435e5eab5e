#include "mrta/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mrta::scenario {

using Eigen::Index;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

std::string field_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

void expect_object(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ScenarioError(path.empty() ? "document" : path, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ScenarioError(field_path(path, key), "unknown key");
  }
}

const json& require(const json& j, const std::string& path, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(field_path(path, key), "missing required key");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ScenarioError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ScenarioError(path, "expected a finite number");
  return v;
}

double number_or(const json& j, const std::string& path, const std::string& key, double fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : number(*it, field_path(path, key));
}

VectorXd vector(const json& j, const std::string& path) {
  if (!j.is_array()) throw ScenarioError(path, "expected an array of numbers");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Index>(k)) = number(j[k], index_path(path, k));
  return v;
}

VectorXd vector_of_length(const json& j, const std::string& path, Index length, const std::string& what) {
  VectorXd v = vector(j, path);
  if (v.size() != length) {
    throw ScenarioError(path, "length " + std::to_string(v.size()) + " does not match " + what + " " +
                                  std::to_string(length));
  }
  return v;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t k = 0; k + 1 < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

AllocParams parse_params(const json& j) {
  const std::string path = "params";
  expect_object(j, path, {"C", "kappa", "delta_max", "eps_reg"});
  AllocParams p;
  p.C = number_or(j, path, "C", p.C);
  p.kappa = number_or(j, path, "kappa", p.kappa);
  p.delta_max = number_or(j, path, "delta_max", p.delta_max);
  p.eps_reg = number_or(j, path, "eps_reg", p.eps_reg);
  if (!(p.C > 0.0)) throw ScenarioError("params.C", "C must be positive");
  if (!(p.kappa > 1.0)) throw ScenarioError("params.kappa", "kappa must exceed 1");
  if (!(p.delta_max > 0.0)) throw ScenarioError("params.delta_max", "delta_max must be positive");
  if (!(p.eps_reg >= 0.0)) throw ScenarioError("params.eps_reg", "eps_reg must be non-negative");
  return p;
}

GammaSpec parse_gamma(const json& j) {
  const std::string path = "gamma";
  expect_object(j, path, {"kind", "gain"});
  GammaSpec g;
  if (auto it = j.find("kind"); it != j.end()) {
    if (!it->is_string()) throw ScenarioError("gamma.kind", "expected \"linear\" or \"cubic\"");
    const std::string kind = it->get<std::string>();
    if (kind == "linear") {
      g.kind = GammaKind::Linear;
    } else if (kind == "cubic") {
      g.kind = GammaKind::Cubic;
    } else {
      throw ScenarioError("gamma.kind", "unknown kind \"" + kind + "\", expected \"linear\" or \"cubic\"");
    }
  }
  g.gain = number_or(j, path, "gain", g.gain);
  if (!(g.gain > 0.0)) throw ScenarioError("gamma.gain", "gain must be positive");
  return g;
}

sim::Scenario from_json(const json& doc) {
  expect_object(doc, "", {"dimension", "robots", "tasks", "pi_star", "params", "gamma", "dt", "duration"});
  sim::Scenario s;

  const json& dim = require(doc, "", "dimension");
  if (!dim.is_number_integer() || dim.get<long long>() < 1) {
    throw ScenarioError("dimension", "expected a positive integer");
  }
  s.dimension = static_cast<Index>(dim.get<long long>());

  const json& tasks = require(doc, "", "tasks");
  if (!tasks.is_array() || tasks.empty()) throw ScenarioError("tasks", "expected a non-empty array");
  for (std::size_t m = 0; m < tasks.size(); ++m) {
    const std::string path = index_path("tasks", m);
    expect_object(tasks[m], path, {"type", "target", "label"});
    const json& type = require(tasks[m], path, "type");
    if (!type.is_string() || type.get<std::string>() != "goto") {
      throw ScenarioError(path + ".type", "unsupported task type, expected \"goto\"");
    }
    VectorXd target = vector_of_length(require(tasks[m], path, "target"), path + ".target", s.dimension, "dimension");
    std::string label;
    if (auto it = tasks[m].find("label"); it != tasks[m].end()) {
      if (!it->is_string()) throw ScenarioError(path + ".label", "expected a string");
      label = it->get<std::string>();
    }
    s.tasks.push_back(TaskSpec::GoToPoint(std::move(target), std::move(label)));
  }
  const Index M = s.num_tasks();

  const json& robots = require(doc, "", "robots");
  if (!robots.is_array() || robots.empty()) throw ScenarioError("robots", "expected a non-empty array");
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const std::string path = index_path("robots", i);
    expect_object(robots[i], path, {"start", "specialization"});
    sim::RobotSpec r;
    r.start = vector_of_length(require(robots[i], path, "start"), path + ".start", s.dimension, "dimension");
    r.specialization.entries = vector_of_length(require(robots[i], path, "specialization"),
                                                path + ".specialization", M, "task count");
    if ((r.specialization.entries.array() < 0.0).any()) {
      throw ScenarioError(path + ".specialization", "negative entry");
    }
    s.robots.push_back(std::move(r));
  }

  s.global.pi_star = vector_of_length(require(doc, "", "pi_star"), "pi_star", M, "task count");
  if ((s.global.pi_star.array() < 0.0).any() || (s.global.pi_star.array() > 1.0).any()) {
    throw ScenarioError("pi_star", "entries must lie in [0, 1]");
  }

  if (auto it = doc.find("params"); it != doc.end()) s.params = parse_params(*it);
  if (auto it = doc.find("gamma"); it != doc.end()) s.gamma = parse_gamma(*it);

  s.dt = number_or(doc, "", "dt", s.dt);
  if (!(s.dt > 0.0)) throw ScenarioError("dt", "dt must be positive");
  s.duration = number(require(doc, "", "duration"), "duration");
  if (!(s.duration > s.dt)) throw ScenarioError("duration", "duration must exceed dt");

  try {
    sim::validate_scenario(s);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("", e.what());
  }
  return s;
}

json to_array(const VectorXd& v) {
  json a = json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

}  // namespace

sim::Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    std::string what = e.what();
    // Drop nlohmann's "[json.exception.parse_error.101] parse error at line 1, column 2: " prefix.
    if (auto colon = what.find(": "); colon != std::string::npos) what = what.substr(colon + 2);
    throw ScenarioError("line " + std::to_string(line) + ", column " + std::to_string(column), what);
  }
  return from_json(doc);
}

sim::Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str());
}

json to_json(const sim::Scenario& s) {
  json doc;
  doc["dimension"] = s.dimension;
  doc["robots"] = json::array();
  for (const sim::RobotSpec& r : s.robots) {
    doc["robots"].push_back({{"start", to_array(r.start)}, {"specialization", to_array(r.specialization.entries)}});
  }
  doc["tasks"] = json::array();
  for (const TaskSpec& t : s.tasks) {
    doc["tasks"].push_back({{"type", "goto"}, {"target", to_array(t.target)}, {"label", t.label}});
  }
  doc["pi_star"] = to_array(s.global.pi_star);
  doc["params"] = {{"C", s.params.C},
                   {"kappa", s.params.kappa},
                   {"delta_max", s.params.delta_max},
                   {"eps_reg", s.params.eps_reg}};
  doc["gamma"] = {{"kind", to_string(s.gamma.kind)}, {"gain", s.gamma.gain}};
  doc["dt"] = s.dt;
  doc["duration"] = s.duration;
  return doc;
}

std::string serialize_scenario(const sim::Scenario& s) {
  return to_json(s).dump(2) + "\n";
}

}  // namespace mrta::scenario
