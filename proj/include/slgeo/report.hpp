#ifndef SLGEO_REPORT_HPP
#define SLGEO_REPORT_HPP

#include <chrono>
#include <cmath>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace slgeo {

inline constexpr const char* kToolName = "slgeo";
inline constexpr const char* kToolVersion = "1.0.0";

using ojson = nlohmann::ordered_json;

/// How a check compares its value with its tolerance.
enum class Relation { LessEqual, Equal, GreaterEqual };

inline const char* to_string(Relation r) {
  switch (r) {
    case Relation::LessEqual: return "<=";
    case Relation::Equal: return "==";
    case Relation::GreaterEqual: return ">=";
  }
  return "?";
}

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::LessEqual;
  /// For Equal: the expected value; |value - target| <= tolerance.
  double target = 0.0;

  [[nodiscard]] bool pass() const {
    if (std::isnan(value)) return false;
    switch (relation) {
      case Relation::LessEqual: return value <= tolerance;
      case Relation::GreaterEqual: return value >= tolerance;
      case Relation::Equal: return std::abs(value - target) <= tolerance;
    }
    return false;
  }
};

/// Machine-readable outcome of one CLI run.
class ReportEnvelope {
public:
  explicit ReportEnvelope(std::string command) : command_(std::move(command)) {}

  ojson& config() { return config_; }
  ojson& results() { return results_; }

  void check_le(std::string name, double value, double tol) {
    checks_.push_back({std::move(name), value, tol, Relation::LessEqual, 0.0});
  }
  void check_ge(std::string name, double value, double bound) {
    checks_.push_back({std::move(name), value, bound, Relation::GreaterEqual, 0.0});
  }
  void check_eq(std::string name, double value, double target, double tol = 0.0) {
    checks_.push_back({std::move(name), value, tol, Relation::Equal, target});
  }
  void add_artifact(const std::string& path) { artifacts_.push_back(path); }
  void set_elapsed(double seconds) { elapsed_ = seconds; }

  [[nodiscard]] const std::vector<Check>& checks() const { return checks_; }

  [[nodiscard]] bool pass() const {
    for (const auto& c : checks_)
      if (!c.pass()) return false;
    return true;
  }

  [[nodiscard]] std::vector<std::string> failing() const {
    std::vector<std::string> out;
    for (const auto& c : checks_)
      if (!c.pass()) out.push_back(c.name);
    return out;
  }

  [[nodiscard]] ojson to_json(bool timing) const {
    ojson j;
    j["tool"] = kToolName;
    j["version"] = kToolVersion;
    j["command"] = command_;
    j["config"] = config_.is_null() ? ojson::object() : config_;
    ojson checks = ojson::array();
    for (const auto& c : checks_) {
      ojson e;
      e["name"] = c.name;
      e["value"] = c.value;
      e["relation"] = to_string(c.relation);
      if (c.relation == Relation::Equal) e["target"] = c.target;
      e["tolerance"] = c.tolerance;
      e["pass"] = c.pass();
      checks.push_back(std::move(e));
    }
    j["checks"] = std::move(checks);
    j["results"] = results_.is_null() ? ojson::object() : results_;
    j["artifacts"] = artifacts_;
    if (timing) j["timing"] = {{"elapsed_seconds", elapsed_}};
    j["pass"] = pass();
    return j;
  }

  void write(std::ostream& os, bool timing) const { os << to_json(timing).dump(2) << '\n'; }

private:
  std::string command_;
  ojson config_;
  ojson results_;
  std::vector<Check> checks_;
  std::vector<std::string> artifacts_;
  double elapsed_ = 0.0;
};

class Stopwatch {
public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace slgeo

#endif  // SLGEO_REPORT_HPP
