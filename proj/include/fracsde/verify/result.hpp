#pragma once

#include <chrono>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace fracsde::verify {

enum class Verdict { pass, fail, unstable };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::unstable: return "unstable";
  }
  return "unknown";
}

// Machine-readable outcome of one checker.
struct CheckResult {
  std::string check_name;
  Verdict verdict = Verdict::fail;
  double implied_constant = 0.0;
  std::vector<double> worst_point;
  std::map<std::string, double> tolerances;
  double runtime = 0.0;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();

  bool passed() const { return verdict == Verdict::pass; }
};

inline nlohmann::ordered_json to_json(const CheckResult& r) {
  nlohmann::ordered_json j;
  j["check_name"] = r.check_name;
  j["verdict"] = to_string(r.verdict);
  j["implied_constant"] = r.implied_constant;
  j["worst_point"] = r.worst_point;
  j["tolerances"] = r.tolerances;
  j["runtime"] = r.runtime;
  j["details"] = r.details;
  return j;
}

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

}  // namespace fracsde::verify
