// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "mimosync/harness.hpp"

namespace mimosync {

// Key/value config text with [section] headers, '#' or ';' comments and
// key = value lines. Keys are addressed as "section.key".
class ConfigText {
 public:
  static ConfigText parse(std::istream& is, const std::string& origin = "");
  static ConfigText parse_file(const std::string& path);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
  std::string origin_;
};

// Extra knobs carried by the config for the bound-centric commands.
struct StudyOptions {
  int ste_a = 0;
  int ste_b = 0;
  int n_draws = 300;
  std::vector<int> crlb_ste_variants;  // defaults to the plan's true ste
};

// Plan (+ study options) from config text; unknown keys are rejected so
// typos fail loudly.
ExperimentPlan plan_from_config(const ConfigText& cfg);
StudyOptions study_from_config(const ConfigText& cfg, const ExperimentPlan& plan);

// Canonical serialization; parse(serialize(plan)) reproduces the plan
// exactly (doubles are printed round-trip precise).
std::string plan_to_config(const ExperimentPlan& plan);

ExperimentPlan load_plan(const std::string& path);

}  // namespace mimosync
