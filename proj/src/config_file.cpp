// SPDX-License-Identifier: Apache-2.0
#include "mimosync/config_file.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mimosync {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
  for (std::size_t i = 0; i < line.size(); ++i)
    if (line[i] == '#' || line[i] == ';') return line.substr(0, i);
  return line;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(value);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + text +
                      "' as a number");
  }
}

long long parse_int(const std::string& key, const std::string& text) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + text +
                      "' as an integer");
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ConfigText ConfigText::parse(std::istream& is, const std::string& origin) {
  ConfigText out;
  out.origin_ = origin;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": key '" + key + "' outside any [section]");
    out.kv_[section + "." + key] = value;
  }
  return out;
}

ConfigText ConfigText::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file '" + path + "'");
  return parse(is, path);
}

bool ConfigText::has(const std::string& key) const { return kv_.count(key) > 0; }

std::string ConfigText::get_string(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end())
    throw ConfigError("missing required config key '" + key + "'" +
                      (origin_.empty() ? "" : " in " + origin_));
  return it->second;
}

std::string ConfigText::get_string(const std::string& key,
                                   const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

long long ConfigText::get_int(const std::string& key) const {
  return parse_int(key, get_string(key));
}

long long ConfigText::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

double ConfigText::get_double(const std::string& key) const {
  return parse_double(key, get_string(key));
}

double ConfigText::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

bool ConfigText::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = get_string(key);
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "': cannot parse '" + v + "' as a bool");
}

std::vector<double> ConfigText::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : split_list(get_string(key)))
    out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::vector<std::string> ConfigText::get_string_list(const std::string& key) const {
  auto out = split_list(get_string(key));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

void ConfigText::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

namespace {

const std::set<std::string> kKnownKeys = {
    "system.subcarriers", "system.tx", "system.rx", "system.cir_taps",
    "system.ste_max", "system.cp_len", "system.noise_var",
    "impairments.cfo", "impairments.sfo", "impairments.ste",
    "grid.cfo_min", "grid.cfo_max", "grid.cfo_step",
    "grid.sfo_min", "grid.sfo_max", "grid.sfo_step",
    "grid.ste_min", "grid.ste_max",
    "channel.profile", "channel.decay_db", "channel.powers",
    "run.snr_db", "run.n_trials", "run.algorithms", "run.seed",
    "run.crlb_realizations", "run.pad_offset", "run.redraw_training",
    "study.ste_a", "study.ste_b", "study.n_draws", "study.crlb_ste_variants",
};

}  // namespace

ExperimentPlan plan_from_config(const ConfigText& cfg) {
  for (const auto& [key, value] : cfg.entries())
    if (!kKnownKeys.count(key))
      throw ConfigError("unknown config key '" + key + "'");

  ExperimentPlan plan;
  plan.cfg.n = static_cast<int>(cfg.get_int("system.subcarriers"));
  plan.cfg.n_tx = static_cast<int>(cfg.get_int("system.tx"));
  plan.cfg.n_rx = static_cast<int>(cfg.get_int("system.rx"));
  plan.cfg.cir_len = static_cast<int>(cfg.get_int("system.cir_taps"));
  plan.cfg.ste_max = static_cast<int>(cfg.get_int("system.ste_max"));
  plan.cfg.cp_len = static_cast<int>(cfg.get_int("system.cp_len"));
  plan.cfg.noise_var = cfg.get_double("system.noise_var", 0.0);

  plan.truth.cfo = cfg.get_double("impairments.cfo");
  plan.truth.sfo = cfg.get_double("impairments.sfo");
  plan.truth.ste = static_cast<int>(cfg.get_int("impairments.ste"));

  plan.grid.cfo.lo = cfg.get_double("grid.cfo_min");
  plan.grid.cfo.hi = cfg.get_double("grid.cfo_max");
  plan.grid.cfo.step = cfg.get_double("grid.cfo_step");
  plan.grid.sfo.lo = cfg.get_double("grid.sfo_min");
  plan.grid.sfo.hi = cfg.get_double("grid.sfo_max");
  plan.grid.sfo.step = cfg.get_double("grid.sfo_step");
  plan.grid.ste.lo = static_cast<int>(cfg.get_int("grid.ste_min"));
  plan.grid.ste.hi = static_cast<int>(cfg.get_int("grid.ste_max"));

  const std::string profile = cfg.get_string("channel.profile", "exponential");
  if (profile == "exponential") {
    plan.profile = ChannelProfile::exponential(
        plan.cfg.cir_len, cfg.get_double("channel.decay_db", 2.0));
  } else if (profile == "uniform") {
    plan.profile = ChannelProfile::uniform(plan.cfg.cir_len);
  } else if (profile == "powers") {
    plan.profile = ChannelProfile::from_powers(
        cfg.get_double_list("channel.powers"));
  } else {
    throw ConfigError("channel.profile must be exponential, uniform or powers");
  }

  plan.snr_db = cfg.get_double_list("run.snr_db");
  plan.n_trials = static_cast<int>(cfg.get_int("run.n_trials"));
  plan.algorithms.clear();
  for (const std::string& name : cfg.get_string_list("run.algorithms"))
    plan.algorithms.push_back(algorithm_from_name(name));
  plan.seed = static_cast<std::uint64_t>(cfg.get_int("run.seed", 1));
  plan.crlb_realizations =
      static_cast<int>(cfg.get_int("run.crlb_realizations", 1000));
  plan.pad_offset = static_cast<int>(cfg.get_int("run.pad_offset", 0));
  plan.redraw_training = cfg.get_bool("run.redraw_training", false);

  plan.validate();
  return plan;
}

StudyOptions study_from_config(const ConfigText& cfg,
                               const ExperimentPlan& plan) {
  StudyOptions opts;
  opts.ste_a = static_cast<int>(cfg.get_int("study.ste_a", 0));
  opts.ste_b = static_cast<int>(cfg.get_int("study.ste_b", plan.truth.ste));
  opts.n_draws = static_cast<int>(cfg.get_int("study.n_draws", 300));
  if (cfg.has("study.crlb_ste_variants")) {
    for (double v : cfg.get_double_list("study.crlb_ste_variants"))
      opts.crlb_ste_variants.push_back(static_cast<int>(v));
  } else {
    opts.crlb_ste_variants.push_back(plan.truth.ste);
  }
  if (opts.n_draws <= 0) throw ConfigError("study.n_draws must be positive");
  return opts;
}

std::string plan_to_config(const ExperimentPlan& plan) {
  std::ostringstream os;
  os << "[system]\n";
  os << "subcarriers = " << plan.cfg.n << "\n";
  os << "tx = " << plan.cfg.n_tx << "\n";
  os << "rx = " << plan.cfg.n_rx << "\n";
  os << "cir_taps = " << plan.cfg.cir_len << "\n";
  os << "ste_max = " << plan.cfg.ste_max << "\n";
  os << "cp_len = " << plan.cfg.cp_len << "\n";
  os << "noise_var = " << format_double(plan.cfg.noise_var) << "\n";
  os << "\n[impairments]\n";
  os << "cfo = " << format_double(plan.truth.cfo) << "\n";
  os << "sfo = " << format_double(plan.truth.sfo) << "\n";
  os << "ste = " << plan.truth.ste << "\n";
  os << "\n[grid]\n";
  os << "cfo_min = " << format_double(plan.grid.cfo.lo) << "\n";
  os << "cfo_max = " << format_double(plan.grid.cfo.hi) << "\n";
  os << "cfo_step = " << format_double(plan.grid.cfo.step) << "\n";
  os << "sfo_min = " << format_double(plan.grid.sfo.lo) << "\n";
  os << "sfo_max = " << format_double(plan.grid.sfo.hi) << "\n";
  os << "sfo_step = " << format_double(plan.grid.sfo.step) << "\n";
  os << "ste_min = " << plan.grid.ste.lo << "\n";
  os << "ste_max = " << plan.grid.ste.hi << "\n";
  os << "\n[channel]\n";
  os << "profile = powers\n";
  os << "powers = ";
  for (std::size_t i = 0; i < plan.profile.tap_powers.size(); ++i) {
    if (i) os << ", ";
    os << format_double(plan.profile.tap_powers[i]);
  }
  os << "\n";
  os << "\n[run]\n";
  os << "snr_db = ";
  for (std::size_t i = 0; i < plan.snr_db.size(); ++i) {
    if (i) os << ", ";
    os << format_double(plan.snr_db[i]);
  }
  os << "\n";
  os << "n_trials = " << plan.n_trials << "\n";
  os << "algorithms = ";
  for (std::size_t i = 0; i < plan.algorithms.size(); ++i) {
    if (i) os << ", ";
    os << algorithm_name(plan.algorithms[i]);
  }
  os << "\n";
  os << "seed = " << plan.seed << "\n";
  os << "crlb_realizations = " << plan.crlb_realizations << "\n";
  os << "pad_offset = " << plan.pad_offset << "\n";
  os << "redraw_training = " << (plan.redraw_training ? "true" : "false")
     << "\n";
  return os.str();
}

ExperimentPlan load_plan(const std::string& path) {
  return plan_from_config(ConfigText::parse_file(path));
}

}  // namespace mimosync
