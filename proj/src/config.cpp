#include "vill/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "vill/errors.hpp"
#include "vill/format.hpp"

namespace vill {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string unquote(std::string s) {
  s = trim(std::move(s));
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw UsageError("config: '" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw UsageError("config: '" + key + "' expects a nonnegative integer, got '" + v + "'");
  }
  return out;
}

bool to_flag(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw UsageError("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::size_t> to_counts(const std::string& key, std::string v) {
  v = trim(std::move(v));
  if (!v.empty() && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<std::size_t>(to_count(key, item)));
  }
  return out;
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"alpha", [](TrainConfig& c, const std::string& k, const std::string& v) { c.alpha = to_real(k, v); }},
      {"beta", [](TrainConfig& c, const std::string& k, const std::string& v) { c.beta = to_real(k, v); }},
      {"gamma", [](TrainConfig& c, const std::string& k, const std::string& v) { c.gamma = to_real(k, v); }},
      {"enable_reweighting",
       [](TrainConfig& c, const std::string& k, const std::string& v) { c.enable_reweighting = to_flag(k, v); }},
      {"enable_rebalancing",
       [](TrainConfig& c, const std::string& k, const std::string& v) { c.enable_rebalancing = to_flag(k, v); }},
      {"alignment",
       [](TrainConfig& c, const std::string&, const std::string& v) {
         try {
           c.alignment = alignment_from_string(v);
         } catch (const ArgumentError& e) {
           throw UsageError(std::string("config: ") + e.what());
         }
       }},
      {"epochs", [](TrainConfig& c, const std::string& k, const std::string& v) { c.epochs = to_count(k, v); }},
      {"iterations_per_epoch",
       [](TrainConfig& c, const std::string& k, const std::string& v) { c.iterations_per_epoch = to_count(k, v); }},
      {"batch_size", [](TrainConfig& c, const std::string& k, const std::string& v) { c.batch_size = to_count(k, v); }},
      {"learning_rate",
       [](TrainConfig& c, const std::string& k, const std::string& v) { c.learning_rate = to_real(k, v); }},
      {"momentum", [](TrainConfig& c, const std::string& k, const std::string& v) { c.momentum = to_real(k, v); }},
      {"seed", [](TrainConfig& c, const std::string& k, const std::string& v) { c.seed = to_count(k, v); }},
      {"hidden_dims", [](TrainConfig& c, const std::string& k, const std::string& v) { c.hidden_dims = to_counts(k, v); }},
      {"worst_n_values",
       [](TrainConfig& c, const std::string& k, const std::string& v) { c.worst_n_values = to_counts(k, v); }},
  };
  return table;
}

std::string json_scalar_to_text(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) {
    std::string out;
    for (const auto& item : j) {
      if (!out.empty()) out += ',';
      out += json_scalar_to_text(item);
    }
    return out;
  }
  if (j.is_number_float()) return format_double(j.get<double>());
  return j.dump();
}

}  // namespace

void TrainConfig::validate() const {
  if (!(alpha > 0.0)) throw ArgumentError("alpha must be > 0");
  if (!(beta >= 0.0)) throw ArgumentError("beta must be >= 0");
  if (!(gamma >= 0.0)) throw ArgumentError("gamma must be >= 0");
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (iterations_per_epoch < 1) throw ArgumentError("iterations_per_epoch must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ArgumentError("momentum must be in [0, 1)");
  if (std::find(hidden_dims.begin(), hidden_dims.end(), std::size_t{0}) != hidden_dims.end()) {
    throw ArgumentError("hidden_dims entries must be >= 1");
  }
  if (worst_n_values.empty()) throw ArgumentError("worst_n_values must not be empty");
  if (std::find(worst_n_values.begin(), worst_n_values.end(), std::size_t{0}) != worst_n_values.end()) {
    throw ArgumentError("worst_n_values entries must be >= 1");
  }
}

Settings parse_settings(const std::string& text) {
  Settings out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw UsageError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw UsageError("config: JSON config must be an object");
    for (const auto& [key, value] : j.items()) out[key] = json_scalar_to_text(value);
    return out;
  }

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // '#' inside a quoted value is not a comment.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError("config line " + std::to_string(line_no) + ": empty key");
    out[key] = unquote(line.substr(eq + 1));
  }
  return out;
}

Settings read_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_settings(ss.str());
}

bool is_config_key(const std::string& key) { return setters().count(key) != 0; }

void apply_setting(TrainConfig& config, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw UsageError("config: unknown key '" + key + "'");
  it->second(config, key, trim(value));
}

Settings apply_settings(TrainConfig& config, const Settings& settings) {
  Settings rest;
  for (const auto& [key, value] : settings) {
    if (is_config_key(key)) {
      apply_setting(config, key, value);
    } else {
      rest[key] = value;
    }
  }
  return rest;
}

}  // namespace vill
