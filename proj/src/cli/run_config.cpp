#include <algorithm>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "tagrec/cli.hpp"
#include "tagrec/errors.hpp"

namespace tagrec {
namespace {

std::string flag_name(const std::string& key) {
  std::string flag = "--" + key;
  std::replace(flag.begin(), flag.end(), '_', '-');
  return flag;
}

std::string describe(const nlohmann::ordered_json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

}  // namespace

nlohmann::ordered_json coerce(const std::string& key, const nlohmann::ordered_json& value,
                              const nlohmann::ordered_json& like) {
  const auto bad = [&](const std::string& expected) {
    return ConfigError("setting '" + key + "': expected " + expected + ", got " + value.dump());
  };
  if (value.is_string() && !like.is_string()) {
    // Flag text: reinterpret as JSON so "3", "0.5" and "true" parse.
    const auto text = value.get<std::string>();
    nlohmann::ordered_json parsed;
    try {
      parsed = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::exception&) {
      throw bad(like.is_boolean() ? "true or false" : "a number");
    }
    return coerce(key, parsed, like);
  }
  if (like.is_string()) {
    if (!value.is_string()) throw bad("a string");
    return value;
  }
  if (like.is_boolean()) {
    if (!value.is_boolean()) throw bad("true or false");
    return value;
  }
  if (like.is_number_unsigned() || like.is_number_integer()) {
    if (value.is_number_unsigned()) return value;
    if (value.is_number_integer() && value.get<long long>() >= 0 && like.is_number_unsigned()) {
      return nlohmann::ordered_json(value.get<unsigned long long>());
    }
    if (value.is_number_integer() && !like.is_number_unsigned()) return value;
    throw bad(like.is_number_unsigned() ? "a non-negative integer" : "an integer");
  }
  if (like.is_number_float()) {
    if (!value.is_number()) throw bad("a number");
    return nlohmann::ordered_json(value.get<double>());
  }
  throw bad("a value of type " + std::string(like.type_name()));
}

RunConfig::RunConfig(std::string command, std::vector<Setting> settings)
    : command_(std::move(command)), settings_(std::move(settings)) {}

void RunConfig::add_to(CLI::App& app) {
  app.add_option("--config", config_file_, "JSON file of settings; flags override it");
  for (const auto& s : settings_) {
    options_[s.key] = app.add_option(flag_name(s.key), raw_[s.key], s.help)
                          ->default_str(describe(s.default_value))
                          ->type_name(s.default_value.is_string() ? "TEXT"
                                      : s.default_value.is_boolean() ? "BOOL"
                                      : s.default_value.is_number_float() ? "FLOAT"
                                                                            : "UINT");
  }
}

void RunConfig::resolve() {
  effective_ = nlohmann::ordered_json::object();
  for (const auto& s : settings_) effective_[s.key] = s.default_value;

  if (!config_file_.empty()) {
    std::ifstream in(config_file_);
    if (!in) throw ArtifactError("cannot open config file " + config_file_);
    nlohmann::ordered_json file;
    try {
      file = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ArtifactError("config file " + config_file_ + ": " + e.what());
    }
    if (!file.is_object()) throw ArtifactError("config file " + config_file_ + " must hold a JSON object");
    for (const auto& [k, v] : file.items()) {
      if (!effective_.contains(k)) {
        throw ConfigError("config file " + config_file_ + ": unknown setting '" + k + "' for " + command_);
      }
      effective_[k] = coerce(k, v, effective_[k]);
    }
  }
  for (const auto& s : settings_) {
    if (options_.at(s.key)->count() == 0) continue;
    effective_[s.key] = coerce(s.key, nlohmann::ordered_json(raw_.at(s.key)), s.default_value);
  }
}

const nlohmann::ordered_json& RunConfig::value(const std::string& key) const {
  if (!effective_.contains(key)) throw std::logic_error("no setting '" + key + "' in " + command_);
  return effective_.at(key);
}

std::string RunConfig::path(const std::string& key) const {
  auto v = get<std::string>(key);
  if (v.empty()) throw UsageError(command_ + ": " + flag_name(key) + " is required");
  return v;
}

void RunConfig::echo(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  const auto file = dir / (command_ + ".config.json");
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ArtifactError("cannot write " + file.string());
  out << effective_.dump(2) << "\n";
}

}  // namespace tagrec
