#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace CLI {
class App;
class Option;
}  // namespace CLI

namespace tagrec {

// JSON-lines logging to stderr. Errors are printed even when quiet.
namespace logging {
void set_quiet(bool quiet);
bool quiet();
void info(const std::string& event, const nlohmann::ordered_json& fields = nlohmann::ordered_json::object());
void warn(const std::string& event, const nlohmann::ordered_json& fields = nlohmann::ordered_json::object());
void error(const std::string& event, const nlohmann::ordered_json& fields = nlohmann::ordered_json::object());
}  // namespace logging

struct Setting {
  std::string key;  // snake_case; the flag is --kebab-case
  nlohmann::ordered_json default_value;
  std::string help;
};

// Settings for one command: built-in defaults, overridden by a JSON config
// file, overridden by flags given on the command line.
class RunConfig {
 public:
  RunConfig(std::string command, std::vector<Setting> settings);

  // Registers one flag per setting plus --config.
  void add_to(CLI::App& app);
  // Call after parsing.
  void resolve();

  const nlohmann::ordered_json& effective() const { return effective_; }
  const std::string& command() const { return command_; }

  template <typename T>
  T get(const std::string& key) const {
    return value(key).get<T>();
  }
  std::string path(const std::string& key) const;  // non-empty or UsageError

  // Writes <dir>/<command>.config.json.
  void echo(const std::filesystem::path& dir) const;

 private:
  const nlohmann::ordered_json& value(const std::string& key) const;

  std::string command_;
  std::vector<Setting> settings_;
  std::map<std::string, std::string> raw_;
  std::map<std::string, CLI::Option*> options_;
  std::string config_file_;
  nlohmann::ordered_json effective_;
};

// Parses a flag or config value against the type of `like`.
nlohmann::ordered_json coerce(const std::string& key, const nlohmann::ordered_json& value,
                              const nlohmann::ordered_json& like);

// Entry point of the tagrec tool. Returns the process exit code: 0 on
// success, 2 for missing or invalid inputs, 1 for internal failures.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);  // args[0] is the program name

}  // namespace tagrec
