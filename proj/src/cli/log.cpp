#include <atomic>
#include <iostream>
#include <mutex>

#include "tagrec/cli.hpp"

namespace tagrec::logging {
namespace {

std::atomic<bool> g_quiet{false};
std::mutex g_mutex;

void emit(const char* level, const std::string& event, const nlohmann::ordered_json& fields) {
  nlohmann::ordered_json line;
  line["level"] = level;
  line["event"] = event;
  if (fields.is_object()) {
    for (const auto& [k, v] : fields.items()) line[k] = v;
  }
  const std::lock_guard lock(g_mutex);
  std::cerr << line.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace) << '\n';
}

}  // namespace

void set_quiet(bool quiet) { g_quiet = quiet; }
bool quiet() { return g_quiet; }

void info(const std::string& event, const nlohmann::ordered_json& fields) {
  if (!g_quiet) emit("info", event, fields);
}

void warn(const std::string& event, const nlohmann::ordered_json& fields) {
  if (!g_quiet) emit("warn", event, fields);
}

void error(const std::string& event, const nlohmann::ordered_json& fields) {
  emit("error", event, fields);
}

}  // namespace tagrec::logging
