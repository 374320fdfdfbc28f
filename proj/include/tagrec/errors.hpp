#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tagrec {

// Caller violated an operation's precondition (wrong k, wrong component set, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A setting is out of range or inconsistent with another setting.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An input artifact (corpus, vocabulary, tokenizer, ...) is missing or malformed.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class XmlParseError : public std::runtime_error {
 public:
  XmlParseError(std::uint64_t offset, const std::string& what)
      : std::runtime_error("XML parse error at byte " + std::to_string(offset) + ": " + what),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace tagrec
