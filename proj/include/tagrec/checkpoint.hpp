#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "tagrec/model.hpp"

namespace tagrec {

// Binary checkpoint layout (all integers little-endian):
//
//   magic        8 bytes  "TAGRECCK"
//   version      u32      kCheckpointVersion
//   config_len   u64      length of the ModelConfig JSON that follows
//   config       bytes
//   config_hash  u64      FNV-1a of the config bytes
//   vocab_hash   u64      TagVocabulary::content_hash() of the label space
//   tensors      u64      number of parameter tensors
//   then per tensor, in ModelParams::named_tensors() order:
//     count      u64
//     values     count x IEEE-754 binary32
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, version_mismatch, truncated, config_hash_mismatch,
                    vocab_hash_mismatch, layout_mismatch };

  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

void save_checkpoint(const TagModel& model, const std::string& path);

// Restores a model saved with save_checkpoint, refusing it when it was
// trained against a different tag vocabulary.
TagModel load_checkpoint(const std::string& path, const TagVocabulary& vocab);

// Header fields only; no vocabulary check.
ModelConfig read_checkpoint_config(const std::string& path);

}  // namespace tagrec
