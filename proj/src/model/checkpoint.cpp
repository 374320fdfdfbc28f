#include "tagrec/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "tagrec/errors.hpp"

namespace tagrec {
namespace {

constexpr std::array<char, 8> kMagic = {'T', 'A', 'G', 'R', 'E', 'C', 'C', 'K'};

template <typename UInt>
void put(std::string& out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  template <typename UInt>
  UInt get(const char* what) {
    need(sizeof(UInt), what);
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      v |= static_cast<UInt>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(UInt);
    return v;
  }

  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw CheckpointError(CheckpointError::Kind::truncated,
                            std::string("truncated checkpoint: missing ") + what);
    }
  }

  std::string bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::io, "cannot open checkpoint " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct Header {
  ModelConfig config;
  std::uint64_t vocab_hash = 0;
};

Header read_header(Reader& r) {
  const std::string magic = r.take(kMagic.size(), "magic");
  if (std::memcmp(magic.data(), kMagic.data(), kMagic.size()) != 0) {
    throw CheckpointError(CheckpointError::Kind::bad_magic, "not a tagrec checkpoint");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(CheckpointError::Kind::version_mismatch,
                          "checkpoint version " + std::to_string(version) + ", expected " +
                              std::to_string(kCheckpointVersion));
  }
  const auto config_len = r.get<std::uint64_t>("config length");
  const std::string config = r.take(config_len, "config");
  const auto config_hash = r.get<std::uint64_t>("config hash");
  if (config_hash != fnv1a64(config)) {
    throw CheckpointError(CheckpointError::Kind::config_hash_mismatch,
                          "checkpoint config hash mismatch");
  }
  Header h;
  try {
    h.config = ModelConfig::from_json(config);
  } catch (const std::exception& e) {
    throw CheckpointError(CheckpointError::Kind::layout_mismatch,
                          std::string("checkpoint config invalid: ") + e.what());
  }
  h.vocab_hash = r.get<std::uint64_t>("vocab hash");
  return h;
}

}  // namespace

void save_checkpoint(const TagModel& model, const std::string& path) {
  std::string out(kMagic.begin(), kMagic.end());
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string config = model.config().to_json();
  put<std::uint64_t>(out, config.size());
  out += config;
  put<std::uint64_t>(out, fnv1a64(config));
  put<std::uint64_t>(out, model.vocab().content_hash());
  const auto tensors = model.params().named_tensors();
  put<std::uint64_t>(out, tensors.size());
  for (const auto& [name, tensor] : tensors) {
    put<std::uint64_t>(out, tensor->size());
    for (const float v : tensor->data) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw CheckpointError(CheckpointError::Kind::io, "cannot write checkpoint " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw CheckpointError(CheckpointError::Kind::io, "write failed for " + path);
}

ModelConfig read_checkpoint_config(const std::string& path) {
  Reader r(read_file(path));
  return read_header(r).config;
}

TagModel load_checkpoint(const std::string& path, const TagVocabulary& vocab) {
  Reader r(read_file(path));
  Header header = read_header(r);
  if (header.vocab_hash != vocab.content_hash()) {
    throw CheckpointError(CheckpointError::Kind::vocab_hash_mismatch,
                          "checkpoint was trained against a different tag vocabulary");
  }
  ModelParams<float> params = make_model_params<float>(header.config);
  auto tensors = params.named_tensors();
  const auto count = r.get<std::uint64_t>("tensor count");
  if (count != tensors.size()) {
    throw CheckpointError(CheckpointError::Kind::layout_mismatch,
                          "checkpoint holds " + std::to_string(count) + " tensors, config implies " +
                              std::to_string(tensors.size()));
  }
  for (auto& [name, tensor] : tensors) {
    const auto n = r.get<std::uint64_t>("tensor size");
    if (n != tensor->size()) {
      throw CheckpointError(CheckpointError::Kind::layout_mismatch,
                            "tensor " + name + " holds " + std::to_string(n) + " values, expected " +
                                std::to_string(tensor->size()));
    }
    for (auto& v : tensor->data) v = std::bit_cast<float>(r.get<std::uint32_t>("tensor values"));
  }
  if (!r.at_end()) {
    throw CheckpointError(CheckpointError::Kind::layout_mismatch, "trailing bytes after tensors");
  }
  try {
    return TagModel(std::move(header.config), vocab, std::move(params));
  } catch (const ConfigError& e) {
    throw CheckpointError(CheckpointError::Kind::layout_mismatch, e.what());
  }
}

}  // namespace tagrec
