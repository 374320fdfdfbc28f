#include <doctest.h>

#include <cmath>
#include <random>

#include "tagrec/encoder.hpp"
#include "tagrec/errors.hpp"

using namespace tagrec;

namespace {

using Mat = std::vector<std::vector<double>>;

Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<double>(c, 0.0)); }

const double& at(const Tensor<double>& t, std::size_t r, std::size_t c) { return t.data[r * t.cols() + c]; }

Mat linear(const Mat& x, const Tensor<double>& w, const Tensor<double>& b) {
  Mat y = zeros(x.size(), w.cols());
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = b.data[j];
      for (std::size_t p = 0; p < w.rows(); ++p) s += x[i][p] * at(w, p, j);
      y[i][j] = s;
    }
  }
  return y;
}

Mat layer_norm(const Mat& x, const Tensor<double>& g, const Tensor<double>& b) {
  Mat y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = static_cast<double>(x[i].size());
    double mean = 0, var = 0;
    for (double v : x[i]) mean += v;
    mean /= n;
    for (double v : x[i]) var += (v - mean) * (v - mean);
    var /= n;
    for (std::size_t j = 0; j < x[i].size(); ++j) {
      y[i][j] = (x[i][j] - mean) / std::sqrt(var + 1e-5) * g.data[j] + b.data[j];
    }
  }
  return y;
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (x + 0.044715 * x * x * x)));
}

// Straight-line transformer encoder over the unmasked positions only.
Mat reference_encoder(const EncoderConfig& cfg, const EncoderParams<double>& p, const TokenSequence& seq) {
  const std::size_t t = seq.real_length(), d = cfg.model_dim, dh = d / cfg.heads;
  Mat h = zeros(t, d);
  for (std::size_t i = 0; i < t; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      h[i][j] = at(p.token_embedding, static_cast<std::size_t>(seq.ids[i]), j) + at(p.position_embedding, i, j);
    }
  }
  for (const auto& blk : p.blocks) {
    const Mat a = layer_norm(h, blk.ln1_gain, blk.ln1_bias);
    const Mat q = linear(a, blk.wq, blk.bq), k = linear(a, blk.wk, blk.bk), v = linear(a, blk.wv, blk.bv);
    Mat heads = zeros(t, d);
    for (std::size_t hd = 0; hd < cfg.heads; ++hd) {
      for (std::size_t i = 0; i < t; ++i) {
        std::vector<double> s(t);
        double mx = -1e300;
        for (std::size_t j = 0; j < t; ++j) {
          double dot = 0;
          for (std::size_t c = hd * dh; c < (hd + 1) * dh; ++c) dot += q[i][c] * k[j][c];
          s[j] = dot / std::sqrt(double(dh));
          mx = std::max(mx, s[j]);
        }
        double z = 0;
        for (auto& x : s) z += (x = std::exp(x - mx));
        for (std::size_t c = hd * dh; c < (hd + 1) * dh; ++c) {
          double acc = 0;
          for (std::size_t j = 0; j < t; ++j) acc += s[j] / z * v[j][c];
          heads[i][c] = acc;
        }
      }
    }
    const Mat o = linear(heads, blk.wo, blk.bo);
    for (std::size_t i = 0; i < t; ++i) for (std::size_t j = 0; j < d; ++j) h[i][j] += o[i][j];
    Mat f = linear(layer_norm(h, blk.ln2_gain, blk.ln2_bias), blk.w1, blk.b1);
    for (auto& row : f) for (auto& x : row) x = gelu(x);
    const Mat f2 = linear(f, blk.w2, blk.b2);
    for (std::size_t i = 0; i < t; ++i) for (std::size_t j = 0; j < d; ++j) h[i][j] += f2[i][j];
  }
  return layer_norm(h, p.final_ln_gain, p.final_ln_bias);
}

EncoderConfig small_config() {
  EncoderConfig cfg;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.model_dim = 8;
  cfg.ffn_dim = 12;
  cfg.max_positions = 512;
  cfg.vocab_size = 300;
  return cfg;
}

// Float init plus jitter so biases and gains are not trivially 0 and 1.
template <typename Real>
EncoderParams<Real> random_params(const EncoderConfig& cfg, std::uint64_t seed) {
  auto p = make_encoder_params<float>(cfg);
  std::mt19937_64 rng(seed);
  init_encoder_params(p, rng);
  std::normal_distribution<float> jitter(0.0f, 0.3f);
  for (auto& [name, t] : p.named_tensors("")) {
    for (auto& x : t->data) x += jitter(rng);
  }
  EncoderParams<Real> out;
  out.blocks.resize(p.blocks.size());
  auto dst = out.named_tensors("");
  const auto src = p.named_tensors("");
  for (std::size_t i = 0; i < src.size(); ++i) *dst[i].second = tensor_cast<Real>(*src[i].second);
  return out;
}

TokenSequence sequence(std::size_t real, std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TokenSequence s;
  s.ids.assign(len, Tokenizer::kPad);
  s.mask.assign(len, 0);
  for (std::size_t i = 0; i < real; ++i) {
    s.ids[i] = static_cast<TokenId>(i == 0 ? Tokenizer::kCls : i + 1 == real ? Tokenizer::kSep : rng() % 256);
    s.mask[i] = 1;
  }
  return s;
}

TokenSequence repad(const TokenSequence& s, std::size_t len) {
  TokenSequence out;
  out.ids.assign(len, Tokenizer::kPad);
  out.mask.assign(len, 0);
  for (std::size_t i = 0; i < s.real_length(); ++i) {
    out.ids[i] = s.ids[i];
    out.mask[i] = 1;
  }
  return out;
}

template <typename Real>
std::vector<Real> embed(const EncoderConfig& cfg, const EncoderParams<Real>& p, const TokenSequence& s,
                        Pooling pooling, PaddingMode mode) {
  Tape<Real> tape(false);
  return tape.value(encode_component<Real>(tape, cfg, p, nullptr, s, pooling, mode)).data;
}

}  // namespace

TEST_SUITE("encoder") {
  TEST_CASE("hidden states match a brute-force reference") {
    const auto cfg = small_config();
    const auto params = random_params<double>(cfg, 4);
    for (const auto [real, len] : {std::pair<std::size_t, std::size_t>{1, 1}, {5, 5}, {7, 20}, {12, 16}}) {
      const auto seq = sequence(real, len, real * 31 + len);
      const Mat ref = reference_encoder(cfg, params, seq);
      for (const auto mode : {PaddingMode::full, PaddingMode::trimmed}) {
        Tape<double> tape(false);
        const auto& hidden = tape.value(encoder_hidden<double>(tape, cfg, params, nullptr, seq, mode));
        CHECK(hidden.rows() == (mode == PaddingMode::full ? len : real));
        for (std::size_t i = 0; i < real; ++i) {
          for (std::size_t j = 0; j < cfg.model_dim; ++j) {
            REQUIRE(hidden.at(i, j) == doctest::Approx(ref[i][j]).epsilon(1e-10).scale(1.0));
          }
        }
      }
    }
  }

  TEST_CASE("component embeddings agree within 1e-6 when padded to 16 and 512") {
    EncoderConfig cfg;  // desk-scale default
    cfg.vocab_size = 300;
    auto params = make_encoder_params<float>(cfg);
    std::mt19937_64 rng(11);
    init_encoder_params(params, rng);
    const auto base = sequence(11, 16, 5);
    const auto long_form = repad(base, 512);
    for (const auto pooling : {Pooling::mean, Pooling::cls_first, Pooling::max}) {
      for (const auto mode : {PaddingMode::full, PaddingMode::trimmed}) {
        const auto a = embed(cfg, params, base, pooling, mode);
        const auto b = embed(cfg, params, long_form, pooling, mode);
        REQUIRE(a.size() == cfg.model_dim);
        double worst = 0;
        for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, double(std::abs(a[j] - b[j])));
        INFO("pooling " << to_string(pooling));
        CHECK(worst <= 1e-6);
      }
    }
  }

  TEST_CASE("batched encoding equals one sequence at a time") {
    const auto cfg = small_config();
    const auto params = random_params<double>(cfg, 8);
    const std::vector<TokenSequence> seqs = {sequence(4, 10, 1), sequence(9, 9, 2), sequence(2, 30, 3)};
    std::vector<const TokenSequence*> ptrs;
    for (const auto& s : seqs) ptrs.push_back(&s);
    for (const auto mode : {PaddingMode::full, PaddingMode::trimmed}) {
      Tape<double> tape(false);
      const auto& batch = tape.value(encode_components<double>(tape, cfg, params, nullptr,
                                                       std::span<const TokenSequence* const>(ptrs),
                                                       Pooling::mean, mode));
      REQUIRE(batch.rows() == 3);
      for (std::size_t s = 0; s < 3; ++s) {
        const auto one = embed(cfg, params, seqs[s], Pooling::mean, mode);
        for (std::size_t j = 0; j < cfg.model_dim; ++j) CHECK(batch.at(s, j) == doctest::Approx(one[j]).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("mean pooling averages unmasked rows only") {
    Tape<double> tape(false);
    const Var h = tape.constant(Tensor<double>({3, 2}, {1, 2, 3, 4, 100, 100}));
    const std::vector<std::uint8_t> mask = {1, 1, 0};
    CHECK(tape.value(pool(tape, h, mask, Pooling::mean)).data == std::vector<double>{2, 3});
    CHECK(tape.value(pool(tape, h, mask, Pooling::max)).data == std::vector<double>{3, 4});
    CHECK(tape.value(pool(tape, h, mask, Pooling::cls_first)).data == std::vector<double>{1, 2});
    const std::vector<std::uint8_t> none = {0, 0, 0};
    CHECK_THROWS_AS(pool(tape, h, none, Pooling::mean), UsageError);
  }

  TEST_CASE("configuration validation") {
    EncoderConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.heads = 3;  // 128 is not divisible by 3
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = EncoderConfig{};
    cfg.layers = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.max_positions = 8;
    const auto params = random_params<double>(cfg, 1);
    Tape<double> tape(false);
    CHECK_THROWS_AS(encoder_hidden<double>(tape, cfg, params, nullptr, sequence(4, 9, 1), PaddingMode::full), ConfigError);
  }

  TEST_CASE("parameter count of the default configuration") {
    EncoderConfig cfg;
    const auto p = make_encoder_params<float>(cfg);
    const std::size_t d = 128, f = 512;
    const std::size_t block = 4 * d + 4 * (d * d + d) + (d * f + f) + (f * d + d);
    CHECK(p.parameter_count() == cfg.vocab_size * d + cfg.max_positions * d + 2 * block + 2 * d);
  }
}
