#include <cmath>
#include <cstring>
#include <fstream>

#include "relevancy/errors.hpp"
#include "relevancy/kernels.hpp"
#include "relevancy/random.hpp"
#include "relevancy/synthgen.hpp"
#include "relevancy/trainer.hpp"

namespace relevancy {

HashingTokenizer::HashingTokenizer(std::size_t buckets) : buckets_(buckets) {
  if (buckets_ <= static_cast<std::size_t>(kReserved)) {
    throw ConfigError("hashing tokenizer needs more buckets than reserved ids");
  }
}

std::vector<std::int32_t> HashingTokenizer::tokenize(std::string_view text) const {
  std::vector<std::int32_t> ids;
  for (const auto& w : word_tokens(text)) {
    const std::uint64_t h = fnv1a64(w);
    ids.push_back(static_cast<std::int32_t>(
        kReserved + h % (buckets_ - static_cast<std::size_t>(kReserved))));
  }
  return ids;
}

std::vector<double> EncoderBackend::score_batch(
    std::span<const EncodedPair> pairs) const {
  std::vector<double> out(pairs.size());
  kernels::map_indices_parallel(
      pairs.size(), [&](std::size_t i) { return score(pairs[i]); }, out);
  return out;
}

std::vector<double> EncoderBackend::score_batch_serial(
    std::span<const EncodedPair> pairs) const {
  std::vector<double> out(pairs.size());
  kernels::map_indices_serial(
      pairs.size(), [&](std::size_t i) { return score(pairs[i]); }, out);
  return out;
}

struct BagOfEmbeddingsBackend::Forward {
  std::vector<std::int32_t> context_tokens;
  std::vector<std::int32_t> text_tokens;
  std::vector<double> c, t, x, pre, h;
  double z = 0;
  double p = 0;
};

BagOfEmbeddingsBackend::BagOfEmbeddingsBackend()
    : BagOfEmbeddingsBackend(Shape{}) {}

BagOfEmbeddingsBackend::BagOfEmbeddingsBackend(Shape shape)
    : shape_(shape), tokenizer_(shape.vocab) {
  if (shape_.dim == 0 || shape_.hidden == 0) {
    throw ConfigError("backend dimensions must be positive");
  }
  reset(0);
  mark_trained(false);
}

void BagOfEmbeddingsBackend::reset(std::uint64_t seed) {
  params_.assign(param_count(), 0.0);
  adam_m_.assign(param_count(), 0.0);
  adam_v_.assign(param_count(), 0.0);
  step_ = 0;
  SplitMix64 rng(mix_seed(seed, 0xE5));
  auto fill = [&](std::size_t offset, std::size_t n, double bound) {
    for (std::size_t i = 0; i < n; ++i) {
      params_[offset + i] = bound * (2.0 * rng.uniform() - 1.0);
    }
  };
  const std::size_t in = 4 * shape_.dim;
  fill(embed_offset(), shape_.vocab * shape_.dim, 0.5);
  fill(w1_offset(), shape_.hidden * in,
       std::sqrt(6.0 / static_cast<double>(in + shape_.hidden)));
  fill(w2_offset(), shape_.hidden,
       std::sqrt(6.0 / static_cast<double>(shape_.hidden + 1)));
  mark_trained(false);
}

void BagOfEmbeddingsBackend::set_parameters(std::span<const double> params) {
  if (params.size() != param_count()) {
    throw StateError("parameter vector has " + std::to_string(params.size()) +
                     " entries, expected " + std::to_string(param_count()));
  }
  params_.assign(params.begin(), params.end());
}

void BagOfEmbeddingsBackend::forward(const EncodedPair& pair, Forward& f) const {
  const std::size_t d = shape_.dim, hdim = shape_.hidden, in = 4 * d;
  f.context_tokens.clear();
  f.text_tokens.clear();
  for (std::size_t i = 0; i < pair.size(); ++i) {
    const auto id = pair.token_ids[i];
    if (id < HashingTokenizer::kReserved || pair.attention_mask[i] == 0) continue;
    (pair.segments[i] == 0 ? f.context_tokens : f.text_tokens).push_back(id);
  }
  auto pool = [&](const std::vector<std::int32_t>& toks, std::vector<double>& out) {
    out.assign(d, 0.0);
    if (toks.empty()) return;
    for (auto id : toks) {
      const double* row = &params_[embed_offset() + static_cast<std::size_t>(id) * d];
      for (std::size_t k = 0; k < d; ++k) out[k] += row[k];
    }
    const double inv = 1.0 / static_cast<double>(toks.size());
    for (auto& v : out) v *= inv;
  };
  pool(f.context_tokens, f.c);
  pool(f.text_tokens, f.t);

  f.x.resize(in);
  for (std::size_t k = 0; k < d; ++k) {
    f.x[k] = f.c[k];
    f.x[d + k] = f.t[k];
    f.x[2 * d + k] = f.c[k] * f.t[k];
    f.x[3 * d + k] = std::abs(f.c[k] - f.t[k]);
  }
  f.pre.resize(hdim);
  f.h.resize(hdim);
  f.z = params_[b2_offset()];
  for (std::size_t j = 0; j < hdim; ++j) {
    const double* w = &params_[w1_offset() + j * in];
    double s = params_[b1_offset() + j];
    for (std::size_t k = 0; k < in; ++k) s += w[k] * f.x[k];
    f.pre[j] = s;
    f.h[j] = s > 0 ? s : 0;
    f.z += params_[w2_offset() + j] * f.h[j];
  }
  f.p = 1.0 / (1.0 + std::exp(-f.z));
}

double BagOfEmbeddingsBackend::score(const EncodedPair& pair) const {
  Forward f;
  forward(pair, f);
  return f.p;
}

double BagOfEmbeddingsBackend::train_step(
    std::span<const EncodedPair* const> batch, std::span<const double> targets,
    std::span<const double> weights, double learning_rate) {
  if (batch.size() != targets.size() || batch.size() != weights.size()) {
    throw TrainingError("batch, target and weight sizes differ");
  }
  if (batch.empty()) return 0.0;
  const std::size_t d = shape_.dim, hdim = shape_.hidden, in = 4 * d;
  std::vector<double> grad(param_count(), 0.0);
  double weight_sum = 0, loss = 0;
  for (double w : weights) weight_sum += w;
  if (!(weight_sum > 0)) throw TrainingError("batch weights sum to zero");

  Forward f;
  std::vector<double> dh(hdim), dx(in);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    forward(*batch[b], f);
    const double y = targets[b], w = weights[b] / weight_sum;
    constexpr double eps = 1e-12;
    loss -= w * (y * std::log(f.p + eps) + (1 - y) * std::log(1 - f.p + eps));
    const double dz = w * (f.p - y);

    grad[b2_offset()] += dz;
    for (std::size_t j = 0; j < hdim; ++j) {
      grad[w2_offset() + j] += dz * f.h[j];
      dh[j] = f.pre[j] > 0 ? dz * params_[w2_offset() + j] : 0.0;
    }
    std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t j = 0; j < hdim; ++j) {
      if (dh[j] == 0.0) continue;
      grad[b1_offset() + j] += dh[j];
      double* gw = &grad[w1_offset() + j * in];
      const double* w1 = &params_[w1_offset() + j * in];
      for (std::size_t k = 0; k < in; ++k) {
        gw[k] += dh[j] * f.x[k];
        dx[k] += dh[j] * w1[k];
      }
    }
    auto scatter = [&](const std::vector<std::int32_t>& toks, bool is_context) {
      if (toks.empty()) return;
      const double inv = 1.0 / static_cast<double>(toks.size());
      for (auto id : toks) {
        double* g = &grad[embed_offset() + static_cast<std::size_t>(id) * d];
        for (std::size_t k = 0; k < d; ++k) {
          const double diff = f.c[k] - f.t[k];
          const double sign = diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
          const double own = is_context ? dx[k] : dx[d + k];
          const double prod = dx[2 * d + k] * (is_context ? f.t[k] : f.c[k]);
          const double absd = dx[3 * d + k] * (is_context ? sign : -sign);
          g[k] += (own + prod + absd) * inv;
        }
      }
    };
    scatter(f.context_tokens, true);
    scatter(f.text_tokens, false);
  }

  // Adam.
  ++step_;
  constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const double g = grad[i];
    adam_m_[i] = beta1 * adam_m_[i] + (1 - beta1) * g;
    adam_v_[i] = beta2 * adam_v_[i] + (1 - beta2) * g * g;
    params_[i] -= learning_rate * (adam_m_[i] / c1) /
                  (std::sqrt(adam_v_[i] / c2) + adam_eps);
  }
  return loss;
}

namespace {
constexpr char kMagic[8] = {'R', 'L', 'B', 'E', '0', '0', '0', '1'};
}

void BagOfEmbeddingsBackend::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw StateError("cannot write checkpoint " + path.string());
  const std::uint64_t header[4] = {shape_.vocab, shape_.dim, shape_.hidden,
                                   params_.size()};
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(params_.data()),
            static_cast<std::streamsize>(params_.size() * sizeof(double)));
}

void BagOfEmbeddingsBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateError("cannot read checkpoint " + path.string());
  char magic[8];
  std::uint64_t header[4];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw StateError(path.string() + " is not a bag-of-embeddings checkpoint");
  }
  Shape shape{header[0], header[1], header[2]};
  if (shape.vocab != shape_.vocab || shape.dim != shape_.dim ||
      shape.hidden != shape_.hidden) {
    *this = BagOfEmbeddingsBackend(shape);
  }
  std::vector<double> params(header[3]);
  in.read(reinterpret_cast<char*>(params.data()),
          static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!in) throw StateError("truncated checkpoint " + path.string());
  set_parameters(params);
  mark_trained(true);
}

}  // namespace relevancy
