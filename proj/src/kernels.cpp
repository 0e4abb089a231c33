#include "relevancy/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdint>
#include <stdexcept>

namespace relevancy::kernels {

namespace {

// Decodes UTF-8 leniently; invalid bytes map to themselves.
std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    const auto b = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    char32_t cp = b;
    if (b >= 0xF0) {
      len = 4;
      cp = b & 0x07;
    } else if (b >= 0xE0) {
      len = 3;
      cp = b & 0x0F;
    } else if (b >= 0xC0) {
      len = 2;
      cp = b & 0x1F;
    }
    if (i + len > s.size()) {
      len = 1;
      cp = b;
    } else {
      for (std::size_t k = 1; k < len; ++k) {
        cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
      }
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::uint64_t pack(char32_t a, char32_t b, char32_t c) {
  constexpr std::uint64_t mask = (1u << 21) - 1;
  return ((std::uint64_t(a) & mask) << 42) | ((std::uint64_t(b) & mask) << 21) |
         (std::uint64_t(c) & mask);
}

}  // namespace

std::vector<std::uint64_t> char_trigrams(std::string_view normalized) {
  const auto cps = decode_utf8(normalized);
  std::vector<std::uint64_t> grams;
  if (cps.empty()) return grams;
  if (cps.size() < 3) {
    // Short strings: one gram; the high bit keeps it apart from real 3-grams.
    grams.push_back((1ULL << 63) |
                    pack(cps[0], cps.size() > 1 ? cps[1] : 0, 0));
    return grams;
  }
  grams.reserve(cps.size() - 2);
  for (std::size_t i = 0; i + 2 < cps.size(); ++i) {
    grams.push_back(pack(cps[i], cps[i + 1], cps[i + 2]));
  }
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return grams;
}

double jaccard(std::span<const std::uint64_t> a,
               std::span<const std::uint64_t> b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t i = 0, j = 0, inter = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

void fill_symmetric_serial(std::size_t n, const PairScorer& scorer,
                           std::span<double> out) {
  if (out.size() != n * n) throw std::invalid_argument("matrix size mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    out[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = scorer(i, j);
      out[i * n + j] = s;
      out[j * n + i] = s;
    }
  }
}

void fill_symmetric_parallel(std::size_t n, const PairScorer& scorer,
                             std::span<double> out) {
  if (out.size() != n * n) throw std::invalid_argument("matrix size mismatch");
  const auto rows = static_cast<std::int64_t>(n);
  // Row lengths shrink with i; dynamic scheduling keeps threads busy.
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t ii = 0; ii < rows; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    out[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = scorer(i, j);
      out[i * n + j] = s;
      out[j * n + i] = s;
    }
  }
}

void map_indices_serial(std::size_t n,
                        const std::function<double(std::size_t)>& f,
                        std::span<double> out) {
  if (out.size() != n) throw std::invalid_argument("output size mismatch");
  for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
}

void map_indices_parallel(std::size_t n,
                          const std::function<double(std::size_t)>& f,
                          std::span<double> out) {
  if (out.size() != n) throw std::invalid_argument("output size mismatch");
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    out[static_cast<std::size_t>(i)] = f(static_cast<std::size_t>(i));
  }
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace relevancy::kernels
