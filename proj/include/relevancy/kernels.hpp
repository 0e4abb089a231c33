#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

// Data-parallel kernels. Every OpenMP kernel has a serial twin that is kept
// as the reference the tests compare against; both must produce identical
// results regardless of thread count.
namespace relevancy::kernels {

// Sorted, deduplicated character 3-grams of an already normalized string,
// each packed as three 21-bit code points. Strings shorter than three code
// points contribute a single gram holding the whole string.
std::vector<std::uint64_t> char_trigrams(std::string_view normalized);

// |a ∩ b| / |a ∪ b| over sorted sets; two empty sets score 1.0.
double jaccard(std::span<const std::uint64_t> a,
               std::span<const std::uint64_t> b);

// Scorers run inside OpenMP regions and must not throw.
using PairScorer = std::function<double(std::size_t, std::size_t)>;

// Fills the row-major n x n matrix `out` with scorer(i, j) for i < j, mirrors
// it, and writes 1.0 on the diagonal.
void fill_symmetric_serial(std::size_t n, const PairScorer& scorer,
                           std::span<double> out);
void fill_symmetric_parallel(std::size_t n, const PairScorer& scorer,
                             std::span<double> out);

// Elementwise y = f(x_i) over an index range; the workhorse behind batch
// scoring.
void map_indices_serial(std::size_t n,
                        const std::function<double(std::size_t)>& f,
                        std::span<double> out);
void map_indices_parallel(std::size_t n,
                          const std::function<double(std::size_t)>& f,
                          std::span<double> out);

int max_threads();

}  // namespace relevancy::kernels
