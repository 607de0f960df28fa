#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace retina::cli {

// Exit status: 0 success, 1 runtime failure, 2 usage error.
int run(int argc, char** argv);

// Seed fan-out from the single --seed flag.
inline std::uint64_t fold_seed(std::uint64_t seed) { return seed; }
inline std::uint64_t kmeans_seed(std::uint64_t seed) { return seed + 1; }
inline std::uint64_t synth_seed(std::uint64_t seed) { return seed + 2; }

// 64-bit FNV-1a, used to key the feature cache.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

// $RETINA_BENCH_CACHE, or empty when unset.
std::filesystem::path cache_dir();

}  // namespace retina::cli
