#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace vcas {

using Rng = std::mt19937_64;

// Hierarchical seed splitting: command -> session -> sample/episode. Every
// child seed depends only on its parent seed and its own tag, so sub-scopes
// can be regenerated independently.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t child);
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag);

// 64-bit FNV-1a over raw bytes.
std::uint64_t hash_bytes(const void* data, std::size_t size, std::uint64_t basis = 0xcbf29ce484222325ULL);

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace vcas
