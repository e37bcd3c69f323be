#include "qdiff/rng.hpp"

namespace qdiff {

PhiloxEngine::PhiloxEngine(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

}  // namespace qdiff
