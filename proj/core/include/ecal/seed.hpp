#pragma once

#include <cstdint>
#include <string_view>

namespace ecal {

// Deterministic per-stage seed derived from one top-level seed, so that every
// stage of a run draws from an independent stream.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage);

}  // namespace ecal
