#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctc {

// 64-bit FNV-1a, used for checkpoint tensor checksums and the vocab digest.
std::uint64_t fnv1a64(std::span<const std::byte> bytes);
std::uint64_t fnv1a64(std::string_view text);

std::string to_hex(std::uint64_t v);

// splitmix64 step; used to derive independent sub-seeds from one run seed.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag);

std::vector<std::string> split_csv(std::string_view text);

// Worker-thread cap: CONCAT_TEXTCLASS_THREADS if set, else hardware
// concurrency, never less than 1.
unsigned worker_threads();

double monotonic_seconds();

}  // namespace ctc
