#pragma once

#include <cstdint>
#include <random>

namespace gcontract {

/// Independent random stream keyed by (master seed, tag, index). The stream
/// for a given key never depends on how work is scheduled across threads.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t tag, std::uint64_t index)
    {
        std::seed_seq seq{lo(seed), hi(seed), lo(tag), hi(tag), lo(index), hi(index)};
        engine_.seed(seq);
    }

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    std::uint64_t bits() { return engine_(); }
    std::mt19937_64& engine() { return engine_; }

private:
    static std::uint32_t lo(std::uint64_t x) { return static_cast<std::uint32_t>(x); }
    static std::uint32_t hi(std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); }

    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Stream tags; one per logical consumer so streams never collide.
namespace stream_tag {
inline constexpr std::uint64_t initial_outputs = 1;
inline constexpr std::uint64_t particles = 2;
inline constexpr std::uint64_t tagged_contracts = 3;
inline constexpr std::uint64_t finite_contracts = 4;
inline constexpr std::uint64_t replication = 5;
} // namespace stream_tag

/// Child seed for replication `index` of a seeded experiment.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt, std::uint64_t index)
{
    return RngStream(seed, stream_tag::replication ^ (salt << 8), index).bits();
}

} // namespace gcontract
