#pragma once

#include <cstdint>
#include <random>

namespace mfexp {

enum class StreamRole : std::uint64_t {
    Context = 1,
    Demand = 2,
    Features = 3,
    Perturbations = 4,
    Activations = 5,
    Policy = 6,
};

/// Seeds for one simulated day. Every (replication, day, role) triple gets its
/// own generator so that results do not depend on evaluation order or on how
/// work is spread over threads.
struct SeedSpec {
    std::uint64_t master = 20240101;
    std::uint64_t replication = 0;
    std::uint64_t day = 0;

    SeedSpec at(std::uint64_t rep, std::uint64_t t) const { return {master, rep, t}; }
    bool operator==(const SeedSpec&) const = default;
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 derive_stream(const SeedSpec& seeds, StreamRole role) {
    std::uint64_t state = seeds.master;
    std::uint64_t key = splitmix64(state);
    for (std::uint64_t part : {seeds.replication, seeds.day, static_cast<std::uint64_t>(role)}) {
        state = key ^ (part * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL);
        key = splitmix64(state);
    }
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(seeds.day), static_cast<std::uint32_t>(role)};
    return std::mt19937_64(seq);
}

}  // namespace mfexp
