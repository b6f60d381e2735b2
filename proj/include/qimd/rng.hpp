#pragma once

#include <cstdint>
#include <random>

namespace qimd {

// Stream labels for deriving independent substreams from one master seed.
// Trials and settings get their own streams so that worker scheduling can
// never reorder draws.
inline constexpr std::uint64_t kTrialStream = 0x9e3779b97f4a7c15ULL;
inline constexpr std::uint64_t kSettingStream = 0xd1b54a32d192ed03ULL;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

// Counter-based substream derivation: collision-resistant mixing of
// (master, stream, index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t index) {
    std::uint64_t h = detail::splitmix64(master ^ stream);
    h = detail::splitmix64(h ^ index);
    return detail::splitmix64(h + index);
}

// Deterministic uniform source. std::mt19937_64 has a standard-mandated
// sequence; the [0,1) mapping is pinned here instead of relying on
// implementation-defined distributions.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace qimd
