#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace caos {

/// Purpose tags keep the pseudorandom streams drawn from one key independent.
enum class KeyStream : std::uint64_t {
    PixelShuffle = 0x5041'4958'454c'0001ULL,
    FrequencyHop = 0x484f'5050'494e'0002ULL,
    CodeRealloc = 0x434f'4445'5241'0003ULL,
    CarrierPhase = 0x5048'4153'4553'0004ULL,
    Noise = 0x4e4f'4953'4500'0005ULL,
};

/// SplitMix64 finalizer. Used to derive sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e37'79b9'7f4a'7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58'476d'1ce4'e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d0'49bb'1331'11ebULL;
    return z ^ (z >> 31);
}

/// Keyed generator: std::mt19937_64 seeded from mix64(key ^ stream ^ mix64(index)).
///
/// The engine output is fixed by the C++ standard. Standard distributions are
/// not, so bounded draws and shuffles are done here by rejection sampling; the
/// resulting permutations are identical on every conforming platform.
class KeyedRng {
public:
    KeyedRng(std::uint64_t key, KeyStream stream, std::uint64_t index = 0)
        : engine_(mix64(key ^ static_cast<std::uint64_t>(stream) ^ mix64(index))) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % bound;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Fisher-Yates permutation of {0, ..., n-1}.
    std::vector<int> permutation(int n) {
        std::vector<int> p(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
        for (int i = n - 1; i > 0; --i) {
            const auto j = static_cast<int>(below(static_cast<std::uint64_t>(i) + 1));
            std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
        }
        return p;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace caos
