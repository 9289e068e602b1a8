#pragma once

#include <cstddef>
#include <cstdint>
#include <iterator>
#include <random>
#include <string_view>
#include <utility>

namespace archbo {

/// Seed for the named substream `stream` (and optional index) of a master seed.
/// Substreams are independent of the order in which they are requested.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

/// Pseudo-random source with platform-independent draws.
///
/// The engine is std::mt19937_64; every distribution is implemented here rather
/// than through <random> distributions, whose output is implementation defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    Rng(std::uint64_t master, std::string_view stream, std::uint64_t index = 0)
        : engine_(derive_seed(master, stream, index)) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lower, double upper) { return lower + (upper - lower) * uniform(); }

    /// Uniform integer on [0, n).
    std::size_t index(std::size_t n);

    /// Standard normal via Box-Muller.
    double normal();

    template <class RandomIt>
    void shuffle(RandomIt first, RandomIt last) {
        auto n = static_cast<std::size_t>(std::distance(first, last));
        for (std::size_t i = n; i > 1; --i) {
            std::size_t j = index(i);
            using std::swap;
            swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace archbo
