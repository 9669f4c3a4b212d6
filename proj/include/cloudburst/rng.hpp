#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace cloudburst {

// Philox4x32 with 10 rounds (Salmon et al., SC'11). Stateless: the output
// block is a pure function of (counter, key).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

// 64-bit FNV-1a; used to turn stream labels into counter words.
std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t x);

// A named, indexable random substream.
//
// The value at draw index i is a pure function of (root_seed, name,
// substream, i), so interleaving draws from different streams never
// changes what any one stream produces.
class RngStream {
public:
    RngStream(std::uint64_t root_seed, std::string_view name, std::uint64_t substream = 0);

    // Uniform on [0, 1); advances the draw index by one.
    double uniform();
    // Uniform on (0, 1]; advances the draw index by one.
    double uniform_pos() { return 1.0 - uniform(); }
    // Standard normal via Box-Muller; advances the draw index by two.
    double normal();

    // Value at an arbitrary index without touching the cursor.
    double at(std::uint64_t index) const;

    std::uint64_t draw_index() const { return index_; }
    void seek(std::uint64_t index) { index_ = index; }
    std::uint64_t root_seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t index_ = 0;
};

}  // namespace cloudburst
