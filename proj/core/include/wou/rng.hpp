#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace wou {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;
    static Counter apply(Counter ctr, Key key) noexcept;
};

// Standard normals for one logical stream, identified by (seed, stream).
// Draw k of a stream is a pure function of (seed, stream, k), so per-path
// streams give results independent of scheduling and thread count.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t stream) noexcept;
    double next() noexcept;
    // Uniform on [0,1).
    double uniform() noexcept;

private:
    void refill() noexcept;
    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> bits_{};
    int used_bits_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Child seed from a parent seed and a label, e.g. a report row key.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept;
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

} // namespace wou
