#include "wou/rng.hpp"

#include <cmath>
#include <numbers>

namespace wou {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) noexcept
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

} // namespace

Philox4x32::Counter Philox4x32::apply(Counter c, Key k) noexcept
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            k[0] += kW0;
            k[1] += kW1;
        }
        std::uint32_t lo0, hi0, lo1, hi1;
        mulhilo(kM0, c[0], lo0, hi0);
        mulhilo(kM1, c[2], lo1, hi1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
    return c;
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream)
{
}

void NormalStream::refill() noexcept
{
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    bits_ = Philox4x32::apply(ctr, key_);
    ++block_;
    used_bits_ = 0;
}

double NormalStream::uniform() noexcept
{
    if (used_bits_ > 2) refill();
    const std::uint64_t hi = bits_[used_bits_];
    const std::uint64_t lo = bits_[used_bits_ + 1];
    used_bits_ += 2;
    const std::uint64_t x = (hi << 32) | lo;
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

double NormalStream::next() noexcept
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform(); // (0,1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ull; // FNV-1a
    for (unsigned char ch : label) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return splitmix64(parent ^ splitmix64(h));
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept
{
    return splitmix64(parent ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

} // namespace wou
