#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>

namespace isleforge {

// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based stream. The 128-bit counter is (block index, stream id), the
// 64-bit key selects the family. Streams are cheap to create, so every
// replicate and every island gets its own.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream() = default;
    RandomStream(std::uint64_t key, std::uint64_t stream_id);

    static RandomStream for_replicate(std::uint64_t master_seed, std::uint64_t replicate);

    // Independent child stream; the same id always yields the same child.
    RandomStream split(std::uint64_t id) const;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        if (pos_ >= 2) refill();
        return buf_[pos_++];
    }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe for log().
    double uniform_pos() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

    bool bit() {
        if (nbits_ == 0) {
            bits_ = (*this)();
            nbits_ = 64;
        }
        bool b = bits_ & 1u;
        bits_ >>= 1;
        --nbits_;
        return b;
    }

    double exponential(double mean = 1.0) { return -mean * std::log(uniform_pos()); }

    double normal();

private:
    void refill();

    std::uint64_t key_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buf_{};
    int pos_ = 2;
    std::uint64_t bits_ = 0;
    int nbits_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

// Poisson draw by inversion for small means, std::poisson_distribution otherwise.
std::uint64_t sample_poisson(RandomStream& rng, double mean);

} // namespace isleforge
