#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace mg {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

/// Stream domains keep independent uses of one sample index apart.
enum class StreamTag : std::uint32_t {
    path = 0,
    stationary = 1,
    long_run = 2,
    auxiliary = 3,
};

/// Standard-normal stream keyed by (master seed, tag, sample index).
///
/// The stream is a pure function of its key: two instances with equal keys yield
/// identical sequences regardless of which thread constructs them.
class NormalStream {
public:
    NormalStream(std::uint64_t master_seed, StreamTag tag, std::uint64_t index) noexcept;

    double uniform() noexcept;  // in (0, 1), 53-bit resolution
    double normal() noexcept;
    void fill_normal(std::span<double> out) noexcept;

private:
    void refill() noexcept;

    PhiloxKey key_;
    PhiloxCounter counter_;
    PhiloxCounter block_{};
    int used_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace mg
