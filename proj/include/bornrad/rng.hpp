#pragma once

#include <cstdint>
#include <string_view>

namespace bornrad {

// Counter-based generator: the i-th draw is a pure function of
// (seed, purpose, i), so results do not depend on evaluation order.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::string_view purpose);

    std::uint64_t next_u64();
    double uniform();                      // [0, 1)
    double uniform(double lo, double hi);
    double normal();
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t fnv1a64(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace bornrad
