#pragma once

#include <cstdint>

namespace grf {

// Counts scalar multiplications (divisions included, additions ignored).
// Every counted routine takes a FlopCounter* and treats nullptr as "off", so
// the hot paths stay branch-cheap when no accounting is requested.
class FlopCounter {
public:
    void add(std::uint64_t n) noexcept { multiplies_ += n; }
    [[nodiscard]] std::uint64_t multiplies() const noexcept { return multiplies_; }
    void reset() noexcept { multiplies_ = 0; }

private:
    std::uint64_t multiplies_ = 0;
};

inline void count_flops(FlopCounter* counter, std::uint64_t n) noexcept {
    if (counter != nullptr) counter->add(n);
}

}  // namespace grf
