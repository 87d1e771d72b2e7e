#include "rfadv/rng.hpp"

#include <cmath>

namespace rfadv {

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // 1 - uniform() lies in (0, 1], keeping the log argument nonzero.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t index) {
    uint64_t h = 14695981039346656037ULL; // FNV offset basis
    auto mix_byte = [&h](uint8_t b) {
        h ^= b;
        h *= 1099511628211ULL; // FNV prime
    };
    for (char c : tag)
        mix_byte(static_cast<uint8_t>(c));
    for (int i = 0; i < 8; ++i)
        mix_byte(static_cast<uint8_t>(master >> (8 * i)));
    for (int i = 0; i < 8; ++i)
        mix_byte(static_cast<uint8_t>(index >> (8 * i)));
    // One avalanche round so adjacent (tag, index) pairs decorrelate.
    Rng r(h);
    return r.next_u64();
}

} // namespace rfadv
