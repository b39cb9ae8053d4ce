#include "rng.hpp"

#include <sys/random.h>

#include <cerrno>
#include <cstring>

#include "error.hpp"

namespace odin {

uint32_t RandomSource::below(uint32_t n) {
    if (n <= 1) return 0;
    // Rejection sampling over the largest multiple of n that fits in 64 bits.
    const uint64_t limit = UINT64_MAX - (UINT64_MAX % n + 1) % n;
    uint64_t draw;
    do {
        draw = next_u64();
    } while (draw > limit);
    return static_cast<uint32_t>(draw % n);
}

double RandomSource::unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t CryptoRandom::next_u64() {
    uint64_t value = 0;
    size_t filled = 0;
    while (filled < sizeof(value)) {
        ssize_t got = getrandom(reinterpret_cast<char*>(&value) + filled,
                                sizeof(value) - filled, 0);
        if (got < 0) {
            if (errno == EINTR) continue;
            raise(Status::TransportUnavailable,
                  std::string("getrandom failed: ") + std::strerror(errno));
        }
        filled += static_cast<size_t>(got);
    }
    return value;
}

}  // namespace odin
