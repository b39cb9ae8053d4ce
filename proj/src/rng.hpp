#pragma once

#include <cstdint>
#include <random>

namespace odin {

// Source of randomness shared by the estimator and scheduler. Production code
// uses CryptoRandom; simulations and tests inject SeededRandom or a fake.
class RandomSource {
public:
    virtual ~RandomSource() = default;

    virtual uint64_t next_u64() = 0;

    // Uniform in [0, n), unbiased via rejection sampling.
    virtual uint32_t below(uint32_t n);

    // Uniform in [0, 1) with 53 bits of precision.
    virtual double unit();

    double uniform_ms(double upper_ms) { return unit() * upper_ms; }
};

// Kernel CSPRNG (getrandom / /dev/urandom). Throws Error{TransportUnavailable}
// if no entropy source can be opened.
class CryptoRandom final : public RandomSource {
public:
    uint64_t next_u64() override;
};

// Deterministic source for simulations.
class SeededRandom final : public RandomSource {
public:
    explicit SeededRandom(uint64_t seed) : engine_(seed) {}
    uint64_t next_u64() override { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace odin
