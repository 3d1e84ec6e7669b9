#pragma once

#include <cstdint>
#include <random>

#include "adir/tensor.hpp"

namespace adir {

// splitmix64 finalizer; used for deriving independent child seeds.
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a64(const void* bytes, size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(bytes);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t stream_tag(const char* label) {
    size_t n = 0;
    while (label[n]) ++n;
    return fnv1a64(label, n);
}

inline uint64_t derive_seed(uint64_t base, uint64_t tag) { return mix64(base ^ mix64(tag)); }
inline uint64_t derive_seed(uint64_t base, const char* label, uint64_t index = 0) {
    return mix64(mix64(base ^ mix64(stream_tag(label))) + index);
}

// Seeded random stream. Normal draws use Box-Muller over explicit mt19937_64
// words so sequences are identical on every platform and standard library.
class RandomStream {
public:
    explicit RandomStream(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // uniform on (0,1), never exactly 0 or 1
    double uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    int uniform_int(int lo, int hi) { // inclusive range
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(eng_() % span);
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    ImageTensor normal_image(int h, int w, int c) {
        ImageTensor t(h, w, c);
        for (double& v : t.data) v = normal();
        return t;
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// A standard-normal tensor together with the seed that produced it.
struct NoiseDraw {
    ImageTensor values;
    uint64_t seed = 0;
};

inline NoiseDraw draw_noise(int h, int w, int c, uint64_t seed) {
    RandomStream rs(seed);
    return NoiseDraw{rs.normal_image(h, w, c), seed};
}

} // namespace adir
