#include "a2v/rng.hpp"

#include <cmath>

namespace a2v {

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

Rng Rng::stream(uint64_t seed, std::string_view name, uint64_t index) {
    uint64_t h = fnv1a64(name);
    // splitmix-style finalizer keeps nearby (seed, index) pairs uncorrelated
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1) + h;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    return Rng(z);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

int Rng::uniform_int(int n) {
    // rejection below the largest multiple of n that fits in 64 bits
    uint64_t un = static_cast<uint64_t>(n);
    uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x = eng_();
    while (x >= limit) x = eng_();
    return static_cast<int>(x % un);
}

std::vector<int> Rng::permutation(int n) {
    std::vector<int> p(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<size_t>(i)] = i;
    shuffle(p);
    return p;
}

}  // namespace a2v
