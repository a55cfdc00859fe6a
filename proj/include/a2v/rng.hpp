#ifndef A2V_RNG_HPP_
#define A2V_RNG_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <random>
#include <vector>

namespace a2v {

// Deterministic random stream. The engine is std::mt19937_64 (state is pinned
// by the standard); the distribution transforms are done by hand so results
// are identical across standard libraries. Every stream is derived from a
// single top-level seed plus a component name, so independent parts of the
// pipeline never share draws.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    // Named sub-stream: (seed, name, index) -> independent generator.
    static Rng stream(uint64_t seed, std::string_view name, uint64_t index = 0);

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Box-Muller with cached spare.
    double normal();

    // Unbiased integer in [0, n), n >= 1. Rejection sampling.
    int uniform_int(int n);

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            std::swap(v[static_cast<size_t>(i)],
                      v[static_cast<size_t>(uniform_int(i + 1))]);
        }
    }

    std::vector<int> permutation(int n);

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// FNV-1a, used to fold stream names into seeds.
uint64_t fnv1a64(std::string_view s);

}  // namespace a2v

#endif  // A2V_RNG_HPP_
