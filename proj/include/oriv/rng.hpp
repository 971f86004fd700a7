#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace oriv {

// Standard normal quantile, Wichura's AS241 (PPND16). |error| < 1e-10 on (0,1).
double normal_quantile(double p);

// Standard normal cdf.
double normal_cdf(double x);

// xoshiro256++ with splitmix64 seeding. Deterministic across platforms, which
// std::normal_distribution is not.
class Rng {
  public:
    explicit Rng(uint64_t seed);

    uint64_t next();
    double uniform();                      // (0,1)
    double normal();                       // inverse-cdf sampling
    double normal(double mean, double sd) { return mean + sd * normal(); }
    double lognormal(double mean, double sd);
    int uniform_int(int n);                // [0, n)

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            int j = uniform_int(i + 1);
            std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(j)]);
        }
    }

    // Derive an independent stream seed; used to split per-rep / per-fold RNGs
    // so results do not depend on scheduling.
    static uint64_t derive(uint64_t seed, uint64_t stream);

  private:
    std::array<uint64_t, 4> s_{};
};

}  // namespace oriv
