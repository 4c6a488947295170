#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace avemo {

// Version of the seeding tree below. Bump whenever derivation changes, since
// checkpoints and synthetic corpora depend on it.
inline constexpr std::uint32_t kRngVersion = 1;

// Seeding tree
//
//   root seed
//   ├── "synth"/<utterance index>          synthetic corpus, one stream per utterance
//   ├── "split"                            train/validation shuffle
//   ├── "init"/<stage>                     parameter initialization
//   └── "epoch"/<epoch>
//        ├── "shuffle"                     batch order
//        ├── "sample"/<fnv1a(id)>          audio window starts, frame indices
//        └── "dropout"/<step>              dropout masks of one optimizer step
//
// Every node is derive_seed(parent, tag) so any stream can be rebuilt without
// replaying the streams before it; parallel loaders cannot perturb each other.
std::uint64_t derive_seed(std::uint64_t parent, std::string_view tag);
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index);

std::uint64_t fnv1a(std::string_view text);

// Mersenne twister engine (bit-exact by the standard) plus distributions
// coded here, because std:: distributions differ between standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    // Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
    double normal(double mean = 0.0, double stddev = 1.0);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace avemo
