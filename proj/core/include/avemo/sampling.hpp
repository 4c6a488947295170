#pragma once

#include <cstdint>
#include <optional>

namespace avemo {

// Training mode draws randomly from a seeded stream; eval mode is deterministic.
class SampleMode {
public:
    static SampleMode train(std::uint64_t seed) { return SampleMode(seed); }
    static SampleMode eval() { return SampleMode(std::nullopt); }

    bool is_train() const { return seed_.has_value(); }
    std::uint64_t seed() const { return seed_.value_or(0); }

private:
    explicit SampleMode(std::optional<std::uint64_t> seed) : seed_(seed) {}
    std::optional<std::uint64_t> seed_;
};

}  // namespace avemo
