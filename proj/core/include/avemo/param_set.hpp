#pragma once

#include "avemo/tensor.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace avemo {

// Named parameters, iterated in sorted name order. Entries share storage with
// the model that registered them.
template <typename T>
class ParamSet {
public:
    using Map = std::map<std::string, Tensor<T>>;

    void add(const std::string& name, Tensor<T> tensor);
    bool contains(const std::string& name) const { return params_.count(name) != 0; }
    Tensor<T>& at(const std::string& name);
    const Tensor<T>& at(const std::string& name) const;

    std::size_t size() const { return params_.size(); }
    bool empty() const { return params_.empty(); }
    std::size_t element_count() const;

    typename Map::iterator begin() { return params_.begin(); }
    typename Map::iterator end() { return params_.end(); }
    typename Map::const_iterator begin() const { return params_.begin(); }
    typename Map::const_iterator end() const { return params_.end(); }

    void zero_grad();
    // Entries whose name starts with `prefix`.
    ParamSet with_prefix(std::string_view prefix) const;

private:
    Map params_;
};

// "CKPT1\0", u32 count, then per entry (sorted by name): u16 name length,
// UTF-8 name, u8 rank, rank x u32 dims, f32 payload.
template <typename T>
std::string encode_checkpoint(const ParamSet<T>& params);
ParamSet<float> decode_checkpoint(std::string_view bytes, const std::string& context);
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamSet<T>& params);
ParamSet<float> load_checkpoint(const std::filesystem::path& path);

// Copies values from `src` into same-named tensors of `dst` (converting
// precision). Only names starting with `prefix` are considered; every such
// name in `dst` must exist in `src` with an identical shape.
template <typename T>
void assign_params(ParamSet<T>& dst, const ParamSet<float>& src, std::string_view prefix = "");

extern template class ParamSet<float>;
extern template class ParamSet<double>;

}  // namespace avemo
