#include "avemo/param_set.hpp"

#include "avemo/binary_io.hpp"
#include "avemo/error.hpp"

#include <cmath>

namespace avemo {

namespace {

constexpr std::string_view kCheckpointMagic{"CKPT1\0", 6};

}  // namespace

template <typename T>
void ParamSet<T>::add(const std::string& name, Tensor<T> tensor) {
    if (name.empty()) throw ConfigError("ParamSet: empty parameter name");
    if (!params_.emplace(name, std::move(tensor)).second) {
        throw ConfigError("ParamSet: duplicate parameter name '" + name + "'");
    }
}

template <typename T>
Tensor<T>& ParamSet<T>::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("ParamSet: no parameter named '" + name + "'");
    return it->second;
}

template <typename T>
const Tensor<T>& ParamSet<T>::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("ParamSet: no parameter named '" + name + "'");
    return it->second;
}

template <typename T>
std::size_t ParamSet<T>::element_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : params_) n += t.size();
    return n;
}

template <typename T>
void ParamSet<T>::zero_grad() {
    for (auto& [name, t] : params_) t.zero_grad();
}

template <typename T>
ParamSet<T> ParamSet<T>::with_prefix(std::string_view prefix) const {
    ParamSet out;
    for (const auto& [name, t] : params_) {
        if (name.starts_with(prefix)) out.params_.emplace(name, t);
    }
    return out;
}

template <typename T>
std::string encode_checkpoint(const ParamSet<T>& params) {
    ByteWriter out;
    out.bytes(kCheckpointMagic);
    out.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, t] : params) {
        if (name.size() > 0xFFFF) throw ConfigError("checkpoint: parameter name too long");
        out.u16(static_cast<std::uint16_t>(name.size()));
        out.bytes(name);
        out.u8(static_cast<std::uint8_t>(t.rank()));
        for (auto d : t.shape()) out.u32(static_cast<std::uint32_t>(d));
        for (const T v : t.data()) out.f32(static_cast<float>(v));
    }
    return out.take();
}

ParamSet<float> decode_checkpoint(std::string_view bytes, const std::string& context) {
    ByteReader in(bytes, context);
    in.expect(kCheckpointMagic);
    const auto count = in.u32();
    ParamSet<float> params;
    std::string previous;
    for (std::uint32_t e = 0; e < count; ++e) {
        const auto len = in.u16();
        std::string name(in.bytes(len));
        if (e > 0 && !(previous < name)) {
            throw DataError(context + ": entries not sorted by name at '" + name + "'");
        }
        const auto rank = in.u8();
        Shape shape(rank);
        for (auto& d : shape) d = in.u32();
        std::vector<float> values(shape_size(shape));
        for (auto& v : values) {
            v = in.f32();
            if (!std::isfinite(v)) throw DataError(context + ": non-finite value in '" + name + "'");
        }
        params.add(name, Tensor<float>(std::move(shape), std::move(values)));
        previous = std::move(name);
    }
    if (in.remaining() != 0) {
        throw DataError(context + ": trailing bytes after last entry");
    }
    return params;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const ParamSet<T>& params) {
    write_file_atomic(path, encode_checkpoint(params));
}

ParamSet<float> load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file(path), path.string());
}

template <typename T>
void assign_params(ParamSet<T>& dst, const ParamSet<float>& src, std::string_view prefix) {
    for (auto& [name, t] : dst) {
        if (!name.starts_with(prefix)) continue;
        if (!src.contains(name)) {
            throw DataError("checkpoint is missing parameter '" + name + "'");
        }
        const auto& s = src.at(name);
        if (s.shape() != t.shape()) {
            throw DataError("checkpoint parameter '" + name + "' has shape " + shape_str(s.shape()) +
                            ", model expects " + shape_str(t.shape()));
        }
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(s[i]);
    }
}

template class ParamSet<float>;
template class ParamSet<double>;
template std::string encode_checkpoint(const ParamSet<float>&);
template std::string encode_checkpoint(const ParamSet<double>&);
template void save_checkpoint(const std::filesystem::path&, const ParamSet<float>&);
template void save_checkpoint(const std::filesystem::path&, const ParamSet<double>&);
template void assign_params(ParamSet<float>&, const ParamSet<float>&, std::string_view);
template void assign_params(ParamSet<double>&, const ParamSet<float>&, std::string_view);

}  // namespace avemo
