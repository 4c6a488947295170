#include "avemo/audio.hpp"

#include "avemo/binary_io.hpp"
#include "avemo/error.hpp"
#include "avemo/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace avemo {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

WaveBuffer decode_wav_bytes(std::string_view bytes, const std::string& context) {
    ByteReader in(bytes, context);
    if (bytes.size() < 12 || bytes.substr(0, 4) != "RIFF" || bytes.substr(8, 4) != "WAVE") {
        throw DataError(context + ": not a RIFF/WAVE file");
    }
    in.bytes(12);

    bool have_fmt = false;
    std::uint16_t channels = 0;
    std::uint32_t rate = 0;
    std::uint16_t bits = 0;
    while (in.remaining() >= 8) {
        const auto id = in.bytes(4);
        const auto size = in.u32();
        if (id == "fmt ") {
            ByteReader fmt(in.bytes(size), context + " fmt chunk");
            auto format = fmt.u16();
            channels = fmt.u16();
            rate = fmt.u32();
            fmt.u32();  // byte rate
            fmt.u16();  // block align
            bits = fmt.u16();
            if (format == kFormatExtensible && fmt.remaining() >= 10) {
                fmt.u16();  // cbSize
                fmt.u16();  // valid bits
                fmt.u32();  // channel mask
                format = fmt.u16();  // leading two bytes of the subformat GUID
            }
            if (format != kFormatPcm) {
                throw DataError(context + ": unsupported codec (format tag " + std::to_string(format) +
                                "), only PCM is accepted");
            }
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) {
                throw DataError(context + ": data chunk before fmt chunk");
            }
            if (bits != 16) {
                throw DataError(context + ": unsupported bit depth " + std::to_string(bits) +
                                ", expected 16");
            }
            if (channels != 1) {
                throw DataError(context + ": channel count " + std::to_string(channels) +
                                ", expected 1 (mono)");
            }
            if (rate != static_cast<std::uint32_t>(kSampleRate)) {
                throw DataError(context + ": sample rate " + std::to_string(rate) +
                                " Hz, expected 16000 Hz (no resampling)");
            }
            const auto n = std::min<std::size_t>(size, in.remaining()) / 2;
            if (n == 0) {
                throw DataError(context + ": empty data chunk");
            }
            WaveBuffer wave;
            wave.samples.resize(n);
            for (auto& s : wave.samples) {
                s = static_cast<float>(static_cast<std::int16_t>(in.u16())) / 32768.0f;
            }
            return wave;
        } else {
            in.bytes(std::min<std::size_t>(size + (size & 1u), in.remaining()));
        }
    }
    throw DataError(context + (have_fmt ? ": missing data chunk" : ": missing fmt chunk"));
}

WaveBuffer decode_wav(const std::filesystem::path& path) {
    return decode_wav_bytes(read_file(path), path.string());
}

std::string encode_wav(const WaveBuffer& wave) {
    const auto n = static_cast<std::uint32_t>(wave.samples.size());
    ByteWriter out;
    out.bytes("RIFF");
    out.u32(36 + 2 * n);
    out.bytes("WAVE");
    out.bytes("fmt ");
    out.u32(16);
    out.u16(kFormatPcm);
    out.u16(1);
    out.u32(static_cast<std::uint32_t>(wave.sample_rate));
    out.u32(static_cast<std::uint32_t>(wave.sample_rate) * 2);
    out.u16(2);
    out.u16(16);
    out.bytes("data");
    out.u32(2 * n);
    for (float s : wave.samples) {
        const auto q = std::clamp(std::lround(static_cast<double>(s) * 32768.0), -32768L, 32767L);
        out.u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    return out.take();
}

void write_wav(const std::filesystem::path& path, const WaveBuffer& wave) {
    write_file_atomic(path, encode_wav(wave));
}

void StftParams::validate() const {
    if (window_len < 1 || window_len > n_fft) {
        throw ConfigError("StftParams: window_len must be in [1, n_fft]");
    }
    if (hop < 1) {
        throw ConfigError("StftParams: hop must be >= 1");
    }
    if (n_fft < 2 || !std::has_single_bit(n_fft)) {
        throw ConfigError("StftParams: n_fft must be a power of two");
    }
    const double samples = segment_seconds * kSampleRate;
    if (!(segment_seconds > 0.0) || std::abs(samples - std::round(samples)) > 1e-6) {
        throw ConfigError("StftParams: segment_seconds * 16000 must be a positive integer");
    }
}

std::size_t StftParams::segment_samples() const {
    return static_cast<std::size_t>(std::llround(segment_seconds * kSampleRate));
}

std::size_t StftParams::frames() const {
    return static_cast<std::size_t>(
        std::llround(static_cast<double>(segment_samples()) / static_cast<double>(hop)));
}

std::vector<double> hamming_window(std::size_t n) {
    if (n < 2) {
        throw ConfigError("hamming_window: n must be >= 2");
    }
    std::vector<double> w(n);
    const double denom = static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) {
        w[k] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) / denom);
    }
    return w;
}

Fft::Fft(std::size_t n) : n_(n) {
    if (n < 1 || !std::has_single_bit(n)) {
        throw ConfigError("Fft: size must be a power of two");
    }
    const int log2n = std::countr_zero(n);
    bit_reverse_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t r = 0;
        for (int b = 0; b < log2n; ++b) {
            r |= ((i >> b) & 1u) << (log2n - 1 - b);
        }
        bit_reverse_[i] = r;
    }
    twiddle_.resize(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        twiddle_[k] = {std::cos(angle), std::sin(angle)};
    }
}

void Fft::transform(std::span<std::complex<double>> data) const {
    if (data.size() != n_) {
        throw ConfigError("Fft::transform: size mismatch");
    }
    for (std::size_t i = 0; i < n_; ++i) {
        if (i < bit_reverse_[i]) std::swap(data[i], data[bit_reverse_[i]]);
    }
    for (std::size_t len = 2; len <= n_; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t step = n_ / len;
        for (std::size_t start = 0; start < n_; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const auto t = twiddle_[k * step] * data[start + k + half];
                data[start + k + half] = data[start + k] - t;
                data[start + k] += t;
            }
        }
    }
}

StftMap stft(std::span<const float> samples, const StftParams& params) {
    params.validate();
    if (samples.empty()) {
        throw DataError("stft: empty signal");
    }
    const std::size_t seg = params.segment_samples();
    const std::size_t frames = params.frames();
    const std::size_t bins = params.bins();
    const std::size_t padded_len = std::max(seg, (frames - 1) * params.hop + params.window_len);

    std::vector<double> signal(padded_len, 0.0);
    const std::size_t copy = std::min(seg, samples.size());
    for (std::size_t i = 0; i < copy; ++i) signal[i] = samples[i];

    const auto window = hamming_window(params.window_len);
    const Fft fft(params.n_fft);
    std::vector<std::complex<double>> buf(params.n_fft);

    StftMap map;
    map.bins = bins;
    map.frames = frames;
    map.values.assign(bins * frames * 2, 0.0f);
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t offset = t * params.hop;
        std::fill(buf.begin(), buf.end(), std::complex<double>{});
        for (std::size_t k = 0; k < params.window_len; ++k) {
            buf[k] = signal[offset + k] * window[k];
        }
        fft.transform(buf);
        for (std::size_t b = 0; b < bins; ++b) {
            map.at(b, t, 0) = static_cast<float>(buf[b].real());
            map.at(b, t, 1) = static_cast<float>(buf[b].imag());
        }
        // Exactly real for real input; drop rounding residue.
        map.at(0, t, 1) = 0.0f;
        map.at(bins - 1, t, 1) = 0.0f;
    }
    return map;
}

std::vector<std::size_t> audio_window_starts(std::size_t n_samples, const StftParams& params,
                                             std::size_t n_windows, const SampleMode& mode) {
    if (n_windows < 1) {
        throw ConfigError("sample_audio_windows: n_windows must be >= 1");
    }
    params.validate();
    const std::size_t window = params.segment_samples();
    const std::size_t max_start = n_samples > window ? n_samples - window : 0;

    std::vector<std::size_t> starts(n_windows);
    Rng rng(mode.seed());
    for (std::size_t i = 0; i < n_windows; ++i) {
        const std::size_t seg_lo = i * n_samples / n_windows;
        const std::size_t seg_end = (i + 1) * n_samples / n_windows;
        if (mode.is_train()) {
            const std::size_t lo = std::min(seg_lo, max_start);
            const std::size_t hi = std::min(seg_end > seg_lo ? seg_end - 1 : seg_lo, max_start);
            starts[i] = static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
        } else {
            const std::size_t centre = (2 * i + 1) * n_samples / (2 * n_windows);
            const std::size_t start = centre > window / 2 ? centre - window / 2 : 0;
            starts[i] = std::min(start, max_start);
        }
    }
    return starts;
}

std::vector<StftMap> sample_audio_windows(const WaveBuffer& wave, const StftParams& params,
                                          std::size_t n_windows, const SampleMode& mode) {
    if (wave.samples.empty()) {
        throw DataError("sample_audio_windows: empty wave");
    }
    const auto starts = audio_window_starts(wave.samples.size(), params, n_windows, mode);
    std::vector<StftMap> maps;
    maps.reserve(starts.size());
    const std::span<const float> all(wave.samples);
    for (auto start : starts) {
        maps.push_back(stft(all.subspan(start), params));
    }
    return maps;
}

namespace {

constexpr std::string_view kStftMagic{"STFT1\0", 6};

}  // namespace

std::string encode_stft(const StftMap& map) {
    ByteWriter out;
    out.bytes(kStftMagic);
    out.u32(static_cast<std::uint32_t>(map.bins));
    out.u32(static_cast<std::uint32_t>(map.frames));
    out.u32(2);
    for (float v : map.values) out.f32(v);
    return out.take();
}

StftMap decode_stft(std::string_view bytes, const std::string& context) {
    ByteReader in(bytes, context);
    in.expect(kStftMagic);
    StftMap map;
    map.bins = in.u32();
    map.frames = in.u32();
    if (in.u32() != 2) {
        throw DataError(context + ": third dimension must be 2");
    }
    const std::size_t count = map.bins * map.frames * 2;
    if (in.remaining() != count * 4) {
        throw DataError(context + ": payload size does not match header");
    }
    map.values.resize(count);
    for (auto& v : map.values) {
        v = in.f32();
        if (!std::isfinite(v)) {
            throw DataError(context + ": non-finite value");
        }
    }
    return map;
}

void write_stft(const std::filesystem::path& path, const StftMap& map) {
    write_file_atomic(path, encode_stft(map));
}

StftMap read_stft(const std::filesystem::path& path) {
    return decode_stft(read_file(path), path.string());
}

}  // namespace avemo
