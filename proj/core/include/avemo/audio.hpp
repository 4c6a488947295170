#pragma once

#include "avemo/sampling.hpp"

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace avemo {

inline constexpr int kSampleRate = 16000;

struct WaveBuffer {
    std::vector<float> samples;  // in [-1, 1)
    int sample_rate = kSampleRate;
};

// RIFF/WAVE, PCM16 little-endian, mono, 16 kHz only. Sample s decodes to s / 32768.
WaveBuffer decode_wav(const std::filesystem::path& path);
WaveBuffer decode_wav_bytes(std::string_view bytes, const std::string& context);
std::string encode_wav(const WaveBuffer& wave);
void write_wav(const std::filesystem::path& path, const WaveBuffer& wave);

struct StftParams {
    std::size_t window_len = 400;  // 25 ms
    std::size_t hop = 160;         // 10 ms
    std::size_t n_fft = 512;
    double segment_seconds = 3.0;

    void validate() const;
    std::size_t bins() const { return n_fft / 2 + 1; }
    std::size_t segment_samples() const;
    // round(segment_seconds / hop_seconds); 300 for the defaults.
    std::size_t frames() const;
};

// Complex spectrum stored as bins x frames x 2 floats, component 0 = real, 1 = imaginary.
struct StftMap {
    std::size_t bins = 0;
    std::size_t frames = 0;
    std::vector<float> values;

    float& at(std::size_t bin, std::size_t frame, std::size_t component) {
        return values[(bin * frames + frame) * 2 + component];
    }
    float at(std::size_t bin, std::size_t frame, std::size_t component) const {
        return values[(bin * frames + frame) * 2 + component];
    }
};

// w[k] = 0.54 - 0.46 cos(2 pi k / (n - 1)).
std::vector<double> hamming_window(std::size_t n);

// In-place iterative radix-2 FFT; size must be a power of two.
class Fft {
public:
    explicit Fft(std::size_t n);
    void transform(std::span<std::complex<double>> data) const;
    std::size_t size() const { return n_; }

private:
    std::size_t n_;
    std::vector<std::size_t> bit_reverse_;
    std::vector<std::complex<double>> twiddle_;
};

// The signal is cropped or zero-padded to segment_samples(), then right-padded
// with zeros so that exactly frames() windows fit; frame t covers samples
// [t*hop, t*hop + window_len), is Hamming-weighted, zero-padded to n_fft and
// transformed. No normalization, log or mel mapping is applied.
StftMap stft(std::span<const float> samples, const StftParams& params);
inline StftMap stft(const WaveBuffer& wave, const StftParams& params) {
    return stft(std::span<const float>(wave.samples), params);
}

// Window start samples for sample_audio_windows. The utterance is split into
// n_windows equal segments; train mode draws each start uniformly from its
// segment, eval mode centres the window on the segment; all starts are clamped
// to [0, max(0, n_samples - segment_samples)].
std::vector<std::size_t> audio_window_starts(std::size_t n_samples, const StftParams& params,
                                             std::size_t n_windows, const SampleMode& mode);

std::vector<StftMap> sample_audio_windows(const WaveBuffer& wave, const StftParams& params,
                                          std::size_t n_windows, const SampleMode& mode);

// `.stft` container: "STFT1\0", u32 bins, u32 frames, u32 2, f32 payload [bin][frame][component].
std::string encode_stft(const StftMap& map);
StftMap decode_stft(std::string_view bytes, const std::string& context);
void write_stft(const std::filesystem::path& path, const StftMap& map);
StftMap read_stft(const std::filesystem::path& path);

}  // namespace avemo
