#include "avemo/audio.hpp"
#include "avemo/error.hpp"
#include "avemo/ingest.hpp"
#include "avemo/parallel.hpp"
#include "avemo/rng.hpp"
#include "avemo/video.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace avemo {

namespace {

constexpr double kLabelRange = 0.8;
constexpr double kCarrierBaseHz = 200.0;
constexpr double kCarrierSpanHz = 600.0;
constexpr double kModulationHz = 4.0;
constexpr double kAudioAmplitude = 0.4;
constexpr double kAudioNoise = 0.02;
constexpr double kRampStrength = 0.4;
constexpr double kFrameJitter = 0.03;
constexpr double kPixelNoise = 0.05;

std::string utterance_id(std::size_t index, std::size_t total) {
    std::size_t width = 4;
    for (std::size_t n = total; n >= 10000; n /= 10) ++width;
    auto digits = std::to_string(index);
    return "utt" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

WaveBuffer synth_audio(const AffectPair& label, const SynthSpec& spec, Rng& rng) {
    const auto n = static_cast<std::size_t>(std::llround(spec.audio_seconds * kSampleRate));
    const double depth = std::clamp(0.5 + 0.5 * (label.valence + rng.normal(0.0, spec.audio_valence_noise)), 0.0, 1.0);
    const double carrier = kCarrierBaseHz + kCarrierSpanHz * (label.arousal + 1.0) / 2.0;
    const double carrier_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double mod_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    constexpr double kMax = 32767.0 / 32768.0;

    WaveBuffer wave;
    wave.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / kSampleRate;
        const double envelope = 1.0 + depth * std::sin(2.0 * std::numbers::pi * kModulationHz * t + mod_phase);
        double x = kAudioAmplitude * envelope * std::sin(2.0 * std::numbers::pi * carrier * t + carrier_phase);
        x += rng.normal(0.0, kAudioNoise);
        wave.samples[i] = static_cast<float>(std::clamp(x, -1.0, kMax));
    }
    return wave;
}

std::vector<FrameImage> synth_frames(const AffectPair& label, const SynthSpec& spec, Rng& rng) {
    const double corrupted = std::clamp(label.arousal + rng.normal(0.0, spec.video_arousal_noise), -1.5, 1.5);
    const double angle = std::numbers::pi / 4.0 * (1.0 + corrupted);
    const double gx = kRampStrength * std::cos(angle);
    const double gy = kRampStrength * std::sin(angle);
    const double mean = 0.5 + 0.3 * label.valence;

    std::vector<FrameImage> frames(spec.frames_per_utterance);
    for (auto& frame : frames) {
        const double jitter = rng.normal(0.0, kFrameJitter);
        for (std::size_t y = 0; y < kFrameHeight; ++y) {
            const double fy = static_cast<double>(y) / (kFrameHeight - 1) - 0.5;
            for (std::size_t x = 0; x < kFrameWidth; ++x) {
                const double fx = static_cast<double>(x) / (kFrameWidth - 1) - 0.5;
                const double v = std::clamp(mean + gx * fx + gy * fy + jitter + rng.normal(0.0, kPixelNoise), 0.0, 1.0);
                for (std::size_t c = 0; c < kFrameChannels; ++c) {
                    frame.at(y, x, c) = static_cast<float>(v);
                }
            }
        }
    }
    return frames;
}

}  // namespace

void validate(const SynthSpec& spec) {
    if (spec.n_utterances < 2) throw ConfigError("SynthSpec: n_utterances must be >= 2");
    if (!(spec.audio_seconds >= 3.0)) throw ConfigError("SynthSpec: audio_seconds must be >= 3.0");
    if (spec.frames_per_utterance < 1) throw ConfigError("SynthSpec: frames_per_utterance must be >= 1");
    if (!(spec.audio_valence_noise >= 0.0) || !(spec.video_arousal_noise >= 0.0)) {
        throw ConfigError("SynthSpec: noise standard deviations must be >= 0");
    }
}

std::filesystem::path generate_synthetic(const SynthSpec& spec, const std::filesystem::path& out_dir,
                                         unsigned jobs) {
    validate(spec);
    namespace fs = std::filesystem;
    if (fs::exists(out_dir) && !fs::is_empty(out_dir)) {
        throw DataError("synthetic output directory is not empty: " + out_dir.string());
    }
    std::error_code ec;
    fs::create_directories(out_dir / "wav", ec);
    fs::create_directories(out_dir / "frames", ec);
    if (ec) {
        throw DataError("cannot create " + out_dir.string() + ": " + ec.message());
    }

    const std::uint64_t root = derive_seed(spec.seed, "synth");
    std::vector<UtteranceRecord> records(spec.n_utterances);

    auto make_one = [&](std::size_t i) {
        Rng rng(derive_seed(root, static_cast<std::uint64_t>(i)));
        UtteranceRecord& rec = records[i];
        rec.id = utterance_id(i, spec.n_utterances);
        rec.label.arousal = rng.uniform(-kLabelRange, kLabelRange);
        rec.label.valence = rng.uniform(-kLabelRange, kLabelRange);
        rec.wav_path = fs::path("wav") / (rec.id + ".wav");
        rec.frames_dir = fs::path("frames") / rec.id;

        write_wav(out_dir / rec.wav_path, synth_audio(rec.label, spec, rng));
        const auto frames = synth_frames(rec.label, spec, rng);
        fs::create_directories(out_dir / rec.frames_dir);
        for (std::size_t k = 0; k < frames.size(); ++k) {
            char name[32];
            std::snprintf(name, sizeof(name), "frame_%04zu.ppm", k);
            save_ppm(out_dir / rec.frames_dir / name, frames[k]);
        }
    };

    parallel_for(spec.n_utterances, jobs, make_one);

    const auto manifest = out_dir / "manifest.csv";
    write_manifest(manifest, records);
    return manifest;
}

}  // namespace avemo
