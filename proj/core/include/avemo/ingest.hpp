#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace avemo {

// Arousal and valence, both normalized to [-1, 1].
struct AffectPair {
    double arousal = 0.0;
    double valence = 0.0;

    bool operator==(const AffectPair&) const = default;
};

// Throws DataError unless both components are finite and within [-1, 1].
void validate_affect(const AffectPair& label, const std::string& where);

struct UtteranceRecord {
    std::string id;
    std::filesystem::path wav_path;
    std::filesystem::path frames_dir;
    AffectPair label;

    bool operator==(const UtteranceRecord&) const = default;
};

inline constexpr const char* kManifestHeader = "id,wav_path,frames_dir,arousal,valence";

// Paths are returned exactly as written; use resolve_paths to anchor relative
// entries at the manifest's directory.
std::vector<UtteranceRecord> load_manifest(const std::filesystem::path& path);
std::string format_manifest(const std::vector<UtteranceRecord>& records);
void write_manifest(const std::filesystem::path& path, const std::vector<UtteranceRecord>& records);
std::vector<UtteranceRecord> resolve_paths(std::vector<UtteranceRecord> records,
                                           const std::filesystem::path& base_dir);
// load_manifest followed by resolve_paths against the manifest's parent directory.
std::vector<UtteranceRecord> load_manifest_resolved(const std::filesystem::path& path);

struct TrainValSplit {
    std::vector<UtteranceRecord> train;
    std::vector<UtteranceRecord> val;
};

// Seeded shuffle, then |val| = round(val_fraction * N) clamped to [1, N-1].
TrainValSplit split_train_val(const std::vector<UtteranceRecord>& records, double val_fraction,
                              std::uint64_t seed);

struct SynthSpec {
    std::size_t n_utterances = 200;
    std::uint64_t seed = 1;
    double audio_seconds = 3.0;
    std::size_t frames_per_utterance = 16;
    double audio_valence_noise = 0.3;
    double video_arousal_noise = 0.3;
};

void validate(const SynthSpec& spec);

// Writes `<out_dir>/wav/<id>.wav`, `<out_dir>/frames/<id>/frame_NNNN.ppm` and
// `<out_dir>/manifest.csv` (paths relative to out_dir). Returns the manifest path.
//
// Generative model per utterance, with (a, v) ~ U[-0.8, 0.8]^2:
//   audio   carrier 200 + 600*(a+1)/2 Hz, 4 Hz amplitude modulation of depth
//           0.5 + 0.5*(v + n_v), n_v ~ N(0, audio_valence_noise^2), plus white noise
//   frames  mean brightness 0.5 + 0.3*v, luminance ramp oriented at
//           pi/4 * (1 + a + n_a), n_a ~ N(0, video_arousal_noise^2), plus pixel noise
// so audio carries arousal cleanly and valence noisily, video the reverse.
std::filesystem::path generate_synthetic(const SynthSpec& spec, const std::filesystem::path& out_dir,
                                         unsigned jobs = 1);

}  // namespace avemo
