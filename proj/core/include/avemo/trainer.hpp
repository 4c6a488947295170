#pragma once

#include "avemo/audio.hpp"
#include "avemo/ingest.hpp"
#include "avemo/kv_config.hpp"
#include "avemo/models.hpp"
#include "avemo/objectives.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace avemo {

struct TrainConfig {
    double lr_init = 0.001;
    double lr_decay = 0.1;
    std::size_t lr_step = 7;
    double clip_norm = 20.0;
    std::size_t batch_size = 6;
    std::size_t epochs = 10;
    double momentum = 0.9;
    std::uint64_t seed = 1;
    Stage stage = Stage::anet;

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    CccReport val;
    double seconds = 0.0;
};

// lr_init * lr_decay^floor(epoch / lr_step)
double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch);

// Global L2 norm over every gradient in `params`.
template <typename T>
double gradient_norm(const ParamSet<T>& params);

// Rescales all gradients by clip_norm / g when the global norm g exceeds
// clip_norm (strictly). Returns the factor applied, 1 when untouched.
template <typename T>
double clip_gradients(ParamSet<T>& params, double clip_norm);

// Per-parameter momentum buffers, keyed like the ParamSet.
template <typename T>
using Velocity = std::map<std::string, std::vector<T>>;

// v = momentum * v + grad; p -= lr * v. Parameters without a gradient are skipped.
template <typename T>
void sgd_step(ParamSet<T>& params, double lr, double momentum, Velocity<T>& velocity);

enum class LossKind { mse, ccc };
// MSE for the standalone stages, CCC loss for joint training.
LossKind loss_kind(Stage stage);
template <typename T>
Tensor<T> stage_loss(Graph<T>& graph, Stage stage, const Tensor<T>& pred, const Tensor<T>& target);

struct DataOptions {
    StftParams stft;
    // Upper bound on cached model inputs; 0 disables caching.
    std::size_t cache_mb = 1024;
};

// Loads model-ready inputs for utterances. Sampling is a pure function of
// the mode seed, so the cache never changes results.
class InputSource {
public:
    InputSource(JointConfig model, DataOptions options);

    // Appends n_windows blocks of [2, h, w] for the utterance.
    void append_audio(const UtteranceRecord& rec, std::size_t n_windows, const SampleMode& mode,
                      std::vector<float>& out);
    // Appends n_frames blocks of [3, h, w].
    void append_clip(const UtteranceRecord& rec, const SampleMode& mode, std::vector<float>& out);

    // Builds the stage's inputs for a batch. `seeds` holds one sampling seed per
    // record in train mode; empty selects eval mode.
    ModelInputs<float> batch(const AffectModel<float>& model, const std::vector<const UtteranceRecord*>& records,
                             const std::vector<std::uint64_t>& seeds);

    std::size_t cached_bytes() const { return cached_bytes_; }

private:
    const std::vector<float>* cache_find(const std::string& key) const;
    void cache_put(const std::string& key, const std::vector<float>& value);

    JointConfig model_;
    DataOptions options_;
    std::unordered_map<std::string, std::vector<float>> cache_;
    std::unordered_map<std::string, std::vector<std::filesystem::path>> frame_lists_;
    std::unordered_map<std::string, std::size_t> wav_lengths_;
    std::size_t cached_bytes_ = 0;
};

std::vector<AffectPrediction> predict(const AffectModel<float>& model, const std::vector<UtteranceRecord>& records,
                                      InputSource& source, std::size_t batch_size);

struct TrainData {
    std::vector<UtteranceRecord> train;
    std::vector<UtteranceRecord> val;
};

// One pass over data.train followed by validation in eval mode. Randomness is
// derived from (cfg.seed, epoch) only.
EpochStats train_epoch(AffectModel<float>& model, const TrainData& data, InputSource& source,
                       const TrainConfig& cfg, std::size_t epoch, Velocity<float>& velocity);

// Everything `fit` needs beyond TrainConfig.
struct FitOptions {
    JointConfig model;
    DataOptions data;
    std::filesystem::path out_dir;
    std::optional<std::filesystem::path> anet_ckpt;
    std::optional<std::filesystem::path> vnet_ckpt;
    // Continue from the newest epoch checkpoint in out_dir.
    bool resume = false;
    // Stop after this many epochs in this call (simulated interruption).
    std::optional<std::size_t> max_epochs_this_run;
    std::function<void(const EpochStats&)> on_epoch;
};

struct FitResult {
    std::vector<EpochStats> history;  // epochs run by this call
    std::size_t best_epoch = 0;
    double best_total = 0.0;
    std::filesystem::path final_ckpt;
};

// Writes epoch_NNN.ckpt and epoch_NNN.state (momentum buffers and run
// position), stats.csv, best.ckpt (highest validation total, first wins) and
// final.ckpt into out_dir.
FitResult fit(const TrainConfig& cfg, const TrainData& data, const FitOptions& options);

inline constexpr const char* kStatsHeader = "epoch,lr,train_loss,val_ccc_arousal,val_ccc_valence,val_ccc_total,seconds";
std::string format_stats_row(const EpochStats& stats);

// Training-run state stored next to each epoch checkpoint.
struct RunState {
    std::uint64_t seed = 0;
    Stage stage = Stage::anet;
    std::size_t next_epoch = 0;
    double best_total = 0.0;
    std::size_t best_epoch = 0;
    bool has_best = false;
    Velocity<float> velocity;
};
std::string encode_run_state(const RunState& state);
RunState decode_run_state(std::string_view bytes, const std::string& context);

// Every setting a training run reads from a config file.
struct TrainSettings {
    TrainConfig train;
    JointConfig model;
    DataOptions data;
    double val_fraction = 0.2;
};

// Keys: lr_init lr_decay lr_step clip_norm batch_size epochs momentum seed
// stage val_fraction cache_mb, anet.{scale,conv_channels,fc_dim,dropout,
// input_downsample}, vnet.{scale,conv_channels,embed_dim,lstm_hidden,n_frames,
// dropout,input_downsample}, joint.{n_audio_windows,freeze_anet,freeze_vnet},
// stft.{window_len,hop,n_fft,segment_seconds}. `*.scale` (toy|full) is applied
// before the other keys of its group. Unknown keys are errors.
TrainSettings settings_from_config(const KeyValueConfig& config);
std::string settings_help();

}  // namespace avemo
