#pragma once

#include "avemo/audio.hpp"
#include "avemo/graph.hpp"
#include "avemo/ingest.hpp"
#include "avemo/param_set.hpp"
#include "avemo/video.hpp"

#include <array>
#include <optional>
#include <cstdint>
#include <string>
#include <vector>

namespace avemo {

// Audio stream. The backbone is a stack of (conv 3x3 pad 1 -> relu -> maxpool 2)
// stages followed by FC -> dropout -> FC; the second FC output is the
// penultimate feature used for fusion.
struct AnetConfig {
    std::vector<std::size_t> conv_channels{8, 16, 32};
    std::size_t fc_dim = 64;
    double dropout_p = 0.5;
    std::size_t input_bins = 257;
    std::size_t input_frames = 300;
    // Average-pool factor applied to the STFT map before the backbone (1 = none).
    std::size_t input_downsample = 4;

    static AnetConfig toy();
    // 16-layer-network scale: five 512-capped stages and 4096-wide FC layers.
    static AnetConfig full();
    void validate() const;

    // (2, bins / ds, frames / ds)
    std::array<std::size_t, 3> backbone_input_shape() const;
    // (channels, height, width) after the last pooling stage.
    std::array<std::size_t, 3> conv_output_shape() const;
};

// Video stream: per-frame embedder (conv stages -> FC to embed_dim -> dropout)
// shared across frames, a bidirectional LSTM, temporal mean, FC + tanh head.
struct VnetConfig {
    std::vector<std::size_t> conv_channels{8, 16};
    std::size_t embed_dim = 64;
    std::size_t lstm_hidden = 32;
    std::size_t n_frames = 16;
    double dropout_p = 0.5;
    std::size_t input_downsample = 4;

    static VnetConfig toy();
    static VnetConfig full();
    void validate() const;

    // (3, 112 / ds, 96 / ds)
    std::array<std::size_t, 3> frame_input_shape() const;
    std::array<std::size_t, 3> conv_output_shape() const;
    std::size_t feature_width() const { return 2 * lstm_hidden; }
};

struct JointConfig {
    AnetConfig anet;
    VnetConfig vnet;
    std::size_t n_audio_windows = 4;
    bool freeze_anet = false;
    bool freeze_vnet = false;

    void validate() const;
    std::size_t fusion_width() const { return anet.fc_dim + vnet.feature_width(); }
};

using AffectPrediction = AffectPair;

// Model-side preprocessing. Returns a channel-first [2, h, w] block for one
// STFT map, average-pooled by input_downsample.
std::vector<float> prepare_audio_input(const StftMap& map, const AnetConfig& cfg);
// Channel-first [3, h, w] block for one frame, average-pooled by input_downsample.
std::vector<float> prepare_frame_input(const FrameImage& frame, const VnetConfig& cfg);

template <typename T>
struct LinearParams {
    Tensor<T> weight;  // [in, out]
    Tensor<T> bias;    // [out]
};

template <typename T>
struct ConvParams {
    Tensor<T> weight;  // [F, C, 3, 3]
    Tensor<T> bias;    // [F]
};

// Gate blocks ordered (input, forget, cell, output) along the 4H axis.
template <typename T>
struct LstmParams {
    Tensor<T> w_input;   // [D, 4H]
    Tensor<T> w_hidden;  // [H, 4H]
    Tensor<T> bias;      // [4H]

    std::size_t hidden() const { return w_hidden.dim(0); }
};

template <typename T>
struct LstmState {
    Tensor<T> h;
    Tensor<T> c;
};

// i, f, o = sigmoid(.), g = tanh(.); c = f*c_prev + i*g; h = o*tanh(c).
template <typename T>
LstmState<T> lstm_step(Graph<T>& graph, const Tensor<T>& x_t, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                       const LstmParams<T>& params);

// [B, T, D] -> [B, T, 2H]: per step [h_forward; h_backward], the backward
// direction run over the reversed sequence and re-reversed.
template <typename T>
Tensor<T> bilstm(Graph<T>& graph, const Tensor<T>& seq, const LstmParams<T>& forward, const LstmParams<T>& backward);

template <typename T>
LstmParams<T> make_lstm_params(std::size_t input_dim, std::size_t hidden, Rng& rng);

template <typename T>
class Anet {
public:
    Anet(AnetConfig cfg, std::uint64_t init_seed);

    // x: [B, 2, h, w] with (h, w) from backbone_input_shape(); returns [B, fc_dim].
    Tensor<T> backbone(Graph<T>& graph, const Tensor<T>& x, Rng* dropout_rng) const;
    // [B, fc_dim] -> [B, 2] in (-1, 1).
    Tensor<T> head(Graph<T>& graph, const Tensor<T>& feature) const;

    // Names under "anet."; `with_head` adds anet.head.*.
    void register_params(ParamSet<T>& set, bool with_head) const;
    const AnetConfig& config() const { return cfg_; }

    std::vector<ConvParams<T>> convs;
    LinearParams<T> fc1;
    LinearParams<T> fc2;
    LinearParams<T> out;

private:
    AnetConfig cfg_;
};

template <typename T>
class Vnet {
public:
    Vnet(VnetConfig cfg, std::uint64_t init_seed);

    // clip: [B, N_V, 3, h, w]; returns per-frame embeddings [B, N_V, embed_dim].
    Tensor<T> embed(Graph<T>& graph, const Tensor<T>& clip, Rng* dropout_rng) const;
    // Temporal-mean BiLSTM feature [B, 2H].
    Tensor<T> backbone(Graph<T>& graph, const Tensor<T>& clip, Rng* dropout_rng) const;
    Tensor<T> head(Graph<T>& graph, const Tensor<T>& feature) const;

    void register_params(ParamSet<T>& set, bool with_head) const;
    const VnetConfig& config() const { return cfg_; }

    std::vector<ConvParams<T>> convs;
    LinearParams<T> embedding;
    LstmParams<T> lstm_forward;
    LstmParams<T> lstm_backward;
    LinearParams<T> out;

private:
    VnetConfig cfg_;
};

enum class Stage { anet, vnet, joint };

std::string to_string(Stage stage);
Stage parse_stage(const std::string& text);

template <typename T>
struct ModelInputs {
    Tensor<T> audio;  // [B, n_windows, 2, h, w]; unused by the vnet stage
    Tensor<T> video;  // [B, N_V, 3, h, w]; unused by the anet stage
};

// One trainable model per stage. The anet and vnet stages are the standalone
// networks with their own heads; the joint stage averages the ANet penultimate
// features over the audio windows, concatenates the VNet feature and applies a
// fresh FC + tanh head ("joint.head").
template <typename T>
class AffectModel {
public:
    AffectModel(Stage stage, JointConfig cfg, std::uint64_t seed);

    Tensor<T> forward(Graph<T>& graph, const ModelInputs<T>& inputs, Rng* dropout_rng) const;
    // Averaged ANet feature [B, fc_dim] over the window axis.
    Tensor<T> audio_feature(Graph<T>& graph, const Tensor<T>& audio, Rng* dropout_rng) const;

    Stage stage() const { return stage_; }
    const JointConfig& config() const { return cfg_; }
    bool uses_audio() const { return stage_ != Stage::vnet; }
    bool uses_video() const { return stage_ != Stage::anet; }
    // Audio windows consumed per utterance: 1 for the standalone ANet, N_A for joint.
    std::size_t audio_windows() const { return stage_ == Stage::joint ? cfg_.n_audio_windows : 1; }

    ParamSet<T>& params() { return params_; }
    const ParamSet<T>& params() const { return params_; }
    // Parameters excluding frozen sub-networks.
    ParamSet<T> trainable_params() const;

    // Throws when the stage has no such sub-network.
    const Anet<T>& anet() const;
    const Vnet<T>& vnet() const;

private:
    Stage stage_;
    JointConfig cfg_;
    std::optional<Anet<T>> anet_;
    std::optional<Vnet<T>> vnet_;
    LinearParams<T> joint_head_;
    ParamSet<T> params_;
};

extern template class Anet<float>;
extern template class Anet<double>;
extern template class Vnet<float>;
extern template class Vnet<double>;
extern template class AffectModel<float>;
extern template class AffectModel<double>;

}  // namespace avemo
