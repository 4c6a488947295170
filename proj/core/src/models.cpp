#include "avemo/models.hpp"

#include "avemo/error.hpp"

#include <cmath>

namespace avemo {

namespace {

constexpr std::size_t kKernel = 3;

template <typename T>
Tensor<T> uniform_tensor(Shape shape, double bound, Rng& rng) {
    std::vector<T> values(shape_size(shape));
    for (auto& v : values) v = static_cast<T>(rng.uniform(-bound, bound));
    return Tensor<T>(std::move(shape), std::move(values), true);
}

template <typename T>
LinearParams<T> make_linear(std::size_t in, std::size_t out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    return {uniform_tensor<T>({in, out}, bound, rng), Tensor<T>({out}, true)};
}

template <typename T>
ConvParams<T> make_conv(std::size_t in_channels, std::size_t filters, Rng& rng) {
    const double fan_in = static_cast<double>(in_channels * kKernel * kKernel);
    const double fan_out = static_cast<double>(filters * kKernel * kKernel);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    return {uniform_tensor<T>({filters, in_channels, kKernel, kKernel}, bound, rng), Tensor<T>({filters}, true)};
}

template <typename T>
Tensor<T> conv_stages(Graph<T>& g, Tensor<T> x, const std::vector<ConvParams<T>>& convs) {
    for (const auto& c : convs) {
        x = g.maxpool2d(g.relu(g.conv2d(x, c.weight, c.bias, Conv2dSpec{1, 1})));
    }
    return x;
}

std::array<std::size_t, 3> pooled_shape(std::size_t h, std::size_t w, const std::vector<std::size_t>& channels) {
    for (std::size_t i = 0; i < channels.size(); ++i) {
        h /= 2;
        w /= 2;
    }
    return {channels.back(), h, w};
}

template <typename T>
void add_linear(ParamSet<T>& set, const std::string& name, const LinearParams<T>& p) {
    set.add(name + ".weight", p.weight);
    set.add(name + ".bias", p.bias);
}

template <typename T>
void add_lstm(ParamSet<T>& set, const std::string& name, const LstmParams<T>& p) {
    set.add(name + ".w_input", p.w_input);
    set.add(name + ".w_hidden", p.w_hidden);
    set.add(name + ".bias", p.bias);
}

}  // namespace

// ------------------------------------------------------------------ configs

AnetConfig AnetConfig::toy() { return AnetConfig{}; }

AnetConfig AnetConfig::full() {
    AnetConfig cfg;
    cfg.conv_channels = {64, 128, 256, 512, 512};
    cfg.fc_dim = 4096;
    cfg.input_downsample = 1;
    return cfg;
}

void AnetConfig::validate() const {
    if (conv_channels.empty()) throw ConfigError("AnetConfig: at least one conv stage required");
    if (fc_dim < 2) throw ConfigError("AnetConfig: fc_dim must be >= 2");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("AnetConfig: dropout_p must be in [0, 1)");
    if (input_downsample < 1) throw ConfigError("AnetConfig: input_downsample must be >= 1");
    const auto out = conv_output_shape();
    if (out[1] == 0 || out[2] == 0) {
        throw ConfigError("AnetConfig: input too small for " + std::to_string(conv_channels.size()) + " pooling stages");
    }
}

std::array<std::size_t, 3> AnetConfig::backbone_input_shape() const {
    return {2, input_bins / input_downsample, input_frames / input_downsample};
}

std::array<std::size_t, 3> AnetConfig::conv_output_shape() const {
    const auto in = backbone_input_shape();
    return pooled_shape(in[1], in[2], conv_channels);
}

VnetConfig VnetConfig::toy() { return VnetConfig{}; }

VnetConfig VnetConfig::full() {
    VnetConfig cfg;
    cfg.conv_channels = {64, 128, 256, 512};
    cfg.embed_dim = 512;
    cfg.lstm_hidden = 256;
    cfg.input_downsample = 1;
    return cfg;
}

void VnetConfig::validate() const {
    if (conv_channels.empty()) throw ConfigError("VnetConfig: at least one conv stage required");
    if (embed_dim < 2) throw ConfigError("VnetConfig: embed_dim must be >= 2");
    if (lstm_hidden < 1) throw ConfigError("VnetConfig: lstm_hidden must be >= 1");
    if (n_frames < 1) throw ConfigError("VnetConfig: n_frames must be >= 1");
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ConfigError("VnetConfig: dropout_p must be in [0, 1)");
    if (input_downsample < 1) throw ConfigError("VnetConfig: input_downsample must be >= 1");
    const auto out = conv_output_shape();
    if (out[1] == 0 || out[2] == 0) {
        throw ConfigError("VnetConfig: frame too small for " + std::to_string(conv_channels.size()) + " pooling stages");
    }
}

std::array<std::size_t, 3> VnetConfig::frame_input_shape() const {
    return {kFrameChannels, kFrameHeight / input_downsample, kFrameWidth / input_downsample};
}

std::array<std::size_t, 3> VnetConfig::conv_output_shape() const {
    const auto in = frame_input_shape();
    return pooled_shape(in[1], in[2], conv_channels);
}

void JointConfig::validate() const {
    anet.validate();
    vnet.validate();
    if (n_audio_windows < 1) throw ConfigError("JointConfig: n_audio_windows must be >= 1");
}

// ------------------------------------------------------------------ inputs

std::vector<float> prepare_audio_input(const StftMap& map, const AnetConfig& cfg) {
    if (map.bins != cfg.input_bins || map.frames != cfg.input_frames) {
        throw DataError("STFT map is " + std::to_string(map.bins) + "x" + std::to_string(map.frames) +
                        ", model expects " + std::to_string(cfg.input_bins) + "x" + std::to_string(cfg.input_frames));
    }
    const auto shape = cfg.backbone_input_shape();
    const std::size_t ds = cfg.input_downsample;
    const std::size_t h = shape[1], w = shape[2];
    const float scale = 1.0f / static_cast<float>(ds * ds);
    std::vector<float> out(2 * h * w);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                float acc = 0.0f;
                for (std::size_t dy = 0; dy < ds; ++dy)
                    for (std::size_t dx = 0; dx < ds; ++dx) acc += map.at(y * ds + dy, x * ds + dx, c);
                out[(c * h + y) * w + x] = acc * scale;
            }
    return out;
}

std::vector<float> prepare_frame_input(const FrameImage& frame, const VnetConfig& cfg) {
    const auto shape = cfg.frame_input_shape();
    const std::size_t ds = cfg.input_downsample;
    const std::size_t h = shape[1], w = shape[2];
    const float scale = 1.0f / static_cast<float>(ds * ds);
    std::vector<float> out(kFrameChannels * h * w);
    for (std::size_t c = 0; c < kFrameChannels; ++c)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                float acc = 0.0f;
                for (std::size_t dy = 0; dy < ds; ++dy)
                    for (std::size_t dx = 0; dx < ds; ++dx) acc += frame.at(y * ds + dy, x * ds + dx, c);
                out[(c * h + y) * w + x] = acc * scale;
            }
    return out;
}

// ------------------------------------------------------------------ LSTM

template <typename T>
LstmParams<T> make_lstm_params(std::size_t input_dim, std::size_t hidden, Rng& rng) {
    const double bound_in = std::sqrt(6.0 / static_cast<double>(input_dim + hidden));
    const double bound_h = std::sqrt(6.0 / static_cast<double>(2 * hidden));
    LstmParams<T> p;
    p.w_input = uniform_tensor<T>({input_dim, 4 * hidden}, bound_in, rng);
    p.w_hidden = uniform_tensor<T>({hidden, 4 * hidden}, bound_h, rng);
    p.bias = Tensor<T>({4 * hidden}, true);
    for (std::size_t j = hidden; j < 2 * hidden; ++j) p.bias[j] = T(1);  // forget gate
    return p;
}

template <typename T>
LstmState<T> lstm_step(Graph<T>& g, const Tensor<T>& x_t, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                       const LstmParams<T>& p) {
    const std::size_t H = p.hidden();
    if (h_prev.rank() != 2 || h_prev.dim(1) != H || c_prev.shape() != h_prev.shape()) {
        throw ConfigError("lstm_step: state must be [B," + std::to_string(H) + "], got h" + shape_str(h_prev.shape()) +
                          " c" + shape_str(c_prev.shape()));
    }
    if (x_t.rank() != 2 || x_t.dim(1) != p.w_input.dim(0) || x_t.dim(0) != h_prev.dim(0)) {
        throw ConfigError("lstm_step: input " + shape_str(x_t.shape()) + " does not match w_input " +
                          shape_str(p.w_input.shape()));
    }
    auto gates = g.add(g.linear(x_t, p.w_input, p.bias), g.matmul(h_prev, p.w_hidden));
    auto i = g.sigmoid(g.slice(gates, 1, 0, H));
    auto f = g.sigmoid(g.slice(gates, 1, H, 2 * H));
    auto c_hat = g.tanh(g.slice(gates, 1, 2 * H, 3 * H));
    auto o = g.sigmoid(g.slice(gates, 1, 3 * H, 4 * H));
    auto c = g.add(g.mul(f, c_prev), g.mul(i, c_hat));
    auto h = g.mul(o, g.tanh(c));
    return {h, c};
}

template <typename T>
Tensor<T> bilstm(Graph<T>& g, const Tensor<T>& seq, const LstmParams<T>& fwd, const LstmParams<T>& bwd) {
    if (seq.rank() != 3 || seq.dim(1) < 1) {
        throw ConfigError("bilstm: expected [B,T,D] with T >= 1, got " + shape_str(seq.shape()));
    }
    if (fwd.hidden() != bwd.hidden()) {
        throw ConfigError("bilstm: forward and backward hidden widths differ");
    }
    const std::size_t B = seq.dim(0), steps = seq.dim(1), H = fwd.hidden();

    std::vector<Tensor<T>> xs;
    xs.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) xs.push_back(g.select(seq, 1, t));

    std::vector<Tensor<T>> h_fwd(steps), h_bwd(steps);
    LstmState<T> state{Tensor<T>({B, H}), Tensor<T>({B, H})};
    for (std::size_t t = 0; t < steps; ++t) {
        state = lstm_step(g, xs[t], state.h, state.c, fwd);
        h_fwd[t] = state.h;
    }
    state = {Tensor<T>({B, H}), Tensor<T>({B, H})};
    for (std::size_t t = steps; t-- > 0;) {
        state = lstm_step(g, xs[t], state.h, state.c, bwd);
        h_bwd[t] = state.h;
    }
    std::vector<Tensor<T>> merged;
    merged.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) merged.push_back(g.concat({h_fwd[t], h_bwd[t]}, 1));
    return g.stack(merged, 1);
}

// ------------------------------------------------------------------ ANet

template <typename T>
Anet<T>::Anet(AnetConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(derive_seed(init_seed, "init/anet"));
    std::size_t in = 2;
    for (auto ch : cfg_.conv_channels) {
        convs.push_back(make_conv<T>(in, ch, rng));
        in = ch;
    }
    const auto o = cfg_.conv_output_shape();
    fc1 = make_linear<T>(o[0] * o[1] * o[2], cfg_.fc_dim, rng);
    fc2 = make_linear<T>(cfg_.fc_dim, cfg_.fc_dim, rng);
    out = make_linear<T>(cfg_.fc_dim, 2, rng);
}

template <typename T>
Tensor<T> Anet<T>::backbone(Graph<T>& g, const Tensor<T>& x, Rng* dropout_rng) const {
    const auto in = cfg_.backbone_input_shape();
    if (x.rank() != 4 || x.dim(1) != in[0] || x.dim(2) != in[1] || x.dim(3) != in[2]) {
        throw ConfigError("anet backbone: expected [B," + std::to_string(in[0]) + "," + std::to_string(in[1]) + "," +
                          std::to_string(in[2]) + "], got " + shape_str(x.shape()));
    }
    const std::size_t B = x.dim(0);
    auto h = conv_stages(g, x, convs);
    h = g.reshape(h, {B, h.size() / B});
    h = g.linear(h, fc1.weight, fc1.bias);
    h = g.dropout(h, cfg_.dropout_p, dropout_rng);
    return g.linear(h, fc2.weight, fc2.bias);
}

template <typename T>
Tensor<T> Anet<T>::head(Graph<T>& g, const Tensor<T>& feature) const {
    if (feature.rank() != 2 || feature.dim(1) != cfg_.fc_dim) {
        throw ConfigError("anet head: expected [B," + std::to_string(cfg_.fc_dim) + "], got " + shape_str(feature.shape()));
    }
    return g.tanh(g.linear(feature, out.weight, out.bias));
}

template <typename T>
void Anet<T>::register_params(ParamSet<T>& set, bool with_head) const {
    for (std::size_t i = 0; i < convs.size(); ++i) {
        set.add("anet.conv" + std::to_string(i) + ".weight", convs[i].weight);
        set.add("anet.conv" + std::to_string(i) + ".bias", convs[i].bias);
    }
    add_linear(set, "anet.fc1", fc1);
    add_linear(set, "anet.fc2", fc2);
    if (with_head) add_linear(set, "anet.head", out);
}

// ------------------------------------------------------------------ VNet

template <typename T>
Vnet<T>::Vnet(VnetConfig cfg, std::uint64_t init_seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(derive_seed(init_seed, "init/vnet"));
    std::size_t in = kFrameChannels;
    for (auto ch : cfg_.conv_channels) {
        convs.push_back(make_conv<T>(in, ch, rng));
        in = ch;
    }
    const auto o = cfg_.conv_output_shape();
    embedding = make_linear<T>(o[0] * o[1] * o[2], cfg_.embed_dim, rng);
    lstm_forward = make_lstm_params<T>(cfg_.embed_dim, cfg_.lstm_hidden, rng);
    lstm_backward = make_lstm_params<T>(cfg_.embed_dim, cfg_.lstm_hidden, rng);
    out = make_linear<T>(cfg_.feature_width(), 2, rng);
}

template <typename T>
Tensor<T> Vnet<T>::embed(Graph<T>& g, const Tensor<T>& clip, Rng* dropout_rng) const {
    const auto in = cfg_.frame_input_shape();
    if (clip.rank() != 5 || clip.dim(2) != in[0] || clip.dim(3) != in[1] || clip.dim(4) != in[2]) {
        throw ConfigError("vnet: expected clip [B,N," + std::to_string(in[0]) + "," + std::to_string(in[1]) + "," +
                          std::to_string(in[2]) + "], got " + shape_str(clip.shape()));
    }
    if (clip.dim(1) != cfg_.n_frames) {
        throw ConfigError("vnet: clip has " + std::to_string(clip.dim(1)) + " frames, model expects " +
                          std::to_string(cfg_.n_frames));
    }
    const std::size_t B = clip.dim(0), N = clip.dim(1);
    auto frames = g.reshape(clip, {B * N, in[0], in[1], in[2]});
    auto h = conv_stages(g, frames, convs);
    h = g.reshape(h, {B * N, h.size() / (B * N)});
    h = g.linear(h, embedding.weight, embedding.bias);
    h = g.dropout(h, cfg_.dropout_p, dropout_rng);
    return g.reshape(h, {B, N, cfg_.embed_dim});
}

template <typename T>
Tensor<T> Vnet<T>::backbone(Graph<T>& g, const Tensor<T>& clip, Rng* dropout_rng) const {
    auto seq = bilstm(g, embed(g, clip, dropout_rng), lstm_forward, lstm_backward);
    return g.mean_axis(seq, 1);
}

template <typename T>
Tensor<T> Vnet<T>::head(Graph<T>& g, const Tensor<T>& feature) const {
    if (feature.rank() != 2 || feature.dim(1) != cfg_.feature_width()) {
        throw ConfigError("vnet head: expected [B," + std::to_string(cfg_.feature_width()) + "], got " +
                          shape_str(feature.shape()));
    }
    return g.tanh(g.linear(feature, out.weight, out.bias));
}

template <typename T>
void Vnet<T>::register_params(ParamSet<T>& set, bool with_head) const {
    for (std::size_t i = 0; i < convs.size(); ++i) {
        set.add("vnet.conv" + std::to_string(i) + ".weight", convs[i].weight);
        set.add("vnet.conv" + std::to_string(i) + ".bias", convs[i].bias);
    }
    add_linear(set, "vnet.embed", embedding);
    add_lstm(set, "vnet.lstm_fwd", lstm_forward);
    add_lstm(set, "vnet.lstm_bwd", lstm_backward);
    if (with_head) add_linear(set, "vnet.head", out);
}

// ------------------------------------------------------------------ stages

std::string to_string(Stage stage) {
    switch (stage) {
        case Stage::anet: return "anet";
        case Stage::vnet: return "vnet";
        case Stage::joint: return "joint";
    }
    return "?";
}

Stage parse_stage(const std::string& text) {
    if (text == "anet") return Stage::anet;
    if (text == "vnet") return Stage::vnet;
    if (text == "joint") return Stage::joint;
    throw ConfigError("unknown stage '" + text + "' (expected anet, vnet or joint)");
}

template <typename T>
AffectModel<T>::AffectModel(Stage stage, JointConfig cfg, std::uint64_t seed) : stage_(stage), cfg_(std::move(cfg)) {
    cfg_.validate();
    const std::uint64_t init = derive_seed(seed, "init");
    if (uses_audio()) {
        anet_.emplace(cfg_.anet, init);
        anet_->register_params(params_, stage_ == Stage::anet);
    }
    if (uses_video()) {
        vnet_.emplace(cfg_.vnet, init);
        vnet_->register_params(params_, stage_ == Stage::vnet);
    }
    if (stage_ == Stage::joint) {
        Rng rng(derive_seed(init, "joint"));
        joint_head_ = make_linear<T>(cfg_.fusion_width(), 2, rng);
        add_linear(params_, "joint.head", joint_head_);
        for (auto& [name, t] : params_) {
            if ((cfg_.freeze_anet && name.starts_with("anet.")) || (cfg_.freeze_vnet && name.starts_with("vnet."))) {
                t.set_requires_grad(false);
            }
        }
    }
}

template <typename T>
const Anet<T>& AffectModel<T>::anet() const {
    if (!anet_) throw ConfigError("stage " + to_string(stage_) + " has no audio network");
    return *anet_;
}

template <typename T>
const Vnet<T>& AffectModel<T>::vnet() const {
    if (!vnet_) throw ConfigError("stage " + to_string(stage_) + " has no video network");
    return *vnet_;
}

template <typename T>
Tensor<T> AffectModel<T>::audio_feature(Graph<T>& g, const Tensor<T>& audio, Rng* dropout_rng) const {
    const auto in = cfg_.anet.backbone_input_shape();
    if (audio.rank() != 5 || audio.dim(2) != in[0] || audio.dim(3) != in[1] || audio.dim(4) != in[2]) {
        throw ConfigError("audio input must be [B,windows," + std::to_string(in[0]) + "," + std::to_string(in[1]) + "," +
                          std::to_string(in[2]) + "], got " + shape_str(audio.shape()));
    }
    if (audio.dim(1) != audio_windows()) {
        throw ConfigError("expected " + std::to_string(audio_windows()) + " audio windows per utterance, got " +
                          std::to_string(audio.dim(1)));
    }
    const std::size_t B = audio.dim(0), n = audio.dim(1);
    auto flat = g.reshape(audio, {B * n, in[0], in[1], in[2]});
    auto feats = anet().backbone(g, flat, dropout_rng);
    return g.mean_axis(g.reshape(feats, {B, n, cfg_.anet.fc_dim}), 1);
}

template <typename T>
Tensor<T> AffectModel<T>::forward(Graph<T>& g, const ModelInputs<T>& inputs, Rng* dropout_rng) const {
    switch (stage_) {
        case Stage::anet:
            return anet().head(g, audio_feature(g, inputs.audio, dropout_rng));
        case Stage::vnet:
            return vnet().head(g, vnet().backbone(g, inputs.video, dropout_rng));
        case Stage::joint: {
            auto a = audio_feature(g, inputs.audio, dropout_rng);
            auto v = vnet().backbone(g, inputs.video, dropout_rng);
            if (a.dim(0) != v.dim(0)) throw ConfigError("joint: audio and video batch sizes differ");
            auto fused = g.concat({a, v}, 1);
            return g.tanh(g.linear(fused, joint_head_.weight, joint_head_.bias));
        }
    }
    throw ConfigError("unknown stage");
}

template <typename T>
ParamSet<T> AffectModel<T>::trainable_params() const {
    ParamSet<T> out;
    for (const auto& [name, t] : params_) {
        if (t.requires_grad()) out.add(name, t);
    }
    return out;
}

template LstmState<float> lstm_step(Graph<float>&, const Tensor<float>&, const Tensor<float>&, const Tensor<float>&,
                                    const LstmParams<float>&);
template LstmState<double> lstm_step(Graph<double>&, const Tensor<double>&, const Tensor<double>&, const Tensor<double>&,
                                     const LstmParams<double>&);
template Tensor<float> bilstm(Graph<float>&, const Tensor<float>&, const LstmParams<float>&, const LstmParams<float>&);
template Tensor<double> bilstm(Graph<double>&, const Tensor<double>&, const LstmParams<double>&,
                               const LstmParams<double>&);
template LstmParams<float> make_lstm_params(std::size_t, std::size_t, Rng&);
template LstmParams<double> make_lstm_params(std::size_t, std::size_t, Rng&);
template class Anet<float>;
template class Anet<double>;
template class Vnet<float>;
template class Vnet<double>;
template class AffectModel<float>;
template class AffectModel<double>;

}  // namespace avemo
