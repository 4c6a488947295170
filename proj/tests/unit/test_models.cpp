#include "avemo/error.hpp"
#include "avemo/models.hpp"
#include "avemo/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace avemo;
using T = Tensor<double>;

namespace {

T random_tensor(Shape shape, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    T t(std::move(shape));
    for (auto& v : t.data()) v = rng.uniform(-scale, scale);
    return t;
}

JointConfig small_config() {
    JointConfig cfg;
    cfg.anet.conv_channels = {4, 8};
    cfg.anet.fc_dim = 16;
    cfg.anet.input_downsample = 8;
    cfg.vnet.conv_channels = {4};
    cfg.vnet.embed_dim = 8;
    cfg.vnet.lstm_hidden = 5;
    cfg.vnet.n_frames = 4;
    cfg.vnet.input_downsample = 8;
    cfg.n_audio_windows = 3;
    return cfg;
}

void zero_all(LinearParams<double>& p) {
    for (auto& v : p.weight.data()) v = 0.0;
    for (auto& v : p.bias.data()) v = 0.0;
}

void zero_all(LstmParams<double>& p) {
    for (auto* t : {&p.w_input, &p.w_hidden, &p.bias}) {
        for (auto& v : t->data()) v = 0.0;
    }
}

}  // namespace

TEST(Config, ToyAnetShapes) {
    auto cfg = AnetConfig::toy();
    EXPECT_EQ(cfg.backbone_input_shape(), (std::array<std::size_t, 3>{2, 64, 75}));
    EXPECT_EQ(cfg.conv_output_shape(), (std::array<std::size_t, 3>{32, 8, 9}));
}

TEST(Config, FullAnetShapes) {
    auto cfg = AnetConfig::full();
    EXPECT_EQ(cfg.conv_channels.size(), 5u);
    EXPECT_EQ(cfg.backbone_input_shape(), (std::array<std::size_t, 3>{2, 257, 300}));
    EXPECT_EQ(cfg.conv_output_shape(), (std::array<std::size_t, 3>{512, 8, 9}));
    EXPECT_EQ(cfg.fc_dim, 4096u);
}

TEST(Config, WidthsAndValidation) {
    EXPECT_EQ(VnetConfig::toy().feature_width(), 64u);
    EXPECT_EQ(VnetConfig::toy().n_frames, 16u);
    JointConfig j;
    j.anet = AnetConfig::toy();
    j.vnet = VnetConfig::toy();
    EXPECT_EQ(j.n_audio_windows, 4u);
    EXPECT_EQ(j.fusion_width(), 128u);
    auto bad = AnetConfig::toy();
    bad.dropout_p = 1.0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = AnetConfig::toy();
    bad.conv_channels.assign(9, 4);
    EXPECT_THROW(bad.validate(), ConfigError);
    EXPECT_THROW(parse_stage("fusion"), ConfigError);
    EXPECT_EQ(parse_stage(to_string(Stage::joint)), Stage::joint);
}

TEST(Anet, ToyForwardShape) {
    Anet<double> net(AnetConfig::toy(), 1);
    Graph<double> g;
    auto x = random_tensor({2, 2, 64, 75}, 2);
    auto feat = net.backbone(g, x, nullptr);
    EXPECT_EQ(feat.shape(), (Shape{2, 64}));
    auto pred = net.head(g, feat);
    EXPECT_EQ(pred.shape(), (Shape{2, 2}));
    for (double v : pred.data()) {
        EXPECT_GT(v, -1.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(Anet, ZeroHeadPredictsZero) {
    Anet<double> net(AnetConfig::toy(), 1);
    zero_all(net.out);
    Graph<double> g;
    auto pred = net.head(g, random_tensor({3, 64}, 4, 10.0));
    for (double v : pred.data()) EXPECT_EQ(v, 0.0);
}

TEST(Anet, HeadRangeUnderLargeInputs) {
    Anet<double> net(AnetConfig::toy(), 5);
    Graph<double> g;
    auto pred = net.head(g, random_tensor({16, 64}, 6, 3.0));
    for (double v : pred.data()) {
        EXPECT_GE(v, -1.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Lstm, ZerosStayZero) {
    Rng rng(1);
    auto p = make_lstm_params<double>(3, 4, rng);
    zero_all(p);
    Graph<double> g;
    auto s = lstm_step(g, random_tensor({2, 3}, 1), T({2, 4}), T({2, 4}), p);
    for (double v : s.h.data()) EXPECT_EQ(v, 0.0);
    for (double v : s.c.data()) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, ForgetGateCarriesCell) {
    Rng rng(1);
    auto p = make_lstm_params<double>(3, 2, rng);
    zero_all(p);
    const std::size_t H = 2;
    for (std::size_t k = H; k < 2 * H; ++k) p.bias[k] = 20.0;
    Graph<double> g;
    auto s = lstm_step(g, random_tensor({1, 3}, 2), T({1, 2}), T::full({1, 2}, 1.0), p);
    const double sig20 = 1.0 / (1.0 + std::exp(-20.0));
    for (double c : s.c.data()) EXPECT_NEAR(c, sig20, 1e-12);
    EXPECT_NEAR(s.c[0], 1.0, 1e-8);
    for (double h : s.h.data()) EXPECT_NEAR(h, 0.5 * std::tanh(sig20), 1e-12);
}

TEST(Lstm, DefaultForgetBiasIsOne) {
    Rng rng(1);
    auto p = make_lstm_params<double>(3, 2, rng);
    EXPECT_EQ(p.bias.shape(), (Shape{8}));
    EXPECT_EQ(p.bias[0], 0.0);
    EXPECT_EQ(p.bias[2], 1.0);
    EXPECT_EQ(p.bias[3], 1.0);
    EXPECT_EQ(p.bias[4], 0.0);
}

TEST(BiLstm, SingleStep) {
    Rng rng(3);
    auto fwd = make_lstm_params<double>(4, 3, rng);
    auto bwd = make_lstm_params<double>(4, 3, rng);
    auto seq = random_tensor({2, 1, 4}, 8);
    Graph<double> g;
    auto out = bilstm(g, seq, fwd, bwd);
    EXPECT_EQ(out.shape(), (Shape{2, 1, 6}));
    auto x = g.reshape(seq, {2, 4});
    auto hf = lstm_step(g, x, T({2, 3}), T({2, 3}), fwd).h;
    auto hb = lstm_step(g, x, T({2, 3}), T({2, 3}), bwd).h;
    for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_EQ(out[b * 6 + k], hf[b * 3 + k]);
            EXPECT_EQ(out[b * 6 + 3 + k], hb[b * 3 + k]);
        }
    }
}

TEST(BiLstm, BackwardHalfIsReversedForwardPass) {
    Rng rng(4);
    auto p = make_lstm_params<double>(2, 3, rng);
    const std::size_t Tn = 5;
    auto seq = random_tensor({1, Tn, 2}, 9);
    std::vector<double> rev(seq.size());
    for (std::size_t t = 0; t < Tn; ++t) {
        rev[2 * t] = seq[2 * (Tn - 1 - t)];
        rev[2 * t + 1] = seq[2 * (Tn - 1 - t) + 1];
    }
    Graph<double> g;
    auto a = bilstm(g, seq, p, p);
    auto b = bilstm(g, T({1, Tn, 2}, rev), p, p);
    for (std::size_t t = 0; t < Tn; ++t) {
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_NEAR(a[t * 6 + 3 + k], b[(Tn - 1 - t) * 6 + k], 1e-15);
        }
    }
}

TEST(Vnet, ToyFeatureWidth) {
    Vnet<double> net(VnetConfig::toy(), 1);
    auto s = VnetConfig::toy().frame_input_shape();
    Graph<double> g;
    auto feat = net.backbone(g, random_tensor({1, 16, s[0], s[1], s[2]}, 3), nullptr);
    EXPECT_EQ(feat.shape(), (Shape{1, 64}));
}

TEST(Vnet, ZeroLstmGivesZeroFeature) {
    auto cfg = small_config().vnet;
    Vnet<double> net(cfg, 2);
    zero_all(net.lstm_forward);
    zero_all(net.lstm_backward);
    zero_all(net.out);
    auto s = cfg.frame_input_shape();
    auto frame = random_tensor({s[0] * s[1] * s[2]}, 5);
    std::vector<double> clip;
    for (std::size_t i = 0; i < cfg.n_frames; ++i) clip.insert(clip.end(), frame.data().begin(), frame.data().end());
    Graph<double> g;
    auto feat = net.backbone(g, T({1, cfg.n_frames, s[0], s[1], s[2]}, clip), nullptr);
    for (double v : feat.data()) EXPECT_EQ(v, 0.0);
    auto pred = net.head(g, feat);
    for (double v : pred.data()) EXPECT_EQ(v, 0.0);
}

TEST(Vnet, EmbedderSharedAcrossFrames) {
    auto cfg = small_config().vnet;
    Vnet<double> net(cfg, 3);
    auto s = cfg.frame_input_shape();
    auto frame = random_tensor({s[0] * s[1] * s[2]}, 6);
    std::vector<double> clip;
    for (std::size_t i = 0; i < cfg.n_frames; ++i) clip.insert(clip.end(), frame.data().begin(), frame.data().end());
    Graph<double> g;
    auto emb = net.embed(g, T({1, cfg.n_frames, s[0], s[1], s[2]}, clip), nullptr);
    ASSERT_EQ(emb.shape(), (Shape{1, cfg.n_frames, cfg.embed_dim}));
    for (std::size_t t = 1; t < cfg.n_frames; ++t) {
        for (std::size_t k = 0; k < cfg.embed_dim; ++k) EXPECT_EQ(emb[t * cfg.embed_dim + k], emb[k]);
    }
}

TEST(Joint, IdenticalWindowsMatchSingleWindow) {
    auto cfg = small_config();
    AffectModel<double> model(Stage::joint, cfg, 4);
    auto s = cfg.anet.backbone_input_shape();
    auto window = random_tensor({s[0] * s[1] * s[2]}, 7);
    std::vector<double> audio;
    for (std::size_t i = 0; i < cfg.n_audio_windows; ++i)
        audio.insert(audio.end(), window.data().begin(), window.data().end());
    Graph<double> g;
    auto averaged = model.audio_feature(g, T({1, cfg.n_audio_windows, s[0], s[1], s[2]}, audio), nullptr);
    auto single = model.anet().backbone(g, T({1, s[0], s[1], s[2]}, {window.data().begin(), window.data().end()}), nullptr);
    ASSERT_EQ(averaged.shape(), single.shape());
    for (std::size_t i = 0; i < single.size(); ++i) EXPECT_EQ(averaged[i], single[i]);
}

TEST(Joint, WindowOrderIrrelevant) {
    auto cfg = small_config();
    AffectModel<double> model(Stage::joint, cfg, 4);
    auto s = cfg.anet.backbone_input_shape();
    const std::size_t block = s[0] * s[1] * s[2];
    auto audio = random_tensor({1, cfg.n_audio_windows, s[0], s[1], s[2]}, 8);
    std::vector<double> permuted;
    for (std::size_t w : {2u, 0u, 1u}) {
        permuted.insert(permuted.end(), audio.data().begin() + w * block, audio.data().begin() + (w + 1) * block);
    }
    Graph<double> g;
    auto a = model.audio_feature(g, audio, nullptr);
    auto b = model.audio_feature(g, T(audio.shape(), permuted), nullptr);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(Joint, ForwardShapeAndParams) {
    auto cfg = small_config();
    AffectModel<double> model(Stage::joint, cfg, 4);
    auto sa = cfg.anet.backbone_input_shape();
    auto sv = cfg.vnet.frame_input_shape();
    ModelInputs<double> in{random_tensor({2, cfg.n_audio_windows, sa[0], sa[1], sa[2]}, 1),
                           random_tensor({2, cfg.vnet.n_frames, sv[0], sv[1], sv[2]}, 2)};
    Graph<double> g;
    auto pred = model.forward(g, in, nullptr);
    EXPECT_EQ(pred.shape(), (Shape{2, 2}));
    EXPECT_TRUE(model.params().contains("joint.head.weight"));
    EXPECT_EQ(model.params().at("joint.head.weight").shape(), (Shape{cfg.fusion_width(), 2}));
    EXPECT_FALSE(model.params().contains("anet.head.weight"));
    EXPECT_FALSE(model.params().contains("vnet.head.weight"));
}

TEST(Joint, FreezeExcludesSubnetwork) {
    auto cfg = small_config();
    cfg.freeze_anet = true;
    AffectModel<double> model(Stage::joint, cfg, 4);
    auto trainable = model.trainable_params();
    for (const auto& [name, t] : trainable) EXPECT_NE(name.rfind("anet.", 0), 0u) << name;
    EXPECT_FALSE(trainable.empty());
    EXPECT_LT(trainable.size(), model.params().size());
}

TEST(Model, SeedsReproduceAndDiffer) {
    auto cfg = small_config();
    AffectModel<double> a(Stage::anet, cfg, 9), b(Stage::anet, cfg, 9), c(Stage::anet, cfg, 10);
    auto& wa = a.params().at("anet.fc1.weight");
    EXPECT_TRUE(std::equal(wa.data().begin(), wa.data().end(), b.params().at("anet.fc1.weight").data().begin()));
    EXPECT_FALSE(std::equal(wa.data().begin(), wa.data().end(), c.params().at("anet.fc1.weight").data().begin()));
    EXPECT_THROW(a.vnet(), ConfigError);
    EXPECT_EQ(a.audio_windows(), 1u);
}

TEST(Prepare, DownsampledChannelFirst) {
    AnetConfig cfg = AnetConfig::toy();
    StftMap map;
    map.bins = 257;
    map.frames = 300;
    map.values.assign(257 * 300 * 2, 0.0f);
    for (std::size_t b = 0; b < 4; ++b)
        for (std::size_t t = 0; t < 4; ++t) map.at(b, t, 1) = 2.0f;
    auto block = prepare_audio_input(map, cfg);
    ASSERT_EQ(block.size(), 2u * 64u * 75u);
    EXPECT_EQ(block[0], 0.0f);
    EXPECT_EQ(block[64 * 75], 2.0f);
    EXPECT_EQ(block[64 * 75 + 1], 0.0f);

    FrameImage frame;
    for (std::size_t y = 0; y < kFrameHeight; ++y)
        for (std::size_t x = 0; x < kFrameWidth; ++x) frame.at(y, x, 2) = 0.5f;
    auto f = prepare_frame_input(frame, VnetConfig::toy());
    ASSERT_EQ(f.size(), 3u * 28u * 24u);
    EXPECT_EQ(f[0], 0.0f);
    EXPECT_EQ(f[2 * 28 * 24], 0.5f);
}
