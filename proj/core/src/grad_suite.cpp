#include "avemo/error.hpp"
#include "avemo/grad_check.hpp"
#include "avemo/models.hpp"
#include "avemo/objectives.hpp"
#include "avemo/trainer.hpp"

#include <algorithm>
#include <map>

namespace avemo {

namespace {

using T = Tensor<double>;
using G = Graph<double>;
using Inputs = std::vector<T>;

T random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(shape_size(shape));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return T(std::move(shape), std::move(v));
}

// Values bounded away from zero, random sign.
T off_zero_tensor(Shape shape, Rng& rng) {
    std::vector<double> v(shape_size(shape));
    for (auto& x : v) x = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.1, 1.0);
    return T(std::move(shape), std::move(v));
}

// Distinct values at least 0.05 apart, so no 2x2 window has a near-tie.
T spaced_tensor(Shape shape, Rng& rng) {
    const std::size_t n = shape_size(shape);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 0.1 * static_cast<double>(i) + rng.uniform(0.0, 0.05);
    for (std::size_t i = n; i > 1; --i) {
        std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    for (auto& x : v) x = x / static_cast<double>(n) * 2.0 - 1.0;
    return T(std::move(shape), std::move(v));
}

// sum(y * w) for a fixed random w, so every output element gets a distinct weight.
struct Projector {
    std::map<Shape, T> weights;
    Rng rng;
    explicit Projector(std::uint64_t seed) : rng(seed) {}
    T operator()(G& g, const T& y) {
        auto it = weights.find(y.shape());
        if (it == weights.end()) it = weights.emplace(y.shape(), random_tensor(y.shape(), rng)).first;
        return g.sum(g.mul(y, it->second));
    }
};

using CaseFn = GradCheckReport (*)(double tol, std::uint64_t seed);

template <typename Body>
GradCheckReport unary_case(double tol, std::uint64_t seed, Inputs inputs, Body body) {
    auto proj = std::make_shared<Projector>(derive_seed(seed, "proj"));
    return grad_check([=](G& g, const Inputs& x) { return (*proj)(g, body(g, x)); }, inputs, tol);
}

GradCheckReport case_linear(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({3, 4}, r), random_tensor({4, 5}, r), random_tensor({5}, r)},
                      [](G& g, const Inputs& x) { return g.linear(x[0], x[1], x[2]); });
}

GradCheckReport case_matmul(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({3, 4}, r), random_tensor({4, 2}, r)},
                      [](G& g, const Inputs& x) { return g.matmul(x[0], x[1]); });
}

GradCheckReport case_conv2d(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed,
                      {random_tensor({2, 2, 5, 4}, r), random_tensor({3, 2, 3, 3}, r), random_tensor({3}, r)},
                      [](G& g, const Inputs& x) { return g.conv2d(x[0], x[1], x[2], Conv2dSpec{1, 1}); });
}

GradCheckReport case_conv2d_strided(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed,
                      {random_tensor({1, 2, 7, 5}, r), random_tensor({2, 2, 3, 3}, r), random_tensor({2}, r)},
                      [](G& g, const Inputs& x) { return g.conv2d(x[0], x[1], x[2], Conv2dSpec{2, 0}); });
}

GradCheckReport case_maxpool2d(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {spaced_tensor({2, 2, 5, 4}, r)},
                      [](G& g, const Inputs& x) { return g.maxpool2d(x[0]); });
}

GradCheckReport case_avgpool2d(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({1, 2, 6, 7}, r)},
                      [](G& g, const Inputs& x) { return g.avgpool2d(x[0], 3); });
}

GradCheckReport case_tanh(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({3, 5}, r, -2.0, 2.0)},
                      [](G& g, const Inputs& x) { return g.tanh(x[0]); });
}

GradCheckReport case_sigmoid(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({3, 5}, r, -4.0, 4.0)},
                      [](G& g, const Inputs& x) { return g.sigmoid(x[0]); });
}

GradCheckReport case_relu(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {off_zero_tensor({3, 5}, r)}, [](G& g, const Inputs& x) { return g.relu(x[0]); });
}

// A fresh generator per evaluation keeps the mask fixed across perturbations.
GradCheckReport case_dropout(double tol, std::uint64_t seed) {
    Rng r(seed);
    const std::uint64_t mask_seed = derive_seed(seed, "mask");
    return unary_case(tol, seed, {random_tensor({4, 6}, r)}, [mask_seed](G& g, const Inputs& x) {
        Rng mask(mask_seed);
        return g.dropout(x[0], 0.5, &mask);
    });
}

GradCheckReport case_add(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({2, 3}, r), random_tensor({2, 3}, r)},
                      [](G& g, const Inputs& x) { return g.add(x[0], x[1]); });
}

GradCheckReport case_sub(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({2, 3}, r), random_tensor({2, 3}, r)},
                      [](G& g, const Inputs& x) { return g.sub(x[0], x[1]); });
}

GradCheckReport case_mul(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({2, 3}, r), random_tensor({2, 3}, r)},
                      [](G& g, const Inputs& x) { return g.mul(x[0], x[1]); });
}

GradCheckReport case_div_or_zero(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({2, 3}, r), random_tensor({2, 3}, r, 0.5, 2.0)},
                      [](G& g, const Inputs& x) { return g.div_or_zero(x[0], x[1]); });
}

// Zero denominators are constants here: the function is flat in a there.
GradCheckReport case_div_by_zero(double tol, std::uint64_t seed) {
    Rng r(seed);
    const T den({2, 3}, {0.7, 0.0, -1.3, 0.0, 2.0, 0.0});
    return unary_case(tol, seed, {random_tensor({2, 3}, r)},
                      [den](G& g, const Inputs& x) { return g.div_or_zero(x[0], den); });
}

GradCheckReport case_affine(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({2, 3}, r)},
                      [](G& g, const Inputs& x) { return g.affine(x[0], -0.75, 0.3); });
}

GradCheckReport case_sum(double tol, std::uint64_t seed) {
    Rng r(seed);
    return grad_check([](G& g, const Inputs& x) { return g.tanh(g.sum(x[0])); }, {random_tensor({2, 3}, r)}, tol);
}

GradCheckReport case_mean(double tol, std::uint64_t seed) {
    Rng r(seed);
    return grad_check([](G& g, const Inputs& x) { return g.tanh(g.mean(x[0])); }, {random_tensor({2, 3}, r)}, tol);
}

GradCheckReport case_mean_axis(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({2, 4, 3}, r)},
                      [](G& g, const Inputs& x) { return g.mean_axis(x[0], 1); });
}

GradCheckReport case_broadcast(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({1}, r)},
                      [](G& g, const Inputs& x) { return g.broadcast(x[0], {2, 3}); });
}

GradCheckReport case_reshape(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({2, 6}, r)},
                      [](G& g, const Inputs& x) { return g.reshape(x[0], {3, 2, 2}); });
}

GradCheckReport case_concat(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({2, 3}, r), random_tensor({2, 2}, r)},
                      [](G& g, const Inputs& x) { return g.concat({x[0], x[1]}, 1); });
}

GradCheckReport case_stack(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({2, 3}, r), random_tensor({2, 3}, r)},
                      [](G& g, const Inputs& x) { return g.stack({x[0], x[1]}, 1); });
}

GradCheckReport case_slice(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({2, 5, 2}, r)},
                      [](G& g, const Inputs& x) { return g.slice(x[0], 1, 1, 4); });
}

GradCheckReport case_select(double tol, std::uint64_t seed) {
    Rng r(seed);
    return unary_case(tol, seed, {random_tensor({2, 3, 2}, r)},
                      [](G& g, const Inputs& x) { return g.select(x[0], 1, 2); });
}

LstmParams<double> lstm_from(const Inputs& x, std::size_t offset) {
    return {x[offset], x[offset + 1], x[offset + 2]};
}

GradCheckReport case_lstm_step(double tol, std::uint64_t seed) {
    Rng r(seed);
    const std::size_t D = 3, H = 4;
    auto p = make_lstm_params<double>(D, H, r);
    auto proj = std::make_shared<Projector>(derive_seed(seed, "proj"));
    return grad_check(
        [proj](G& g, const Inputs& x) {
            const auto s = lstm_step(g, x[0], x[1], x[2], lstm_from(x, 3));
            return g.add((*proj)(g, s.h), (*proj)(g, g.affine(s.c, 0.5, 0.0)));
        },
        {random_tensor({2, D}, r), random_tensor({2, H}, r), random_tensor({2, H}, r), p.w_input, p.w_hidden,
         p.bias},
        tol);
}

GradCheckReport case_bilstm(double tol, std::uint64_t seed) {
    Rng r(seed);
    const std::size_t D = 3, H = 2;
    auto f = make_lstm_params<double>(D, H, r);
    auto b = make_lstm_params<double>(D, H, r);
    return unary_case(tol, seed,
                      {random_tensor({2, 4, D}, r), f.w_input, f.w_hidden, f.bias, b.w_input, b.w_hidden, b.bias},
                      [](G& g, const Inputs& x) { return bilstm(g, x[0], lstm_from(x, 1), lstm_from(x, 4)); });
}

GradCheckReport case_mse_loss(double tol, std::uint64_t seed) {
    Rng r(seed);
    return grad_check([](G& g, const Inputs& x) { return mse_loss(g, x[0], x[1]); },
                      {random_tensor({4, 2}, r), random_tensor({4, 2}, r)}, tol);
}

GradCheckReport case_ccc_loss(double tol, std::uint64_t seed) {
    Rng r(seed);
    return grad_check([](G& g, const Inputs& x) { return ccc_loss(g, x[0], x[1]); },
                      {random_tensor({5, 2}, r), random_tensor({5, 2}, r)}, tol);
}

// Miniature models: same code paths as the toy networks, few enough
// parameters for element-wise central differences.
JointConfig micro_config() {
    JointConfig cfg;
    cfg.anet.conv_channels = {2, 3};
    cfg.anet.fc_dim = 4;
    cfg.anet.input_bins = 16;
    cfg.anet.input_frames = 12;
    cfg.anet.input_downsample = 2;
    cfg.vnet.conv_channels = {2};
    cfg.vnet.embed_dim = 4;
    cfg.vnet.lstm_hidden = 3;
    cfg.vnet.n_frames = 4;
    cfg.vnet.input_downsample = 16;
    cfg.n_audio_windows = 2;
    return cfg;
}

GradCheckReport model_case(Stage stage, double tol, std::uint64_t seed) {
    const auto cfg = micro_config();
    auto model = std::make_shared<AffectModel<double>>(stage, cfg, seed);
    Rng r(derive_seed(seed, "data"));
    const std::size_t B = 2;
    ModelInputs<double> in;
    std::vector<T> targets;
    if (model->uses_audio()) {
        const auto s = cfg.anet.backbone_input_shape();
        in.audio = random_tensor({B, model->audio_windows(), s[0], s[1], s[2]}, r);
        targets.push_back(in.audio);
    }
    if (model->uses_video()) {
        const auto s = cfg.vnet.frame_input_shape();
        in.video = random_tensor({B, cfg.vnet.n_frames, s[0], s[1], s[2]}, r, 0.0, 1.0);
        targets.push_back(in.video);
    }
    const T label = random_tensor({B, 2}, r, -0.8, 0.8);
    for (auto& [name, p] : model->params()) targets.push_back(p);
    const std::uint64_t mask_seed = derive_seed(seed, "mask");
    return grad_check_shared(
        [model, in, label, mask_seed](G& g) {
            Rng mask(mask_seed);
            return stage_loss(g, model->stage(), model->forward(g, in, &mask), label);
        },
        targets, tol);
}

GradCheckReport case_anet(double tol, std::uint64_t seed) { return model_case(Stage::anet, tol, seed); }
GradCheckReport case_vnet(double tol, std::uint64_t seed) { return model_case(Stage::vnet, tol, seed); }
GradCheckReport case_joint(double tol, std::uint64_t seed) { return model_case(Stage::joint, tol, seed); }

const std::vector<std::pair<std::string, CaseFn>>& registry() {
    static const std::vector<std::pair<std::string, CaseFn>> cases{
        {"linear", case_linear},
        {"matmul", case_matmul},
        {"conv2d", case_conv2d},
        {"conv2d_strided", case_conv2d_strided},
        {"maxpool2d", case_maxpool2d},
        {"avgpool2d", case_avgpool2d},
        {"tanh", case_tanh},
        {"sigmoid", case_sigmoid},
        {"relu", case_relu},
        {"dropout_fixed_mask", case_dropout},
        {"add", case_add},
        {"sub", case_sub},
        {"mul", case_mul},
        {"div_or_zero", case_div_or_zero},
        {"div_or_zero_at_zero", case_div_by_zero},
        {"affine", case_affine},
        {"sum", case_sum},
        {"mean", case_mean},
        {"mean_axis", case_mean_axis},
        {"broadcast", case_broadcast},
        {"reshape", case_reshape},
        {"concat", case_concat},
        {"stack", case_stack},
        {"slice", case_slice},
        {"select", case_select},
        {"lstm_step", case_lstm_step},
        {"bilstm", case_bilstm},
        {"mse_loss", case_mse_loss},
        {"ccc_loss", case_ccc_loss},
        {"anet", case_anet},
        {"vnet", case_vnet},
        {"joint", case_joint},
    };
    return cases;
}

}  // namespace

std::vector<std::string> gradient_case_names() {
    std::vector<std::string> names;
    for (const auto& [name, fn] : registry()) names.push_back(name);
    return names;
}

GradCheckReport run_gradient_case(const std::string& name, double tolerance, std::uint64_t seed) {
    for (const auto& [n, fn] : registry()) {
        if (n == name) return fn(tolerance, derive_seed(seed, name));
    }
    throw ConfigError("unknown gradient check '" + name + "'");
}

}  // namespace avemo
