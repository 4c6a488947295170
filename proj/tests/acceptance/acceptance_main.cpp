// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//
// AVEMO_ACCEPTANCE_WORKDIR overrides the scratch directory (default: system temp).

#include "avemo/audio.hpp"
#include "avemo/binary_io.hpp"
#include "avemo/grad_check.hpp"
#include "avemo/ingest.hpp"
#include "avemo/objectives.hpp"
#include "avemo/param_set.hpp"
#include "avemo/rng.hpp"
#include "avemo/trainer.hpp"
#include "avemo/video.hpp"
#include "support/oracles.hpp"
#include "support/process.hpp"
#include "support/test_support.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

using namespace avemo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

Outcome gradient_suite() {
    const auto t0 = Clock::now();
    auto r = avemo::testing::run_command(avemo::testing::quoted(AVEMO_CLI_PATH) + " gradcheck --all --tol 1e-4");
    const double secs = seconds_since(t0);
    auto names = gradient_case_names();
    std::string missing;
    for (const char* op : {"linear", "conv2d", "maxpool2d", "tanh", "relu", "sigmoid", "concat", "mean", "mean_axis",
                           "lstm_step", "bilstm", "anet", "vnet", "joint", "mse_loss", "ccc_loss"}) {
        if (std::find(names.begin(), names.end(), op) == names.end()) missing += std::string(" ") + op;
    }
    double worst = 0.0;
    std::istringstream lines(r.output);
    std::string line;
    while (std::getline(lines, line)) {
        std::istringstream fields(line);
        std::string name, elements, err;
        if (fields >> name >> elements >> err && std::isdigit(static_cast<unsigned char>(elements[0]))) {
            worst = std::max(worst, std::stod(err));
        }
    }
    Outcome o;
    o.passed = r.exit_code == 0 && missing.empty() && worst <= 1e-4 && secs <= 120.0;
    o.detail = std::to_string(names.size()) + " checks, worst rel err " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s" +
               (missing.empty() ? "" : ", missing:" + missing) + (r.exit_code == 0 ? "" : ", exit " + std::to_string(r.exit_code));
    return o;
}

Outcome stft_oracle() {
    Rng rng(derive_seed(2024, "stft-oracle"));
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        StftParams p;
        p.n_fft = std::size_t{1} << rng.uniform_int(4, 7);
        p.window_len = static_cast<std::size_t>(rng.uniform_int(2, static_cast<std::int64_t>(p.n_fft)));
        p.hop = static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(p.window_len)));
        const auto seg = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(p.window_len), 2048));
        p.segment_seconds = static_cast<double>(seg) / kSampleRate;
        std::vector<float> x(static_cast<std::size_t>(rng.uniform_int(1, 2048)));
        for (auto& v : x) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        const auto map = stft(x, p);
        worst = std::max(worst, avemo::testing::stft_relative_error(map, avemo::testing::direct_stft(x, p)));
    }
    std::vector<float> long_signal(48000);
    for (auto& v : long_signal) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    const auto full = stft(long_signal, StftParams{});
    const bool shape_ok = full.bins == 257 && full.frames == 300 && full.values.size() == 257u * 300u * 2u;
    return {worst <= 1e-6 && shape_ok, "50 signals, worst rel err " + fmt(worst, 3) + ", default map " +
                                           std::to_string(full.bins) + "x" + std::to_string(full.frames) + "x2"};
}

Outcome ccc_oracle() {
    Rng rng(derive_seed(2024, "ccc-oracle"));
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(2, 500));
        std::vector<double> x(n), y(n);
        const double slope = rng.uniform(-2, 2), shift = rng.uniform(-1, 1);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.uniform(-1, 1);
            y[i] = slope * x[i] + shift + rng.normal(0.0, 0.5);
        }
        worst = std::max(worst, std::abs(ccc(x, y) - avemo::testing::direct_ccc(x, y)));
    }
    const std::vector<double> a{1, 2, 3}, b{2, 4, 6}, c{5, 5, 5};
    const double hand = ccc(a, b);
    const bool hand_ok = std::abs(hand - 8.0 / 22.0) <= 1e-12;
    const bool ident_ok = std::abs(ccc(a, a) - 1.0) <= 1e-12;
    const bool const_ok = ccc(a, c) == 0.0;
    return {worst <= 1e-9 && hand_ok && ident_ok && const_ok,
            "1000 pairs, worst abs err " + fmt(worst, 3) + ", [1,2,3]/[2,4,6] = " + fmt(hand, 10) +
                (ident_ok ? ", identity 1" : ", identity wrong") + (const_ok ? ", constant 0" : ", constant wrong")};
}

Outcome report_convention() {
    const double rows[3][3] = {{0.1879, 0.256, 0.4439}, {0.2798, 0.4688, 0.7486}, {0.3036, 0.4796, 0.7832}};
    bool ok = true;
    std::string detail;
    for (const auto& r : rows) {
        const auto rep = CccReport::from_components(r[0], r[1]);
        const auto csv = report_csv(rep);
        std::ostringstream expected;
        expected << std::fixed << std::setprecision(4) << r[0] << "," << r[1] << "," << r[2];
        ok = ok && csv.find(expected.str()) != std::string::npos;
        detail += (detail.empty() ? "" : "; ") + expected.str();
    }
    std::vector<AffectPair> targets, preds;
    for (int i = 0; i < 20; ++i) {
        const double t = -0.9 + 0.09 * i;
        targets.push_back({t, -t});
        preds.push_back({t, -t});
    }
    const auto perfect = evaluate(preds, targets);
    ok = ok && std::abs(perfect.total - (perfect.ccc_arousal + perfect.ccc_valence)) == 0.0 &&
         std::abs(perfect.total - 2.0) < 1e-12;
    return {ok, detail};
}

ParamSet<float> random_gradients(Rng& rng, double scale) {
    ParamSet<float> set;
    for (int k = 0; k < 3; ++k) {
        Tensor<float> t({static_cast<std::size_t>(5 + 7 * k)}, true);
        std::vector<float> g(t.size());
        for (auto& v : g) v = static_cast<float>(rng.normal(0.0, scale));
        Graph<float> graph;
        graph.backward(graph.sum(graph.mul(t, Tensor<float>(t.shape(), g))));
        set.add("p" + std::to_string(k), t);
    }
    return set;
}

Outcome schedule_and_clipping() {
    TrainConfig cfg;
    const double l0 = lr_at_epoch(cfg, 0), l7 = lr_at_epoch(cfg, 7), l14 = lr_at_epoch(cfg, 14);
    bool ok = std::abs(l0 - 0.001) < 1e-15 && std::abs(l7 - 0.0001) < 1e-16 && std::abs(l14 - 0.00001) < 1e-17;
    Rng rng(derive_seed(2024, "clip"));
    std::size_t clipped = 0;
    double worst_norm = 0.0, worst_cos = 1.0;
    for (int trial = 0; trial < 500; ++trial) {
        auto set = random_gradients(rng, rng.uniform(0.5, 20.0));
        std::vector<double> before;
        for (const auto& [n, t] : set) before.insert(before.end(), t.grad().begin(), t.grad().end());
        const double pre = gradient_norm(set);
        clip_gradients(set, 20.0);
        const double post = gradient_norm(set);
        if (pre <= 20.0) continue;
        ++clipped;
        std::vector<double> after;
        for (const auto& [n, t] : set) after.insert(after.end(), t.grad().begin(), t.grad().end());
        double dot = 0, na = 0, nb = 0;
        for (std::size_t i = 0; i < before.size(); ++i) {
            dot += before[i] * after[i];
            na += before[i] * before[i];
            nb += after[i] * after[i];
        }
        worst_norm = std::max(worst_norm, post);
        worst_cos = std::min(worst_cos, dot / std::sqrt(na * nb));
    }
    ok = ok && clipped > 100 && worst_norm <= 20.0 + 1e-6 && worst_cos >= 1.0 - 1e-6;
    return {ok, "lr " + fmt(l0) + "/" + fmt(l7) + "/" + fmt(l14) + ", " + std::to_string(clipped) +
                    " clipped, max post norm " + fmt(worst_norm, 10) + ", min cosine " + fmt(worst_cos, 10)};
}

Outcome sampling_law() {
    std::vector<std::array<int, 2>> counts(16, {0, 0});
    bool in_pairs = true;
    const int draws = 10000;
    for (int s = 0; s < draws; ++s) {
        const auto idx = sample_segments(32, 16, SampleMode::train(derive_seed(2024, static_cast<std::uint64_t>(s))));
        for (std::size_t i = 0; i < 16; ++i) {
            if (idx[i] != 2 * i && idx[i] != 2 * i + 1) {
                in_pairs = false;
                continue;
            }
            ++counts[i][idx[i] - 2 * i];
        }
    }
    double worst_dev = 0.0;
    for (const auto& c : counts) worst_dev = std::max(worst_dev, std::abs(c[0] / static_cast<double>(draws) - 0.5));

    std::vector<std::size_t> identity(16);
    for (std::size_t i = 0; i < 16; ++i) identity[i] = i;
    const bool ident_ok = sample_segments(16, 16, SampleMode::eval()) == identity &&
                          sample_segments(16, 16, SampleMode::train(5)) == identity;

    std::vector<std::size_t> expected;
    std::size_t previous_hi = 0;
    for (std::size_t i = 0; i < 16; ++i) {
        const std::size_t lo = i * 5 / 16, end = (i + 1) * 5 / 16;
        if (end > lo) {
            expected.push_back((lo + end - 1) / 2);
            previous_hi = end - 1;
        } else {
            expected.push_back(previous_hi);
        }
    }
    const bool short_ok = sample_segments(5, 16, SampleMode::eval()) == expected;
    return {in_pairs && worst_dev <= 0.02 && ident_ok && short_ok,
            "max |p - 0.5| " + fmt(worst_dev, 3) + (in_pairs ? "" : ", index outside pair") +
                (ident_ok ? ", L=16 identity" : ", L=16 wrong") + (short_ok ? ", L=5 repeat rule" : ", L=5 wrong")};
}

double best_total(const FitResult& r) {
    double best = -2.0;
    for (const auto& s : r.history) best = std::max(best, s.val.total);
    return best;
}

Outcome synthetic_end_to_end(const fs::path& work) {
    const auto t0 = Clock::now();
    SynthSpec spec;
    spec.n_utterances = 2400;
    spec.seed = 2024;
    const auto manifest = generate_synthetic(spec, work / "corpus", std::thread::hardware_concurrency());
    const auto split = split_train_val(load_manifest_resolved(manifest), 400.0 / 2400.0, 2024);
    TrainData data{split.train, split.val};
    const double gen_secs = seconds_since(t0);

    JointConfig model;  // toy scale
    auto run = [&](Stage stage, std::size_t epochs, const fs::path& out, std::optional<fs::path> a = {},
                   std::optional<fs::path> v = {}) {
        TrainConfig cfg;
        cfg.stage = stage;
        cfg.epochs = epochs;
        cfg.seed = 2024;
        FitOptions opts;
        opts.model = model;
        opts.out_dir = out;
        opts.anet_ckpt = a;
        opts.vnet_ckpt = v;
        opts.on_epoch = [stage](const EpochStats& s) {
            std::printf("    %-5s epoch %zu  loss %.4f  val ccc %.4f / %.4f  total %.4f  (%.1f s)\n",
                        to_string(stage).c_str(), s.epoch, s.train_loss, s.val.ccc_arousal, s.val.ccc_valence,
                        s.val.total, s.seconds);
            std::fflush(stdout);
        };
        return fit(cfg, data, opts);
    };
    const auto anet = run(Stage::anet, 6, work / "anet");
    const auto vnet = run(Stage::vnet, 6, work / "vnet");
    const auto joint = run(Stage::joint, 3, work / "joint", work / "anet" / "best.ckpt", work / "vnet" / "best.ckpt");
    const double secs = seconds_since(t0);

    const double a = best_total(anet), v = best_total(vnet), j = best_total(joint);
    const std::size_t epochs = anet.history.size() + vnet.history.size() + joint.history.size();
    const bool ok = data.train.size() == 2000 && data.val.size() == 400 && a >= 0.8 && v >= 0.8 &&
                    j >= std::max(a, v) + 0.05 && secs <= 15 * 60.0;
    return {ok, "train/val " + std::to_string(data.train.size()) + "/" + std::to_string(data.val.size()) +
                    ", anet " + fmt(a) + ", vnet " + fmt(v) + ", joint " + fmt(j) + " (needs " +
                    fmt(std::max(a, v) + 0.05) + "), " + std::to_string(epochs) + " epochs, " + fmt(secs, 4) +
                    " s incl. " + fmt(gen_secs, 3) + " s corpus generation"};
}

std::string stats_without_seconds(const fs::path& path) {
    std::string out, line;
    std::istringstream in(read_file(path));
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
}

Outcome determinism(const fs::path& work) {
    SynthSpec spec;
    spec.n_utterances = 60;
    spec.seed = 77;
    const auto manifest = generate_synthetic(spec, work / "corpus", 1);
    const auto split = split_train_val(load_manifest_resolved(manifest), 0.2, 77);
    TrainData data{split.train, split.val};

    JointConfig model;
    model.anet.conv_channels = {4, 8};
    model.anet.fc_dim = 16;
    model.vnet.conv_channels = {4, 8};
    model.vnet.embed_dim = 16;
    model.vnet.lstm_hidden = 8;
    model.vnet.n_frames = 8;
    model.n_audio_windows = 2;

    auto options = [&](const std::string& name) {
        FitOptions o;
        o.model = model;
        o.out_dir = work / name;
        return o;
    };
    TrainConfig cfg;
    cfg.epochs = 4;
    cfg.seed = 5;
    cfg.lr_init = 0.01;
    cfg.lr_step = 2;

    std::string mismatch;
    auto compare = [&](const std::string& a, const std::string& b, const std::vector<std::string>& files) {
        for (const auto& f : files) {
            if (read_file(work / a / f) != read_file(work / b / f)) mismatch += " " + b + "/" + f;
        }
        if (stats_without_seconds(work / a / "stats.csv") != stats_without_seconds(work / b / "stats.csv")) {
            mismatch += " " + b + "/stats.csv";
        }
    };
    const std::vector<std::string> files{"epoch_000.ckpt", "epoch_001.ckpt", "epoch_002.ckpt", "epoch_003.ckpt",
                                         "epoch_003.state", "best.ckpt", "final.ckpt"};
    for (Stage stage : {Stage::anet, Stage::vnet}) {
        cfg.stage = stage;
        const std::string s = to_string(stage);
        fit(cfg, data, options(s + "_a"));
        fit(cfg, data, options(s + "_b"));
        auto first = options(s + "_c");
        first.max_epochs_this_run = 2;
        fit(cfg, data, first);
        auto second = options(s + "_c");
        second.resume = true;
        fit(cfg, data, second);
        compare(s + "_a", s + "_b", files);
        compare(s + "_a", s + "_c", files);
    }
    cfg.stage = Stage::joint;
    cfg.epochs = 2;
    auto joint = [&](const std::string& name) {
        auto o = options(name);
        o.anet_ckpt = work / "anet_a" / "final.ckpt";
        o.vnet_ckpt = work / "vnet_a" / "final.ckpt";
        return o;
    };
    fit(cfg, data, joint("joint_a"));
    fit(cfg, data, joint("joint_b"));
    auto first = joint("joint_c");
    first.max_epochs_this_run = 1;
    fit(cfg, data, first);
    auto second = joint("joint_c");
    second.resume = true;
    fit(cfg, data, second);
    const std::vector<std::string> joint_files{"epoch_000.ckpt", "epoch_001.ckpt", "epoch_001.state", "best.ckpt",
                                               "final.ckpt"};
    compare("joint_a", "joint_b", joint_files);
    compare("joint_a", "joint_c", joint_files);
    return {mismatch.empty(), mismatch.empty()
                                  ? "anet, vnet and joint: repeated and resumed runs bit-identical (stats compared "
                                    "without the wall-clock column)"
                                  : "differs:" + mismatch};
}

Outcome format_round_trips(const fs::path& work) {
    std::string failed;
    auto check = [&](const std::string& name, const fs::path& a, const fs::path& b) {
        if (read_file(a) != read_file(b)) failed += " " + name;
    };
    Rng rng(derive_seed(2024, "formats"));

    std::vector<float> x(5000);
    for (auto& v : x) v = static_cast<float>(rng.uniform(-1, 1));
    write_stft(work / "a.stft", stft(x, StftParams{}));
    write_stft(work / "b.stft", read_stft(work / "a.stft"));
    check("stft", work / "a.stft", work / "b.stft");

    FrameImage frame;
    for (auto& p : frame.pixels) p = static_cast<float>(rng.uniform());
    save_ppm(work / "a.ppm", frame);
    save_ppm(work / "b.ppm", load_frame(work / "a.ppm"));
    check("ppm", work / "a.ppm", work / "b.ppm");
    save_frm(work / "a.frm", frame);
    save_frm(work / "b.frm", load_frame(work / "a.frm"));
    check("frm", work / "a.frm", work / "b.frm");

    AffectModel<float> model(Stage::joint, JointConfig{}, 3);
    save_checkpoint(work / "a.ckpt", model.params());
    save_checkpoint(work / "b.ckpt", load_checkpoint(work / "a.ckpt"));
    check("checkpoint", work / "a.ckpt", work / "b.ckpt");

    std::vector<UtteranceRecord> recs;
    for (int i = 0; i < 25; ++i) {
        recs.push_back({"utt_" + std::to_string(i), "wav/utt_" + std::to_string(i) + ".wav",
                        "frames/utt_" + std::to_string(i), {rng.uniform(-1, 1), rng.uniform(-1, 1)}});
    }
    write_manifest(work / "a.csv", recs);
    write_manifest(work / "b.csv", load_manifest(work / "a.csv"));
    check("manifest", work / "a.csv", work / "b.csv");

    WaveBuffer wave;
    wave.samples.resize(1000);
    for (auto& s : wave.samples) s = static_cast<float>(rng.uniform_int(-32768, 32767)) / 32768.0f;
    write_wav(work / "a.wav", wave);
    write_wav(work / "b.wav", decode_wav(work / "a.wav"));
    check("wav", work / "a.wav", work / "b.wav");

    return {failed.empty(), failed.empty() ? ".stft, .ppm, .frm, .ckpt, manifest and .wav byte-identical"
                                           : "differs:" + failed};
}

}  // namespace

int main() {
    avemo::testing::TempDir work_dir("avemo_acceptance");
    const char* env = std::getenv("AVEMO_ACCEPTANCE_WORKDIR");
    const fs::path work = env ? fs::path(env) : work_dir.path();
    fs::create_directories(work);

    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "gradient suite", gradient_suite},
        {2, "stft oracle", stft_oracle},
        {3, "ccc oracle", ccc_oracle},
        {4, "report convention", report_convention},
        {5, "schedule and clipping", schedule_and_clipping},
        {6, "segment sampling law", sampling_law},
        {7, "synthetic end-to-end fusion gain", [&] {
             fs::create_directories(work / "e2e");
             return synthetic_end_to_end(work / "e2e");
         }},
        {8, "determinism and resume", [&] {
             fs::create_directories(work / "det");
             return determinism(work / "det");
         }},
        {9, "format round-trips", [&] {
             fs::create_directories(work / "fmt");
             return format_round_trips(work / "fmt");
         }},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.passed) ++failures;
        std::printf("[%s] %d %s: %s (%.1f s)\n", o.passed ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%zu criteria, %d failed\n", criteria.size(), failures);
    return failures == 0 ? 0 : 1;
}
