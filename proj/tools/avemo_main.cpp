// avemo: command-line front end for the arousal/valence pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical check failure.

#include "avemo/audio.hpp"
#include "avemo/binary_io.hpp"
#include "avemo/error.hpp"
#include "avemo/grad_check.hpp"
#include "avemo/ingest.hpp"
#include "avemo/kv_config.hpp"
#include "avemo/models.hpp"
#include "avemo/objectives.hpp"
#include "avemo/parallel.hpp"
#include "avemo/trainer.hpp"
#include "avemo/video.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace avemo;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

// Raised for flag combinations CLI11 cannot express.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------------ synth-data

struct SynthArgs {
    SynthSpec spec;
    std::string out;
    unsigned jobs = 1;
};

void add_synth(CLI::App& app, SynthArgs& a) {
    auto* cmd = app.add_subcommand("synth-data", "Generate a seeded synthetic corpus (WAV, frames, manifest)");
    cmd->add_option("--out", a.out, "Output directory (must be empty or absent)")->required();
    cmd->add_option("--n", a.spec.n_utterances, "Number of utterances")->capture_default_str();
    cmd->add_option("--seed", a.spec.seed, "Corpus seed")->capture_default_str();
    cmd->add_option("--seconds", a.spec.audio_seconds, "Audio length per utterance in seconds")->capture_default_str();
    cmd->add_option("--frames", a.spec.frames_per_utterance, "Frames per utterance")->capture_default_str();
    cmd->add_option("--audio-valence-noise", a.spec.audio_valence_noise, "Std of the valence noise in audio")
        ->capture_default_str();
    cmd->add_option("--video-arousal-noise", a.spec.video_arousal_noise, "Std of the arousal noise in frames")
        ->capture_default_str();
    cmd->add_option("--jobs", a.jobs, "Worker threads")->capture_default_str();
}

int run_synth(const SynthArgs& a) {
    const auto manifest = generate_synthetic(a.spec, a.out, a.jobs);
    std::cout << "wrote " << a.spec.n_utterances << " utterances; manifest " << manifest.string() << "\n";
    return 0;
}

// ------------------------------------------------------------------ preprocess-audio

struct PreprocessArgs {
    std::string manifest;
    std::string out;
    std::size_t windows = 1;
    bool eval = false;
    std::uint64_t seed = 1;
    StftParams stft;
    unsigned jobs = 1;
};

void add_preprocess(CLI::App& app, PreprocessArgs& a) {
    auto* cmd = app.add_subcommand("preprocess-audio", "Compute complex STFT maps (<id>_<k>.stft) for every utterance");
    cmd->add_option("--manifest", a.manifest, "Manifest CSV")->required();
    cmd->add_option("--out", a.out, "Output directory")->required();
    cmd->add_option("--windows", a.windows, "Windows per utterance")->capture_default_str();
    cmd->add_flag("--eval", a.eval, "Centre windows on their segments instead of seeded random placement");
    cmd->add_option("--seed", a.seed, "Seed for random placement")->capture_default_str();
    cmd->add_option("--window-len", a.stft.window_len, "Analysis window in samples")->capture_default_str();
    cmd->add_option("--hop", a.stft.hop, "Hop in samples")->capture_default_str();
    cmd->add_option("--n-fft", a.stft.n_fft, "FFT size (power of two)")->capture_default_str();
    cmd->add_option("--segment-seconds", a.stft.segment_seconds, "Segment length in seconds")->capture_default_str();
    cmd->add_option("--jobs", a.jobs, "Worker threads")->capture_default_str();
}

// Per-utterance sampling stream, independent of processing order.
SampleMode utterance_mode(bool eval, std::uint64_t seed, const std::string& id) {
    return eval ? SampleMode::eval() : SampleMode::train(derive_seed(seed, fnv1a(id)));
}

int run_preprocess(const PreprocessArgs& a) {
    a.stft.validate();
    const auto records = load_manifest_resolved(a.manifest);
    fs::create_directories(a.out);
    parallel_for(records.size(), a.jobs, [&](std::size_t i) {
        const auto& rec = records[i];
        const auto maps =
            sample_audio_windows(decode_wav(rec.wav_path), a.stft, a.windows, utterance_mode(a.eval, a.seed, rec.id));
        for (std::size_t w = 0; w < maps.size(); ++w) {
            write_stft(fs::path(a.out) / (rec.id + "_" + std::to_string(w) + ".stft"), maps[w]);
        }
    });
    std::cout << "wrote " << records.size() * a.windows << " STFT maps (" << a.stft.bins() << "x" << a.stft.frames()
              << "x2) to " << a.out << "\n";
    return 0;
}

// ------------------------------------------------------------------ sample-frames

struct SampleArgs {
    std::string manifest;
    std::string out;
    std::size_t n_frames = 16;
    bool eval = false;
    std::uint64_t seed = 1;
    std::string frames_out;
    std::string format = "ppm";
    unsigned jobs = 1;
};

void add_sample(CLI::App& app, SampleArgs& a) {
    auto* cmd = app.add_subcommand("sample-frames", "Segment-sample N_V frames per utterance; writes id,indices CSV");
    cmd->add_option("--manifest", a.manifest, "Manifest CSV")->required();
    cmd->add_option("--out", a.out, "Output CSV of per-utterance frame indices")->required();
    cmd->add_option("--nv", a.n_frames, "Frames per clip")->capture_default_str();
    cmd->add_flag("--eval", a.eval, "Take segment middles instead of seeded random picks");
    cmd->add_option("--seed", a.seed, "Seed for random picks")->capture_default_str();
    cmd->add_option("--frames-out", a.frames_out, "Also copy the sampled frames to <dir>/<id>/");
    cmd->add_option("--format", a.format, "Format of copied frames: ppm or frm")
        ->check(CLI::IsMember({"ppm", "frm"}))
        ->capture_default_str();
    cmd->add_option("--jobs", a.jobs, "Worker threads")->capture_default_str();
}

int run_sample(const SampleArgs& a) {
    if (a.n_frames == 0) throw UsageError("--nv must be >= 1");
    const auto records = load_manifest_resolved(a.manifest);
    std::vector<std::string> rows(records.size());
    parallel_for(records.size(), a.jobs, [&](std::size_t i) {
        const auto& rec = records[i];
        const auto mode = utterance_mode(a.eval, a.seed, rec.id);
        std::string row = rec.id + ",";
        if (a.frames_out.empty()) {
            const auto files = list_frame_files(rec.frames_dir);
            if (files.empty()) throw DataError(rec.frames_dir.string() + ": no frame files");
            const auto idx = sample_segments(files.size(), a.n_frames, mode);
            for (std::size_t k = 0; k < idx.size(); ++k) row += (k ? " " : "") + std::to_string(idx[k]);
        } else {
            const auto clip = load_clip(rec.frames_dir, a.n_frames, mode);
            const fs::path dir = fs::path(a.frames_out) / rec.id;
            fs::create_directories(dir);
            for (std::size_t k = 0; k < clip.frames.size(); ++k) {
                char name[32];
                std::snprintf(name, sizeof name, "frame_%04zu.%s", k, a.format.c_str());
                if (a.format == "ppm") save_ppm(dir / name, clip.frames[k]);
                else save_frm(dir / name, clip.frames[k]);
                row += (k ? " " : "") + std::to_string(clip.source_indices[k]);
            }
        }
        rows[i] = row;
    });
    std::string csv = "id,indices\n";
    for (const auto& r : rows) csv += r + "\n";
    write_file_atomic(a.out, csv);
    std::cout << "sampled " << records.size() << " clips of " << a.n_frames << " frames; indices in " << a.out
              << "\n";
    return 0;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
    std::string config;
    std::string manifest;
    std::string val_manifest;
    std::string out;
    std::string anet_ckpt;
    std::string vnet_ckpt;
    bool resume = false;
    TrainSettings defaults;
    std::string stage = "anet";
    std::string scale = "toy";
    CLI::App* cmd = nullptr;
};

void add_train(CLI::App& app, TrainArgs& a) {
    auto& d = a.defaults;
    auto* cmd = app.add_subcommand("train", "Train one stage (anet, vnet or joint)");
    a.cmd = cmd;
    cmd->add_option("--config", a.config, "key = value config file; explicit flags override it");
    cmd->add_option("--manifest", a.manifest, "Training manifest CSV")->required();
    cmd->add_option("--val-manifest", a.val_manifest, "Validation manifest (default: split --manifest)");
    cmd->add_option("--out", a.out, "Run directory for checkpoints and stats.csv")->required();
    cmd->add_option("--stage", a.stage, "anet | vnet | joint")->capture_default_str();
    cmd->add_option("--scale", a.scale, "Network scale for both streams: toy | full")->capture_default_str();
    cmd->add_option("--epochs", d.train.epochs, "Epochs")->capture_default_str();
    cmd->add_option("--seed", d.train.seed, "Run seed")->capture_default_str();
    cmd->add_option("--lr", d.train.lr_init, "Initial learning rate")->capture_default_str();
    cmd->add_option("--lr-decay", d.train.lr_decay, "Learning-rate decay factor")->capture_default_str();
    cmd->add_option("--lr-step", d.train.lr_step, "Epochs between decays")->capture_default_str();
    cmd->add_option("--clip", d.train.clip_norm, "Global gradient-norm clip threshold")->capture_default_str();
    cmd->add_option("--batch-size", d.train.batch_size, "Mini-batch size (>= 2)")->capture_default_str();
    cmd->add_option("--momentum", d.train.momentum, "SGD momentum")->capture_default_str();
    cmd->add_option("--val-fraction", d.val_fraction, "Validation share when splitting --manifest")
        ->capture_default_str();
    cmd->add_option("--n-audio-windows", d.model.n_audio_windows, "Audio windows per utterance (joint)")
        ->capture_default_str();
    cmd->add_flag("--freeze-anet", d.model.freeze_anet, "Keep ANet weights fixed in joint training");
    cmd->add_flag("--freeze-vnet", d.model.freeze_vnet, "Keep VNet weights fixed in joint training");
    cmd->add_option("--anet-ckpt", a.anet_ckpt, "Pre-trained ANet checkpoint (joint stage)");
    cmd->add_option("--vnet-ckpt", a.vnet_ckpt, "Pre-trained VNet checkpoint (joint stage)");
    cmd->add_flag("--resume", a.resume, "Continue from the newest epoch checkpoint in --out");
    cmd->add_option("--cache-mb", d.data.cache_mb, "Memory cap for cached model inputs")->capture_default_str();
    cmd->footer(settings_help());
}

// Config file values, overridden by every flag given on the command line.
TrainSettings merged_settings(const TrainArgs& a) {
    KeyValueConfig cfg = a.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(a.config);
    const auto& d = a.defaults;
    auto given = [&](const char* flag) { return a.cmd->count(flag) > 0; };
    if (given("--stage")) cfg.set("stage", a.stage);
    if (given("--scale")) {
        cfg.set("anet.scale", a.scale);
        cfg.set("vnet.scale", a.scale);
    }
    if (given("--epochs")) cfg.set("epochs", std::to_string(d.train.epochs));
    if (given("--seed")) cfg.set("seed", std::to_string(d.train.seed));
    if (given("--lr")) cfg.set("lr_init", format_double(d.train.lr_init));
    if (given("--lr-decay")) cfg.set("lr_decay", format_double(d.train.lr_decay));
    if (given("--lr-step")) cfg.set("lr_step", std::to_string(d.train.lr_step));
    if (given("--clip")) cfg.set("clip_norm", format_double(d.train.clip_norm));
    if (given("--batch-size")) cfg.set("batch_size", std::to_string(d.train.batch_size));
    if (given("--momentum")) cfg.set("momentum", format_double(d.train.momentum));
    if (given("--val-fraction")) cfg.set("val_fraction", format_double(d.val_fraction));
    if (given("--n-audio-windows")) cfg.set("joint.n_audio_windows", std::to_string(d.model.n_audio_windows));
    if (given("--freeze-anet")) cfg.set("joint.freeze_anet", "true");
    if (given("--freeze-vnet")) cfg.set("joint.freeze_vnet", "true");
    if (given("--cache-mb")) cfg.set("cache_mb", std::to_string(d.data.cache_mb));
    return settings_from_config(cfg);
}

int run_train(const TrainArgs& a) {
    const auto s = merged_settings(a);
    if (s.train.stage == Stage::joint && !a.resume) {
        if (a.anet_ckpt.empty()) throw DataError("train --stage joint requires --anet-ckpt");
        if (a.vnet_ckpt.empty()) throw DataError("train --stage joint requires --vnet-ckpt");
    }
    TrainData data;
    const auto records = load_manifest_resolved(a.manifest);
    if (a.val_manifest.empty()) {
        auto split = split_train_val(records, s.val_fraction, s.train.seed);
        data.train = std::move(split.train);
        data.val = std::move(split.val);
    } else {
        data.train = records;
        data.val = load_manifest_resolved(a.val_manifest);
    }

    FitOptions opt;
    opt.model = s.model;
    opt.data = s.data;
    opt.out_dir = a.out;
    opt.resume = a.resume;
    if (!a.anet_ckpt.empty()) opt.anet_ckpt = fs::path(a.anet_ckpt);
    if (!a.vnet_ckpt.empty()) opt.vnet_ckpt = fs::path(a.vnet_ckpt);
    opt.on_epoch = [](const EpochStats& e) {
        std::printf("epoch %3zu  lr %-8g  loss %.5f  val CCC a %.4f v %.4f total %.4f  (%.1f s)\n", e.epoch, e.lr,
                    e.train_loss, e.val.ccc_arousal, e.val.ccc_valence, e.val.total, e.seconds);
        std::fflush(stdout);
    };
    std::cout << "stage " << to_string(s.train.stage) << ": " << data.train.size() << " train / "
              << data.val.size() << " val utterances\n";
    const auto result = fit(s.train, data, opt);
    std::printf("best epoch %zu, validation total CCC %.4f\n", result.best_epoch, result.best_total);
    return 0;
}

// ------------------------------------------------------------------ evaluate

struct EvalArgs {
    std::string manifest;
    std::string pred;
    std::string ckpt;
    std::string config;
    std::string scale = "toy";
    std::string out;
    std::size_t batch_size = 6;
};

void add_evaluate(CLI::App& app, EvalArgs& a) {
    auto* cmd = app.add_subcommand("evaluate", "Score predictions (CCC arousal, valence, total)");
    cmd->add_option("--manifest", a.manifest, "Manifest with reference labels")->required();
    auto* pred = cmd->add_option("--pred", a.pred, "Prediction CSV with header id,arousal,valence");
    auto* ckpt = cmd->add_option("--ckpt", a.ckpt, "Checkpoint to run in eval mode instead of --pred");
    pred->excludes(ckpt);
    cmd->add_option("--config", a.config, "Model config used to train --ckpt");
    cmd->add_option("--scale", a.scale, "Network scale for --ckpt when no config is given: toy | full")
        ->capture_default_str();
    cmd->add_option("--batch-size", a.batch_size, "Inference batch size")->capture_default_str();
    cmd->add_option("--out", a.out, "Write the report CSV here");
}

std::map<std::string, AffectPair> load_predictions(const fs::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "id,arousal,valence") {
        throw DataError(path.string() + ": header must be 'id,arousal,valence'");
    }
    std::map<std::string, AffectPair> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
            throw DataError(path.string() + " row " + std::to_string(row) + ": expected 3 fields");
        }
        AffectPair p;
        try {
            p.arousal = parse_double(line.substr(c1 + 1, c2 - c1 - 1), "arousal");
            p.valence = parse_double(line.substr(c2 + 1), "valence");
        } catch (const ConfigError& e) {
            throw DataError(path.string() + " row " + std::to_string(row) + ": " + e.what());
        }
        if (!out.emplace(line.substr(0, c1), p).second) {
            throw DataError(path.string() + " row " + std::to_string(row) + ": duplicate id");
        }
    }
    return out;
}

Stage infer_stage(const ParamSet<float>& params) {
    if (params.contains("joint.head.weight")) return Stage::joint;
    if (params.contains("anet.head.weight")) return Stage::anet;
    if (params.contains("vnet.head.weight")) return Stage::vnet;
    throw DataError("checkpoint has no prediction head (joint.head, anet.head or vnet.head)");
}

int run_evaluate(const EvalArgs& a) {
    if (a.pred.empty() && a.ckpt.empty()) throw UsageError("evaluate needs --pred or --ckpt");
    const auto records = load_manifest_resolved(a.manifest);
    std::vector<AffectPair> preds;
    if (!a.pred.empty()) {
        const auto table = load_predictions(a.pred);
        for (const auto& rec : records) {
            auto it = table.find(rec.id);
            if (it == table.end()) throw DataError(a.pred + ": no prediction for id '" + rec.id + "'");
            preds.push_back(it->second);
        }
    } else {
        KeyValueConfig cfg = a.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(a.config);
        if (a.config.empty()) {
            cfg.set("anet.scale", a.scale);
            cfg.set("vnet.scale", a.scale);
        }
        const auto settings = settings_from_config(cfg);
        const auto weights = load_checkpoint(a.ckpt);
        AffectModel<float> model(infer_stage(weights), settings.model, 0);
        assign_params(model.params(), weights);
        InputSource source(settings.model, settings.data);
        preds = predict(model, records, source, a.batch_size);
    }
    std::vector<AffectPair> targets;
    for (const auto& rec : records) targets.push_back(rec.label);
    const auto report = evaluate(preds, targets);
    std::cout << report_csv(report) << "\n" << report_table({{"evaluation", report}});
    if (!a.out.empty()) write_file_atomic(a.out, report_csv(report));
    return 0;
}

// ------------------------------------------------------------------ gradcheck

struct GradArgs {
    bool all = false;
    std::vector<std::string> cases;
    bool list = false;
    double tol = 1e-4;
    std::uint64_t seed = 7;
};

void add_gradcheck(CLI::App& app, GradArgs& a) {
    auto* cmd = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences (double)");
    cmd->add_flag("--all", a.all, "Run every check");
    cmd->add_option("--case", a.cases, "Run the named check (repeatable)");
    cmd->add_flag("--list", a.list, "List check names");
    cmd->add_option("--tol", a.tol, "Maximum relative error")->capture_default_str();
    cmd->add_option("--seed", a.seed, "Seed for inputs and parameters")->capture_default_str();
}

int run_gradcheck(const GradArgs& a) {
    if (a.list) {
        for (const auto& n : gradient_case_names()) std::cout << n << "\n";
        return 0;
    }
    if (!a.all && a.cases.empty()) throw UsageError("gradcheck needs --all or --case NAME");
    const auto names = a.all ? gradient_case_names() : a.cases;
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::printf("%-22s %10s %14s  %s\n", "check", "elements", "max_rel_err", "status");
    for (const auto& name : names) {
        const auto r = run_gradient_case(name, a.tol, a.seed);
        ok = ok && r.passed;
        std::printf("%-22s %10zu %14.3e  %s\n", name.c_str(), r.elements_checked, r.max_rel_error,
                    r.passed ? "ok" : "FAIL");
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%zu checks, tolerance %g, %.1f s: %s\n", names.size(), a.tol, secs, ok ? "all passed" : "FAILED");
    return ok ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"avemo: audio-visual arousal/valence regression"};
    app.require_subcommand(1);
    SynthArgs synth;
    PreprocessArgs pre;
    SampleArgs sample;
    TrainArgs train;
    EvalArgs eval;
    GradArgs grad;
    add_synth(app, synth);
    add_preprocess(app, pre);
    add_sample(app, sample);
    add_train(app, train);
    add_evaluate(app, eval);
    add_gradcheck(app, grad);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "synth-data") return run_synth(synth);
        if (cmd == "preprocess-audio") return run_preprocess(pre);
        if (cmd == "sample-frames") return run_sample(sample);
        if (cmd == "train") return run_train(train);
        if (cmd == "evaluate") return run_evaluate(eval);
        if (cmd == "gradcheck") return run_gradcheck(grad);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
