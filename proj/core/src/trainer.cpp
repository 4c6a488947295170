#include "avemo/trainer.hpp"

#include "avemo/binary_io.hpp"
#include "avemo/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>

namespace avemo {

namespace fs = std::filesystem;

void TrainConfig::validate() const {
    if (!(lr_init > 0.0) || !std::isfinite(lr_init)) throw ConfigError("lr_init must be > 0");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay must be in (0, 1]");
    if (lr_step < 1) throw ConfigError("lr_step must be >= 1");
    if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (the CCC loss needs two samples)");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
}

double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch) {
    return cfg.lr_init * std::pow(cfg.lr_decay, static_cast<double>(epoch / cfg.lr_step));
}

template <typename T>
double gradient_norm(const ParamSet<T>& params) {
    double sq = 0.0;
    for (const auto& [name, t] : params) {
        for (const T g : t.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
    }
    return std::sqrt(sq);
}

template <typename T>
double clip_gradients(ParamSet<T>& params, double clip_norm) {
    const double norm = gradient_norm(params);
    if (!(norm > clip_norm)) return 1.0;
    const double factor = clip_norm / norm;
    for (auto& [name, t] : params) {
        for (T& g : t.grad()) g = static_cast<T>(static_cast<double>(g) * factor);
    }
    return factor;
}

template <typename T>
void sgd_step(ParamSet<T>& params, double lr, double momentum, Velocity<T>& velocity) {
    const T m = static_cast<T>(momentum);
    const T rate = static_cast<T>(lr);
    for (auto& [name, t] : params) {
        if (!t.has_grad()) continue;
        auto& v = velocity[name];
        if (v.size() != t.size()) v.assign(t.size(), T(0));
        const auto g = t.grad();
        auto p = t.data();
        for (std::size_t i = 0; i < p.size(); ++i) {
            v[i] = m * v[i] + g[i];
            p[i] -= rate * v[i];
        }
    }
}

LossKind loss_kind(Stage stage) { return stage == Stage::joint ? LossKind::ccc : LossKind::mse; }

template <typename T>
Tensor<T> stage_loss(Graph<T>& graph, Stage stage, const Tensor<T>& pred, const Tensor<T>& target) {
    return loss_kind(stage) == LossKind::ccc ? ccc_loss(graph, pred, target) : mse_loss(graph, pred, target);
}

// ------------------------------------------------------------------ inputs

InputSource::InputSource(JointConfig model, DataOptions options)
    : model_(std::move(model)), options_(std::move(options)) {
    model_.validate();
    options_.stft.validate();
}

const std::vector<float>* InputSource::cache_find(const std::string& key) const {
    auto it = cache_.find(key);
    return it == cache_.end() ? nullptr : &it->second;
}

void InputSource::cache_put(const std::string& key, const std::vector<float>& value) {
    const std::size_t bytes = value.size() * sizeof(float) + key.size();
    if (cached_bytes_ + bytes > options_.cache_mb * 1024 * 1024) return;
    if (cache_.emplace(key, value).second) cached_bytes_ += bytes;
}

void InputSource::append_audio(const UtteranceRecord& rec, std::size_t n_windows, const SampleMode& mode,
                               std::vector<float>& out) {
    const std::string wav_key = rec.wav_path.string();
    std::optional<WaveBuffer> wave;
    auto len_it = wav_lengths_.find(wav_key);
    if (len_it == wav_lengths_.end()) {
        wave = decode_wav(rec.wav_path);
        if (wave->samples.empty()) throw DataError(wav_key + ": no samples");
        len_it = wav_lengths_.emplace(wav_key, wave->samples.size()).first;
    }
    const auto starts = audio_window_starts(len_it->second, options_.stft, n_windows, mode);
    for (const auto start : starts) {
        const std::string key = wav_key + "#" + std::to_string(start);
        if (const auto* hit = cache_find(key)) {
            out.insert(out.end(), hit->begin(), hit->end());
            continue;
        }
        if (!wave) wave = decode_wav(rec.wav_path);
        const std::span<const float> all(wave->samples);
        const auto block = prepare_audio_input(stft(all.subspan(start), options_.stft), model_.anet);
        out.insert(out.end(), block.begin(), block.end());
        cache_put(key, block);
    }
}

void InputSource::append_clip(const UtteranceRecord& rec, const SampleMode& mode, std::vector<float>& out) {
    const std::string dir_key = rec.frames_dir.string();
    auto list_it = frame_lists_.find(dir_key);
    if (list_it == frame_lists_.end()) {
        auto files = list_frame_files(rec.frames_dir);
        if (files.empty()) throw DataError(dir_key + ": no frame files (.ppm or .frm)");
        list_it = frame_lists_.emplace(dir_key, std::move(files)).first;
    }
    const auto& files = list_it->second;
    for (const auto idx : sample_segments(files.size(), model_.vnet.n_frames, mode)) {
        const std::string key = files[idx].string();
        if (const auto* hit = cache_find(key)) {
            out.insert(out.end(), hit->begin(), hit->end());
            continue;
        }
        const auto block = prepare_frame_input(load_frame(files[idx]), model_.vnet);
        out.insert(out.end(), block.begin(), block.end());
        cache_put(key, block);
    }
}

ModelInputs<float> InputSource::batch(const AffectModel<float>& model,
                                      const std::vector<const UtteranceRecord*>& records,
                                      const std::vector<std::uint64_t>& seeds) {
    if (!seeds.empty() && seeds.size() != records.size()) {
        throw ConfigError("InputSource::batch: one seed per record required");
    }
    const std::size_t B = records.size();
    auto mode_for = [&](std::size_t i, std::string_view tag) {
        return seeds.empty() ? SampleMode::eval() : SampleMode::train(derive_seed(seeds[i], tag));
    };
    ModelInputs<float> inputs;
    if (model.uses_audio()) {
        const auto in = model_.anet.backbone_input_shape();
        const std::size_t nw = model.audio_windows();
        std::vector<float> values;
        values.reserve(B * nw * in[0] * in[1] * in[2]);
        for (std::size_t i = 0; i < B; ++i) append_audio(*records[i], nw, mode_for(i, "audio"), values);
        inputs.audio = Tensor<float>({B, nw, in[0], in[1], in[2]}, std::move(values));
    }
    if (model.uses_video()) {
        const auto in = model_.vnet.frame_input_shape();
        const std::size_t nf = model_.vnet.n_frames;
        std::vector<float> values;
        values.reserve(B * nf * in[0] * in[1] * in[2]);
        for (std::size_t i = 0; i < B; ++i) append_clip(*records[i], mode_for(i, "video"), values);
        inputs.video = Tensor<float>({B, nf, in[0], in[1], in[2]}, std::move(values));
    }
    return inputs;
}

std::vector<AffectPrediction> predict(const AffectModel<float>& model, const std::vector<UtteranceRecord>& records,
                                      InputSource& source, std::size_t batch_size) {
    if (batch_size == 0) throw ConfigError("predict: batch_size must be >= 1");
    std::vector<AffectPrediction> out;
    out.reserve(records.size());
    for (std::size_t begin = 0; begin < records.size(); begin += batch_size) {
        const std::size_t end = std::min(records.size(), begin + batch_size);
        std::vector<const UtteranceRecord*> batch;
        for (std::size_t i = begin; i < end; ++i) batch.push_back(&records[i]);
        Graph<float> graph;
        const auto pred = model.forward(graph, source.batch(model, batch, {}), nullptr);
        for (std::size_t i = 0; i < batch.size(); ++i) {
            out.push_back({static_cast<double>(pred[2 * i]), static_cast<double>(pred[2 * i + 1])});
        }
    }
    return out;
}

// ------------------------------------------------------------------ epoch

EpochStats train_epoch(AffectModel<float>& model, const TrainData& data, InputSource& source,
                       const TrainConfig& cfg, std::size_t epoch, Velocity<float>& velocity) {
    cfg.validate();
    if (model.stage() != cfg.stage) {
        throw ConfigError("model stage " + to_string(model.stage()) + " does not match config stage " +
                          to_string(cfg.stage));
    }
    if (data.train.size() < 2) throw DataError("training set needs at least 2 utterances");
    if (data.val.empty()) throw DataError("validation set is empty");

    const auto start_time = std::chrono::steady_clock::now();
    const std::uint64_t epoch_seed = derive_seed(derive_seed(cfg.seed, "epoch"), epoch);
    const std::uint64_t sample_root = derive_seed(epoch_seed, "sample");
    const std::uint64_t dropout_root = derive_seed(epoch_seed, "dropout");

    std::vector<std::size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(epoch_seed, "shuffle"));
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(order[i - 1], order[j]);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.lr = lr_at_epoch(cfg, epoch);
    auto params = model.trainable_params();

    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t begin = 0; begin + 2 <= order.size(); begin += cfg.batch_size, ++steps) {
        const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
        std::vector<const UtteranceRecord*> batch;
        std::vector<std::uint64_t> seeds;
        std::vector<float> target;
        for (std::size_t i = begin; i < end; ++i) {
            const auto& rec = data.train[order[i]];
            batch.push_back(&rec);
            seeds.push_back(derive_seed(sample_root, fnv1a(rec.id)));
            target.push_back(static_cast<float>(rec.label.arousal));
            target.push_back(static_cast<float>(rec.label.valence));
        }
        const auto inputs = source.batch(model, batch, seeds);
        Graph<float> graph;
        Rng dropout_rng(derive_seed(dropout_root, steps));
        const auto pred = model.forward(graph, inputs, &dropout_rng);
        const auto loss = stage_loss(graph, cfg.stage, pred, Tensor<float>({batch.size(), 2}, std::move(target)));
        const double value = loss.item();
        if (!std::isfinite(value)) {
            throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                               std::to_string(steps));
        }
        params.zero_grad();
        graph.backward(loss);
        clip_gradients(params, cfg.clip_norm);
        sgd_step(params, stats.lr, cfg.momentum, velocity);
        loss_sum += value;
    }
    stats.train_loss = loss_sum / static_cast<double>(steps);

    const auto preds = predict(model, data.val, source, cfg.batch_size);
    std::vector<AffectPair> targets;
    targets.reserve(data.val.size());
    for (const auto& rec : data.val) targets.push_back(rec.label);
    stats.val = evaluate(preds, targets);
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    return stats;
}

// ------------------------------------------------------------------ run state

namespace {

constexpr std::string_view kStateMagic{"STATE1\0", 7};

std::string epoch_name(std::size_t epoch, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "epoch_%03zu.%s", epoch, ext);
    return buf;
}

std::string format_fixed(double v, int digits) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

}  // namespace

std::string format_stats_row(const EpochStats& s) {
    return std::to_string(s.epoch) + "," + format_double(s.lr) + "," + format_double(s.train_loss) + "," +
           format_double(s.val.ccc_arousal) + "," + format_double(s.val.ccc_valence) + "," +
           format_double(s.val.total) + "," + format_fixed(s.seconds, 3);
}

std::string encode_run_state(const RunState& state) {
    ByteWriter w;
    w.bytes(kStateMagic);
    w.u32(kRngVersion);
    w.u64(state.seed);
    w.u8(static_cast<std::uint8_t>(state.stage));
    w.u64(state.next_epoch);
    w.u8(state.has_best ? 1 : 0);
    w.f64(state.best_total);
    w.u64(state.best_epoch);
    w.u32(static_cast<std::uint32_t>(state.velocity.size()));
    for (const auto& [name, v] : state.velocity) {
        w.u16(static_cast<std::uint16_t>(name.size()));
        w.bytes(name);
        w.u64(v.size());
        for (const float x : v) w.f32(x);
    }
    return w.take();
}

RunState decode_run_state(std::string_view bytes, const std::string& context) {
    ByteReader r(bytes, context);
    r.expect(kStateMagic);
    const auto version = r.u32();
    if (version != kRngVersion) {
        throw DataError(context + ": run state written with RNG version " + std::to_string(version) +
                        ", this build uses " + std::to_string(kRngVersion));
    }
    RunState s;
    s.seed = r.u64();
    const auto stage = r.u8();
    if (stage > static_cast<std::uint8_t>(Stage::joint)) throw DataError(context + ": bad stage tag");
    s.stage = static_cast<Stage>(stage);
    s.next_epoch = r.u64();
    s.has_best = r.u8() != 0;
    s.best_total = r.f64();
    s.best_epoch = r.u64();
    const auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name(r.bytes(r.u16()));
        const auto n = r.u64();
        if (n > r.remaining() / 4) throw DataError(context + ": truncated velocity for '" + name + "'");
        std::vector<float> v(n);
        for (auto& x : v) x = r.f32();
        s.velocity.emplace(std::move(name), std::move(v));
    }
    if (r.remaining() != 0) throw DataError(context + ": trailing bytes");
    return s;
}

// ------------------------------------------------------------------ fit

namespace {

std::optional<std::size_t> newest_complete_epoch(const fs::path& dir) {
    if (!fs::is_directory(dir)) return std::nullopt;
    static const std::regex pattern(R"(epoch_(\d+)\.state)");
    std::optional<std::size_t> best;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (!std::regex_match(name, m, pattern)) continue;
        const std::size_t epoch = std::stoul(m[1].str());
        if (!fs::exists(dir / epoch_name(epoch, "ckpt"))) continue;
        if (!best || epoch > *best) best = epoch;
    }
    return best;
}

std::vector<std::string> stats_rows_before(const fs::path& path, std::size_t next_epoch) {
    std::vector<std::string> rows;
    if (!fs::exists(path)) return rows;
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t epoch = std::stoul(line.substr(0, line.find(',')));
        if (epoch < next_epoch) rows.push_back(line);
    }
    return rows;
}

void load_pretrained(ParamSet<float>& params, const std::optional<fs::path>& path, const char* prefix,
                     const char* what) {
    if (!path) {
        throw DataError(std::string("joint stage requires a pre-trained ") + what + " checkpoint");
    }
    assign_params(params, load_checkpoint(*path), prefix);
}

}  // namespace

FitResult fit(const TrainConfig& cfg, const TrainData& data, const FitOptions& options) {
    cfg.validate();
    AffectModel<float> model(cfg.stage, options.model, cfg.seed);
    InputSource source(options.model, options.data);
    const fs::path& dir = options.out_dir;
    fs::create_directories(dir);

    RunState state;
    state.seed = cfg.seed;
    state.stage = cfg.stage;
    std::optional<std::size_t> resumed;
    if (options.resume) resumed = newest_complete_epoch(dir);
    if (resumed) {
        const auto path = dir / epoch_name(*resumed, "state");
        state = decode_run_state(read_file(path), path.string());
        if (state.seed != cfg.seed || state.stage != cfg.stage) {
            throw DataError(path.string() + ": run was started with a different seed or stage");
        }
        assign_params(model.params(), load_checkpoint(dir / epoch_name(*resumed, "ckpt")));
    } else if (cfg.stage == Stage::joint) {
        load_pretrained(model.params(), options.anet_ckpt, "anet.", "ANet");
        load_pretrained(model.params(), options.vnet_ckpt, "vnet.", "VNet");
    }

    const fs::path stats_path = dir / "stats.csv";
    auto rows = stats_rows_before(stats_path, resumed ? state.next_epoch : 0);

    FitResult result;
    std::size_t run_this_call = 0;
    for (std::size_t epoch = state.next_epoch; epoch < cfg.epochs; ++epoch) {
        if (options.max_epochs_this_run && run_this_call >= *options.max_epochs_this_run) break;
        const auto stats = train_epoch(model, data, source, cfg, epoch, state.velocity);
        ++run_this_call;

        save_checkpoint(dir / epoch_name(epoch, "ckpt"), model.params());
        if (!state.has_best || stats.val.total > state.best_total) {
            state.has_best = true;
            state.best_total = stats.val.total;
            state.best_epoch = epoch;
            save_checkpoint(dir / "best.ckpt", model.params());
        }
        state.next_epoch = epoch + 1;
        write_file_atomic(dir / epoch_name(epoch, "state"), encode_run_state(state));

        rows.push_back(format_stats_row(stats));
        std::string csv = std::string(kStatsHeader) + "\n";
        for (const auto& row : rows) csv += row + "\n";
        write_file_atomic(stats_path, csv);

        result.history.push_back(stats);
        if (options.on_epoch) options.on_epoch(stats);
    }
    if (state.next_epoch >= cfg.epochs) {
        result.final_ckpt = dir / "final.ckpt";
        save_checkpoint(result.final_ckpt, model.params());
    }
    result.best_epoch = state.best_epoch;
    result.best_total = state.best_total;
    return result;
}

// ------------------------------------------------------------------ settings

namespace {

std::size_t parse_count(const std::string& text, const std::string& what, long long min) {
    const long long v = parse_int(text, what);
    if (v < min) throw ConfigError(what + " must be >= " + std::to_string(min) + ", got " + text);
    return static_cast<std::size_t>(v);
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys{
        "lr_init", "lr_decay", "lr_step", "clip_norm", "batch_size", "epochs", "momentum", "seed", "stage",
        "val_fraction", "cache_mb", "anet.scale", "anet.conv_channels", "anet.fc_dim", "anet.dropout",
        "anet.input_downsample", "vnet.scale", "vnet.conv_channels", "vnet.embed_dim", "vnet.lstm_hidden",
        "vnet.n_frames", "vnet.dropout", "vnet.input_downsample", "joint.n_audio_windows", "joint.freeze_anet",
        "joint.freeze_vnet", "stft.window_len", "stft.hop", "stft.n_fft", "stft.segment_seconds"};
    return keys;
}

}  // namespace

TrainSettings settings_from_config(const KeyValueConfig& config) {
    config.reject_unknown(known_keys());
    TrainSettings s;
    auto get = [&](const std::string& key, auto&& apply) {
        if (auto v = config.get(key)) apply(*v);
    };

    get("anet.scale", [&](const std::string& v) {
        if (v == "full") s.model.anet = AnetConfig::full();
        else if (v != "toy") throw ConfigError("anet.scale must be toy or full, got '" + v + "'");
    });
    get("vnet.scale", [&](const std::string& v) {
        if (v == "full") s.model.vnet = VnetConfig::full();
        else if (v != "toy") throw ConfigError("vnet.scale must be toy or full, got '" + v + "'");
    });

    auto& t = s.train;
    get("lr_init", [&](const std::string& v) { t.lr_init = parse_double(v, "lr_init"); });
    get("lr_decay", [&](const std::string& v) { t.lr_decay = parse_double(v, "lr_decay"); });
    get("lr_step", [&](const std::string& v) { t.lr_step = parse_count(v, "lr_step", 1); });
    get("clip_norm", [&](const std::string& v) { t.clip_norm = parse_double(v, "clip_norm"); });
    get("batch_size", [&](const std::string& v) { t.batch_size = parse_count(v, "batch_size", 2); });
    get("epochs", [&](const std::string& v) { t.epochs = parse_count(v, "epochs", 1); });
    get("momentum", [&](const std::string& v) { t.momentum = parse_double(v, "momentum"); });
    get("seed", [&](const std::string& v) { t.seed = static_cast<std::uint64_t>(parse_count(v, "seed", 0)); });
    get("stage", [&](const std::string& v) { t.stage = parse_stage(v); });
    get("val_fraction", [&](const std::string& v) { s.val_fraction = parse_double(v, "val_fraction"); });
    get("cache_mb", [&](const std::string& v) { s.data.cache_mb = parse_count(v, "cache_mb", 0); });

    auto& a = s.model.anet;
    get("anet.conv_channels", [&](const std::string& v) { a.conv_channels = parse_size_list(v, "anet.conv_channels"); });
    get("anet.fc_dim", [&](const std::string& v) { a.fc_dim = parse_count(v, "anet.fc_dim", 2); });
    get("anet.dropout", [&](const std::string& v) { a.dropout_p = parse_double(v, "anet.dropout"); });
    get("anet.input_downsample",
        [&](const std::string& v) { a.input_downsample = parse_count(v, "anet.input_downsample", 1); });

    auto& vn = s.model.vnet;
    get("vnet.conv_channels", [&](const std::string& v) { vn.conv_channels = parse_size_list(v, "vnet.conv_channels"); });
    get("vnet.embed_dim", [&](const std::string& v) { vn.embed_dim = parse_count(v, "vnet.embed_dim", 2); });
    get("vnet.lstm_hidden", [&](const std::string& v) { vn.lstm_hidden = parse_count(v, "vnet.lstm_hidden", 1); });
    get("vnet.n_frames", [&](const std::string& v) { vn.n_frames = parse_count(v, "vnet.n_frames", 1); });
    get("vnet.dropout", [&](const std::string& v) { vn.dropout_p = parse_double(v, "vnet.dropout"); });
    get("vnet.input_downsample",
        [&](const std::string& v) { vn.input_downsample = parse_count(v, "vnet.input_downsample", 1); });

    get("joint.n_audio_windows",
        [&](const std::string& v) { s.model.n_audio_windows = parse_count(v, "joint.n_audio_windows", 1); });
    get("joint.freeze_anet", [&](const std::string& v) { s.model.freeze_anet = parse_bool(v, "joint.freeze_anet"); });
    get("joint.freeze_vnet", [&](const std::string& v) { s.model.freeze_vnet = parse_bool(v, "joint.freeze_vnet"); });

    auto& st = s.data.stft;
    get("stft.window_len", [&](const std::string& v) { st.window_len = parse_count(v, "stft.window_len", 1); });
    get("stft.hop", [&](const std::string& v) { st.hop = parse_count(v, "stft.hop", 1); });
    get("stft.n_fft", [&](const std::string& v) { st.n_fft = parse_count(v, "stft.n_fft", 2); });
    get("stft.segment_seconds",
        [&](const std::string& v) { st.segment_seconds = parse_double(v, "stft.segment_seconds"); });
    a.input_bins = st.bins();
    a.input_frames = st.frames();

    s.train.validate();
    s.model.validate();
    if (!(s.val_fraction > 0.0 && s.val_fraction < 1.0)) throw ConfigError("val_fraction must be in (0, 1)");
    return s;
}

std::string settings_help() {
    const TrainSettings d;
    std::ostringstream os;
    os << "Config keys (key = value, '#' comments):\n"
       << "  lr_init=" << format_double(d.train.lr_init) << " lr_decay=" << format_double(d.train.lr_decay)
       << " lr_step=" << d.train.lr_step << " clip_norm=" << format_double(d.train.clip_norm)
       << " batch_size=" << d.train.batch_size << " epochs=" << d.train.epochs
       << " momentum=" << format_double(d.train.momentum) << " seed=" << d.train.seed << " stage=anet\n"
       << "  val_fraction=" << format_double(d.val_fraction) << " cache_mb=" << d.data.cache_mb << "\n"
       << "  anet.scale=toy anet.conv_channels=8,16,32 anet.fc_dim=" << d.model.anet.fc_dim
       << " anet.dropout=" << format_double(d.model.anet.dropout_p)
       << " anet.input_downsample=" << d.model.anet.input_downsample << "\n"
       << "  vnet.scale=toy vnet.conv_channels=8,16 vnet.embed_dim=" << d.model.vnet.embed_dim
       << " vnet.lstm_hidden=" << d.model.vnet.lstm_hidden << " vnet.n_frames=" << d.model.vnet.n_frames
       << " vnet.dropout=" << format_double(d.model.vnet.dropout_p)
       << " vnet.input_downsample=" << d.model.vnet.input_downsample << "\n"
       << "  joint.n_audio_windows=" << d.model.n_audio_windows << " joint.freeze_anet=false joint.freeze_vnet=false\n"
       << "  stft.window_len=" << d.data.stft.window_len << " stft.hop=" << d.data.stft.hop
       << " stft.n_fft=" << d.data.stft.n_fft << " stft.segment_seconds=" << format_double(d.data.stft.segment_seconds)
       << "\n";
    return os.str();
}

template double gradient_norm(const ParamSet<float>&);
template double gradient_norm(const ParamSet<double>&);
template double clip_gradients(ParamSet<float>&, double);
template double clip_gradients(ParamSet<double>&, double);
template void sgd_step(ParamSet<float>&, double, double, Velocity<float>&);
template void sgd_step(ParamSet<double>&, double, double, Velocity<double>&);
template Tensor<float> stage_loss(Graph<float>&, Stage, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> stage_loss(Graph<double>&, Stage, const Tensor<double>&, const Tensor<double>&);

}  // namespace avemo
