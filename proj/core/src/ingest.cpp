#include "avemo/ingest.hpp"

#include "avemo/binary_io.hpp"
#include "avemo/error.hpp"
#include "avemo/kv_config.hpp"
#include "avemo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <set>
#include <sstream>

namespace avemo {

void validate_affect(const AffectPair& label, const std::string& where) {
    for (double v : {label.arousal, label.valence}) {
        if (!std::isfinite(v)) {
            throw DataError(where + ": label is not finite");
        }
        if (v < -1.0 || v > 1.0) {
            throw DataError(where + ": label " + format_double(v) + " outside [-1, 1]");
        }
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_label(const std::string& text, const std::string& where) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc() || ptr != last) {
        throw DataError(where + ": non-numeric label '" + text + "'");
    }
    return v;
}

}  // namespace

std::vector<UtteranceRecord> load_manifest(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw DataError("manifest not found: " + path.string());
    }
    const auto text = read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError(path.string() + ": empty file, missing header");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kManifestHeader) {
        throw DataError(path.string() + ": bad header, expected '" + std::string(kManifestHeader) + "'");
    }

    std::vector<UtteranceRecord> records;
    std::set<std::string> seen;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path.string() + " row " + std::to_string(row);
        auto fields = split_csv_line(line);
        if (fields.size() != 5) {
            throw DataError(where + ": expected 5 columns, found " + std::to_string(fields.size()));
        }
        UtteranceRecord rec;
        rec.id = fields[0];
        if (rec.id.empty()) {
            throw DataError(where + ": empty id");
        }
        rec.wav_path = fields[1];
        rec.frames_dir = fields[2];
        rec.label.arousal = parse_label(fields[3], where);
        rec.label.valence = parse_label(fields[4], where);
        validate_affect(rec.label, where);
        if (!seen.insert(rec.id).second) {
            throw DataError(where + ": duplicate id '" + rec.id + "'");
        }
        records.push_back(std::move(rec));
        ++row;
    }
    return records;
}

std::string format_manifest(const std::vector<UtteranceRecord>& records) {
    std::string out = std::string(kManifestHeader) + "\n";
    for (const auto& r : records) {
        out += r.id + "," + r.wav_path.generic_string() + "," + r.frames_dir.generic_string() + "," +
               format_double(r.label.arousal) + "," + format_double(r.label.valence) + "\n";
    }
    return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<UtteranceRecord>& records) {
    write_file_atomic(path, format_manifest(records));
}

std::vector<UtteranceRecord> resolve_paths(std::vector<UtteranceRecord> records,
                                           const std::filesystem::path& base_dir) {
    for (auto& r : records) {
        if (r.wav_path.is_relative()) r.wav_path = base_dir / r.wav_path;
        if (r.frames_dir.is_relative()) r.frames_dir = base_dir / r.frames_dir;
    }
    return records;
}

std::vector<UtteranceRecord> load_manifest_resolved(const std::filesystem::path& path) {
    return resolve_paths(load_manifest(path), path.parent_path());
}

TrainValSplit split_train_val(const std::vector<UtteranceRecord>& records, double val_fraction,
                              std::uint64_t seed) {
    const std::size_t n = records.size();
    if (n < 2) {
        throw DataError("split_train_val: need at least 2 records, got " + std::to_string(n));
    }
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw ConfigError("split_train_val: val_fraction must be in (0, 1)");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(derive_seed(seed, "split"));
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i)));
        std::swap(order[i], order[j]);
    }
    auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
    n_val = std::clamp<std::size_t>(n_val, 1, n - 1);

    TrainValSplit split;
    for (std::size_t k = 0; k < n; ++k) {
        (k < n_val ? split.val : split.train).push_back(records[order[k]]);
    }
    return split;
}

}  // namespace avemo
