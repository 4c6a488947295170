#include "avemo/audio.hpp"
#include "avemo/binary_io.hpp"
#include "avemo/error.hpp"
#include "avemo/ingest.hpp"
#include "avemo/video.hpp"
#include "support/test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>

using namespace avemo;
namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::vector<UtteranceRecord> make_records(std::size_t n) {
    std::vector<UtteranceRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({"u" + std::to_string(i), "wav/u" + std::to_string(i) + ".wav",
                       "frames/u" + std::to_string(i), {0.1 * static_cast<double>(i % 5), -0.2}});
    }
    return out;
}

// Every regular file under root, relative path -> contents.
std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
    }
    return out;
}

}  // namespace

TEST(Manifest, TwoRowsInOrder) {
    avemo::testing::TempDir dir;
    write_text(dir / "m.csv", std::string(kManifestHeader) + "\nb,b.wav,fb,0.5,-0.5\na,a.wav,fa,0,1\n");
    auto recs = load_manifest(dir / "m.csv");
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].id, "b");
    EXPECT_EQ(recs[1].id, "a");
    EXPECT_EQ(recs[0].label, (AffectPair{0.5, -0.5}));
    EXPECT_EQ(recs[1].wav_path, fs::path("a.wav"));
}

TEST(Manifest, OutOfRangeNamesRow) {
    avemo::testing::TempDir dir;
    write_text(dir / "m.csv", std::string(kManifestHeader) + "\na,a.wav,fa,0,0\nb,b.wav,fb,1.5,0\n");
    try {
        load_manifest(dir / "m.csv");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
    }
}

TEST(Manifest, HeaderOnlyIsEmpty) {
    avemo::testing::TempDir dir;
    write_text(dir / "m.csv", std::string(kManifestHeader) + "\n");
    EXPECT_TRUE(load_manifest(dir / "m.csv").empty());
}

TEST(Manifest, Rejections) {
    avemo::testing::TempDir dir;
    write_text(dir / "dup.csv", std::string(kManifestHeader) + "\na,a.wav,fa,0,0\na,b.wav,fb,0,0\n");
    EXPECT_THROW(load_manifest(dir / "dup.csv"), DataError);
    write_text(dir / "hdr.csv", "id,wav,frames,a,v\n");
    EXPECT_THROW(load_manifest(dir / "hdr.csv"), DataError);
    write_text(dir / "cols.csv", std::string(kManifestHeader) + "\na,a.wav,0,0\n");
    EXPECT_THROW(load_manifest(dir / "cols.csv"), DataError);
    write_text(dir / "nan.csv", std::string(kManifestHeader) + "\na,a.wav,fa,nan,0\n");
    EXPECT_THROW(load_manifest(dir / "nan.csv"), DataError);
    EXPECT_THROW(load_manifest(dir / "absent.csv"), DataError);
}

TEST(Manifest, WriteReadWriteIsByteIdentical) {
    avemo::testing::TempDir dir;
    auto recs = make_records(7);
    recs[3].label = {1.0 / 3.0, -0.123456789012345};
    write_manifest(dir / "a.csv", recs);
    auto back = load_manifest(dir / "a.csv");
    EXPECT_EQ(back, recs);
    write_manifest(dir / "b.csv", back);
    EXPECT_EQ(read_file(dir / "a.csv"), read_file(dir / "b.csv"));
}

TEST(Manifest, ResolvePathsAnchorsRelative) {
    auto recs = resolve_paths(make_records(1), "/data/set");
    EXPECT_EQ(recs[0].wav_path, fs::path("/data/set/wav/u0.wav"));
    auto abs = make_records(1);
    abs[0].wav_path = "/x/y.wav";
    EXPECT_EQ(resolve_paths(abs, "/data")[0].wav_path, fs::path("/x/y.wav"));
}

TEST(Split, SizesAndDisjoint) {
    auto recs = make_records(10);
    auto s = split_train_val(recs, 0.2, 7);
    EXPECT_EQ(s.train.size(), 8u);
    EXPECT_EQ(s.val.size(), 2u);
    std::set<std::string> ids;
    for (const auto& r : s.train) ids.insert(r.id);
    for (const auto& r : s.val) EXPECT_EQ(ids.count(r.id), 0u);
    for (const auto& r : s.val) ids.insert(r.id);
    EXPECT_EQ(ids.size(), 10u);
}

TEST(Split, Deterministic) {
    auto recs = make_records(30);
    auto a = split_train_val(recs, 0.3, 5);
    auto b = split_train_val(recs, 0.3, 5);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.val, b.val);
    auto c = split_train_val(recs, 0.3, 6);
    EXPECT_NE(a.val, c.val);
}

TEST(Split, Clamp) {
    auto s = split_train_val(make_records(2), 0.01, 1);
    EXPECT_EQ(s.train.size(), 1u);
    EXPECT_EQ(s.val.size(), 1u);
    auto t = split_train_val(make_records(3), 0.99, 1);
    EXPECT_EQ(t.train.size(), 1u);
    EXPECT_EQ(t.val.size(), 2u);
    EXPECT_THROW(split_train_val(make_records(1), 0.5, 1), DataError);
    EXPECT_THROW(split_train_val(make_records(4), 1.0, 1), ConfigError);
}

TEST(Synthetic, CountsAndShapes) {
    avemo::testing::TempDir dir;
    SynthSpec spec;
    spec.n_utterances = 4;
    spec.seed = 1;
    auto manifest = generate_synthetic(spec, dir / "out");
    auto recs = load_manifest_resolved(manifest);
    ASSERT_EQ(recs.size(), 4u);
    for (const auto& r : recs) {
        auto wave = decode_wav(r.wav_path);
        EXPECT_EQ(wave.samples.size(), 48000u);
        EXPECT_EQ(list_frame_files(r.frames_dir).size(), 16u);
        EXPECT_GE(r.label.arousal, -0.8);
        EXPECT_LE(r.label.arousal, 0.8);
    }
}

TEST(Synthetic, ByteIdenticalRegeneration) {
    avemo::testing::TempDir dir;
    SynthSpec spec;
    spec.n_utterances = 3;
    spec.seed = 5;
    generate_synthetic(spec, dir / "a", 1);
    generate_synthetic(spec, dir / "b", 3);
    EXPECT_EQ(snapshot(dir / "a"), snapshot(dir / "b"));
}

TEST(Synthetic, SamplesInRange) {
    auto recs = load_manifest_resolved(avemo::testing::shared_corpus());
    float lo = 1.0f, hi = -1.0f;
    for (const auto& r : recs) {
        for (float s : decode_wav(r.wav_path).samples) {
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
    }
    EXPECT_GE(lo, -1.0f);
    EXPECT_LT(hi, 1.0f);
    EXPECT_LT(lo, -0.1f);
    EXPECT_GT(hi, 0.1f);
}

TEST(Synthetic, InvalidSpec) {
    SynthSpec spec;
    spec.n_utterances = 0;
    EXPECT_THROW(validate(spec), ConfigError);
    spec = SynthSpec{};
    spec.audio_seconds = -1;
    EXPECT_THROW(validate(spec), ConfigError);
}
