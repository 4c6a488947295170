#include "avemo/binary_io.hpp"
#include "avemo/error.hpp"
#include "avemo/param_set.hpp"
#include "avemo/rng.hpp"
#include "support/test_support.hpp"

#include <gtest/gtest.h>

using namespace avemo;

namespace {

ParamSet<float> sample_set() {
    Rng rng(4);
    ParamSet<float> set;
    for (auto [name, shape] : std::vector<std::pair<std::string, Shape>>{
             {"b.weight", {3, 2}}, {"a.bias", {5}}, {"c.kernel", {2, 1, 3, 3}}}) {
        Tensor<float> t(shape, true);
        for (auto& v : t.data()) v = static_cast<float>(rng.normal());
        set.add(name, t);
    }
    return set;
}

}  // namespace

TEST(ParamSet, SortedIterationAndPrefix) {
    auto set = sample_set();
    std::vector<std::string> names;
    for (const auto& [n, t] : set) names.push_back(n);
    EXPECT_EQ(names, (std::vector<std::string>{"a.bias", "b.weight", "c.kernel"}));
    EXPECT_EQ(set.element_count(), 5u + 6u + 18u);
    EXPECT_EQ(set.with_prefix("b.").size(), 1u);
    EXPECT_THROW(set.at("zzz"), ConfigError);
    EXPECT_THROW(set.add("a.bias", Tensor<float>({1})), ConfigError);
}

TEST(Checkpoint, WriteReadWriteIsByteIdentical) {
    avemo::testing::TempDir dir;
    auto set = sample_set();
    save_checkpoint(dir / "a.ckpt", set);
    auto back = load_checkpoint(dir / "a.ckpt");
    ASSERT_EQ(back.size(), set.size());
    for (const auto& [name, t] : set) {
        EXPECT_EQ(back.at(name).shape(), t.shape());
        EXPECT_TRUE(std::equal(t.data().begin(), t.data().end(), back.at(name).data().begin()));
    }
    save_checkpoint(dir / "b.ckpt", back);
    EXPECT_EQ(read_file(dir / "a.ckpt"), read_file(dir / "b.ckpt"));
}

TEST(Checkpoint, RejectsCorruption) {
    auto bytes = encode_checkpoint(sample_set());
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3), "c"), DataError);
    EXPECT_THROW(decode_checkpoint(bytes + "xx", "c"), DataError);
    bytes[1] = 'Q';
    EXPECT_THROW(decode_checkpoint(bytes, "c"), DataError);
    EXPECT_THROW(load_checkpoint("/nonexistent/x.ckpt"), DataError);
}

TEST(Checkpoint, AssignParams) {
    auto src = sample_set();
    ParamSet<double> dst;
    dst.add("a.bias", Tensor<double>({5}));
    dst.add("b.weight", Tensor<double>({3, 2}));
    dst.add("z.other", Tensor<double>({1}));
    assign_params(dst, src, "a.");
    EXPECT_EQ(dst.at("a.bias")[2], static_cast<double>(src.at("a.bias")[2]));
    EXPECT_EQ(dst.at("b.weight")[0], 0.0);
    EXPECT_THROW(assign_params(dst, src), DataError);

    ParamSet<double> wrong;
    wrong.add("a.bias", Tensor<double>({4}));
    EXPECT_THROW(assign_params(wrong, src), DataError);
}
