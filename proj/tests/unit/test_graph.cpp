#include "avemo/error.hpp"
#include "avemo/graph.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace avemo;
using T = Tensor<double>;

namespace {

std::vector<double> values(const T& t) { return {t.data().begin(), t.data().end()}; }
std::vector<double> grads(const T& t) { return {t.grad().begin(), t.grad().end()}; }

}  // namespace

TEST(Ops, LinearExamples) {
    Graph<double> g;
    auto y = g.linear(T({1, 2}, {1, 2}), T({2, 2}, {1, 0, 0, 1}), T({2}, {0, 0}));
    EXPECT_EQ(values(y), (std::vector<double>{1, 2}));
    auto z = g.linear(T({1, 2}, {1, 1}), T({2, 1}, {2, 3}), T({1}, std::vector<double>{1}));
    EXPECT_EQ(z.item(), 6.0);
    EXPECT_THROW(g.linear(T({1, 3}), T({2, 1}), T({1})), ConfigError);
}

TEST(Ops, MatmulValues) {
    Graph<double> g;
    auto y = g.matmul(T({2, 2}, {1, 2, 3, 4}), T({2, 1}, {5, 6}));
    EXPECT_EQ(values(y), (std::vector<double>{17, 39}));
}

TEST(Ops, ConvSumOfOnes) {
    Graph<double> g;
    auto x = T::full({1, 1, 3, 3}, 1.0);
    auto k = T::full({1, 1, 3, 3}, 1.0);
    auto b = T({1}, std::vector<double>{0.0});
    auto y = g.conv2d(x, k, b);
    EXPECT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
    EXPECT_EQ(y.item(), 9.0);
    auto padded = g.conv2d(x, k, b, {1, 1});
    EXPECT_EQ(values(padded), (std::vector<double>{4, 6, 4, 6, 9, 6, 4, 6, 4}));
}

TEST(Ops, ConvStrideAndBias) {
    Graph<double> g;
    std::vector<double> xs(25);
    for (std::size_t i = 0; i < 25; ++i) xs[i] = static_cast<double>(i);
    auto y = g.conv2d(T({1, 1, 5, 5}, xs), T::full({2, 1, 1, 1}, 1.0), T({2}, {0.0, 10.0}), {2, 0});
    EXPECT_EQ(y.shape(), (Shape{1, 2, 3, 3}));
    EXPECT_EQ(values(y), (std::vector<double>{0, 2, 4, 10, 12, 14, 20, 22, 24, 10, 12, 14, 20, 22, 24, 30, 32, 34}));
    EXPECT_THROW(g.conv2d(T({1, 1, 4, 4}, std::vector<double>(16)), T::full({1, 1, 1, 1}, 1.0), T({1}), {2, 0}),
                 ConfigError);
}

TEST(Ops, MaxpoolValueAndTie) {
    Graph<double> g;
    auto y = g.maxpool2d(T({1, 1, 2, 2}, {1, 2, 3, 4}));
    EXPECT_EQ(y.item(), 4.0);

    auto x = T::full({1, 1, 2, 2}, 5.0, true);
    auto z = g.maxpool2d(x);
    g.backward(g.sum(z));
    EXPECT_EQ(grads(x), (std::vector<double>{1, 0, 0, 0}));
}

TEST(Ops, MaxpoolDropsOddEdge) {
    Graph<double> g;
    auto y = g.maxpool2d(T::full({1, 2, 5, 75}, 1.0));
    EXPECT_EQ(y.shape(), (Shape{1, 2, 2, 37}));
}

TEST(Ops, AvgPool) {
    Graph<double> g;
    auto y = g.avgpool2d(T({1, 1, 2, 3}, {1, 2, 3, 4, 5, 6}), 2);
    EXPECT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
    EXPECT_EQ(y.item(), 3.0);
}

TEST(Ops, Activations) {
    Graph<double> g;
    auto x = T({4}, {-20.0, 0.0, 1.0, 20.0});
    auto t = g.tanh(x);
    EXPECT_NEAR(t[0], -1.0, 1e-15);
    EXPECT_EQ(t[1], 0.0);
    EXPECT_NEAR(t[3], 1.0, 1e-15);
    EXPECT_TRUE(std::isfinite(t[0]));
    auto s = g.sigmoid(x);
    EXPECT_EQ(s[1], 0.5);
    EXPECT_NEAR(s[0], 1.0 / (1.0 + std::exp(20.0)), 1e-22);
    auto r = g.relu(x);
    EXPECT_EQ(values(r), (std::vector<double>{0, 0, 1, 20}));
    auto big = g.sigmoid(T({2}, {-800.0, 800.0}));
    EXPECT_EQ(big[0], 0.0);
    EXPECT_EQ(big[1], 1.0);
}

TEST(Ops, DropoutModes) {
    Graph<double> g;
    auto x = T::full({1000}, 1.0);
    Rng rng(1);
    EXPECT_EQ(values(g.dropout(x, 0.0, &rng)), values(x));
    EXPECT_EQ(values(g.dropout(x, 0.7, nullptr)), values(x));
    EXPECT_THROW(g.dropout(x, 1.0, &rng), ConfigError);
}

TEST(Ops, DropoutPreservesMean) {
    Graph<double> g;
    auto x = T::full({100000}, 1.0);
    Rng rng(2);
    auto y = g.dropout(x, 0.5, &rng);
    double sum = 0.0;
    std::size_t zeros = 0;
    for (double v : y.data()) {
        sum += v;
        if (v == 0.0) ++zeros;
        else EXPECT_EQ(v, 2.0);
    }
    EXPECT_NEAR(sum / 100000.0, 1.0, 0.02);
    EXPECT_NEAR(static_cast<double>(zeros) / 100000.0, 0.5, 0.01);
}

TEST(Ops, DivOrZero) {
    Graph<double> g;
    auto a = T({3}, {1, 2, 3}, true);
    auto b = T({3}, {2, 0, 4}, true);
    auto y = g.div_or_zero(a, b);
    EXPECT_EQ(values(y), (std::vector<double>{0.5, 0.0, 0.75}));
    g.backward(g.sum(y));
    EXPECT_EQ(grads(a), (std::vector<double>{0.5, 0.0, 0.25}));
    EXPECT_EQ(grads(b)[1], 0.0);
}

TEST(Ops, ConcatStackSliceSelect) {
    Graph<double> g;
    auto a = T::full({3, 64}, 1.0), b = T::full({3, 64}, 2.0);
    auto c = g.concat({a, b}, 1);
    EXPECT_EQ(c.shape(), (Shape{3, 128}));
    EXPECT_EQ(c[63], 1.0);
    EXPECT_EQ(c[64], 2.0);
    auto s = g.stack({a, b}, 1);
    EXPECT_EQ(s.shape(), (Shape{3, 2, 64}));
    auto sl = g.slice(c, 1, 60, 70);
    EXPECT_EQ(sl.shape(), (Shape{3, 10}));
    EXPECT_EQ(sl[3], 1.0);
    EXPECT_EQ(sl[4], 2.0);
    auto sel = g.select(s, 1, 1);
    EXPECT_EQ(sel.shape(), (Shape{3, 64}));
    EXPECT_EQ(sel[0], 2.0);
}

TEST(Ops, MeanAxisOfEqualRows) {
    Graph<double> g;
    std::vector<double> row{0.1, -0.7, 3.3};
    std::vector<double> v;
    for (int t = 0; t < 5; ++t) v.insert(v.end(), row.begin(), row.end());
    auto m = g.mean_axis(T({1, 5, 3}, v), 1);
    EXPECT_EQ(m.shape(), (Shape{1, 3}));
    EXPECT_EQ(values(m), row);
}

TEST(Ops, MeanAxisIgnoresOrder) {
    Graph<double> g;
    auto a = g.mean_axis(T({3, 1}, {0.1, 0.2, 0.3}), 0);
    auto b = g.mean_axis(T({3, 1}, {0.3, 0.1, 0.2}), 0);
    EXPECT_EQ(a.item(), b.item());
}

TEST(Ops, ReshapeAndBroadcast) {
    Graph<double> g;
    auto r = g.reshape(T({2, 3}, {1, 2, 3, 4, 5, 6}), {3, 2});
    EXPECT_EQ(r.shape(), (Shape{3, 2}));
    EXPECT_THROW(g.reshape(r, {4, 2}), ConfigError);
    auto b = g.broadcast(T::scalar(2.0), {2, 2});
    EXPECT_EQ(values(b), (std::vector<double>(4, 2.0)));
}

TEST(Backward, IdentityAndAccumulation) {
    Graph<double> g;
    auto x = T::scalar(3.0, true);
    g.backward(x);
    EXPECT_EQ(grads(x), (std::vector<double>{1.0}));

    auto y = T::scalar(3.0, true);
    g.backward(g.add(y, y));
    EXPECT_EQ(grads(y), (std::vector<double>{2.0}));
}

TEST(Backward, SecondCallAccumulatesLeaves) {
    Graph<double> g;
    auto x = T({2}, {1.0, -2.0}, true);
    auto loss = g.sum(g.mul(x, x));
    g.backward(loss);
    EXPECT_EQ(grads(x), (std::vector<double>{2.0, -4.0}));
    g.backward(loss);
    EXPECT_EQ(grads(x), (std::vector<double>{4.0, -8.0}));
    x.zero_grad();
    EXPECT_EQ(grads(x), (std::vector<double>{0.0, 0.0}));
}

TEST(Backward, ConstantsGetNoStorage) {
    Graph<double> g;
    auto w = T({2}, {1.0, 2.0}, true);
    auto c = T({2}, {3.0, 4.0});
    g.backward(g.sum(g.mul(w, c)));
    EXPECT_FALSE(c.has_grad());
    EXPECT_EQ(grads(w), (std::vector<double>{3.0, 4.0}));
    EXPECT_EQ(g.tape_size(), 2u);
}

TEST(Backward, NoTapeWithoutGradients) {
    Graph<double> g;
    auto y = g.tanh(T({3}, {1, 2, 3}));
    EXPECT_EQ(g.tape_size(), 0u);
    EXPECT_THROW(g.backward(g.sum(y)), ConfigError);
}

TEST(Backward, RejectsNonScalarRoot) {
    Graph<double> g;
    auto x = T({2}, {1.0, 2.0}, true);
    EXPECT_THROW(g.backward(g.tanh(x)), ConfigError);
}

TEST(Backward, CheckFiniteNamesOp) {
    Graph<double> g(GraphOptions{true});
    auto x = T({1}, {std::numeric_limits<double>::infinity()}, true);
    try {
        g.affine(x, 0.0, 1.0);
        FAIL();
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("affine"), std::string::npos);
    }
}

TEST(Tensor, HandleSemanticsAndClone) {
    T a({2}, {1.0, 2.0});
    T b = a;
    b[0] = 9.0;
    EXPECT_EQ(a[0], 9.0);
    EXPECT_TRUE(a.same_storage(b));
    T c = a.clone();
    c[0] = 0.0;
    EXPECT_EQ(a[0], 9.0);
    EXPECT_THROW(T({2, 2}, std::vector<double>{1.0}), ConfigError);
    a.set_requires_grad(true);
    EXPECT_FALSE(a.has_grad());
}
