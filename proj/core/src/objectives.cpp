#include "avemo/objectives.hpp"

#include "avemo/error.hpp"

#include <algorithm>
#include <cstdio>

namespace avemo {

double ccc(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw ConfigError("ccc: length mismatch " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    }
    if (x.size() < 2) {
        throw ConfigError("ccc: need at least 2 values");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double vx = 0.0, vy = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        vx += dx * dx;
        vy += dy * dy;
        cov += dx * dy;
    }
    vx /= n;
    vy /= n;
    cov /= n;
    const double denom = vx + vy + (mx - my) * (mx - my);
    if (denom == 0.0) return 0.0;
    return std::clamp(2.0 * cov / denom, -1.0, 1.0);
}

template <typename T>
Tensor<T> mse_loss(Graph<T>& graph, const Tensor<T>& pred, const Tensor<T>& target) {
    if (pred.shape() != target.shape()) {
        throw ConfigError("mse_loss: shape mismatch " + shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
    }
    if (pred.size() == 0) throw ConfigError("mse_loss: empty batch");
    auto diff = graph.sub(pred, target);
    return graph.mean(graph.mul(diff, diff));
}

namespace {

template <typename T>
Tensor<T> ccc_column(Graph<T>& g, const Tensor<T>& x, const Tensor<T>& y) {
    const Shape& s = x.shape();
    auto mx = g.mean(x);
    auto my = g.mean(y);
    auto dx = g.sub(x, g.broadcast(mx, s));
    auto dy = g.sub(y, g.broadcast(my, s));
    auto vx = g.mean(g.mul(dx, dx));
    auto vy = g.mean(g.mul(dy, dy));
    auto cov = g.mean(g.mul(dx, dy));
    auto gap = g.sub(mx, my);
    auto denom = g.add(g.add(vx, vy), g.mul(gap, gap));
    return g.div_or_zero(g.affine(cov, T(2), T(0)), denom);
}

}  // namespace

template <typename T>
Tensor<T> ccc_loss(Graph<T>& graph, const Tensor<T>& pred, const Tensor<T>& target) {
    if (pred.shape() != target.shape() || pred.rank() != 2 || pred.dim(1) != 2) {
        throw ConfigError("ccc_loss: expected matching [B,2] tensors, got " + shape_str(pred.shape()) + " and " +
                          shape_str(target.shape()));
    }
    if (pred.dim(0) < 2) {
        throw ConfigError("ccc_loss: batch size must be >= 2");
    }
    auto arousal = ccc_column(graph, graph.slice(pred, 1, 0, 1), graph.slice(target, 1, 0, 1));
    auto valence = ccc_column(graph, graph.slice(pred, 1, 1, 2), graph.slice(target, 1, 1, 2));
    return graph.affine(graph.add(arousal, valence), T(-0.5), T(1));
}

template Tensor<float> mse_loss(Graph<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> mse_loss(Graph<double>&, const Tensor<double>&, const Tensor<double>&);
template Tensor<float> ccc_loss(Graph<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> ccc_loss(Graph<double>&, const Tensor<double>&, const Tensor<double>&);

CccReport evaluate(std::span<const AffectPair> predictions, std::span<const AffectPair> targets) {
    if (predictions.size() != targets.size()) {
        throw DataError("evaluate: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(targets.size()) + " targets");
    }
    if (predictions.size() < 2) {
        throw DataError("evaluate: need at least 2 utterances");
    }
    std::vector<double> pa, pv, ta, tv;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        pa.push_back(predictions[i].arousal);
        pv.push_back(predictions[i].valence);
        ta.push_back(targets[i].arousal);
        tv.push_back(targets[i].valence);
    }
    return CccReport::from_components(ccc(pa, ta), ccc(pv, tv));
}

namespace {

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

std::string report_csv(const CccReport& report, const std::string& metric) {
    return "metric,arousal,valence,total\n" + metric + "," + fixed4(report.ccc_arousal) + "," +
           fixed4(report.ccc_valence) + "," + fixed4(report.total) + "\n";
}

std::string report_table(const std::vector<std::pair<std::string, CccReport>>& rows) {
    std::size_t width = 6;
    for (const auto& [name, r] : rows) width = std::max(width, name.size());
    auto pad = [](std::string s, std::size_t w) {
        s.resize(std::max(s.size(), w), ' ');
        return s;
    };
    std::string out = pad("", width) + " | " + pad("Arousal", 8) + " | " + pad("Valence", 8) + " | Total\n";
    out += std::string(width + 36, '-') + "\n";
    for (const auto& [name, r] : rows) {
        out += pad(name, width) + " | " + pad(fixed4(r.ccc_arousal), 8) + " | " + pad(fixed4(r.ccc_valence), 8) +
               " | " + fixed4(r.total) + "\n";
    }
    return out;
}

}  // namespace avemo
