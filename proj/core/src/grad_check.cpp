#include "avemo/grad_check.hpp"

#include "avemo/error.hpp"

#include <algorithm>
#include <cmath>

namespace avemo {

GradCheckReport grad_check_shared(const std::function<Tensor<double>(Graph<double>&)>& fn,
                                  std::vector<Tensor<double>> targets, double tolerance, double step) {
    for (auto& t : targets) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    std::vector<std::vector<double>> analytic;
    {
        Graph<double> graph(GraphOptions{.check_finite = true});
        auto out = fn(graph);
        if (!out.defined() || out.size() != 1) {
            throw ConfigError("grad_check: function must return a scalar");
        }
        graph.backward(out);
        for (auto& x : targets) {
            if (x.has_grad()) analytic.emplace_back(x.grad().begin(), x.grad().end());
            else analytic.emplace_back(x.size(), 0.0);
        }
    }

    for (auto& x : targets) x.set_requires_grad(false);
    auto evaluate = [&] {
        Graph<double> graph;
        return fn(graph).item();
    };

    GradCheckReport report;
    report.per_input_max.assign(targets.size(), 0.0);
    for (std::size_t k = 0; k < targets.size(); ++k) {
        auto& x = targets[k];
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double saved = x[i];
            x[i] = saved + step;
            const double plus = evaluate();
            x[i] = saved - step;
            const double minus = evaluate();
            x[i] = saved;
            const double numeric = (plus - minus) / (2.0 * step);
            const double a = analytic[k][i];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            report.per_input_max[k] = std::max(report.per_input_max[k], rel);
            report.max_rel_error = std::max(report.max_rel_error, rel);
            ++report.elements_checked;
        }
    }
    for (auto& x : targets) x.set_requires_grad(true);
    report.passed = report.max_rel_error <= tolerance;
    return report;
}

GradCheckReport grad_check(const GradCheckFn& fn, const std::vector<Tensor<double>>& inputs, double tolerance,
                           double step) {
    std::vector<Tensor<double>> xs;
    xs.reserve(inputs.size());
    for (const auto& in : inputs) xs.push_back(in.clone());
    return grad_check_shared([&](Graph<double>& g) { return fn(g, xs); }, xs, tolerance, step);
}

}  // namespace avemo
