#pragma once

#include "avemo/graph.hpp"

#include <functional>
#include <vector>

namespace avemo {

struct GradCheckReport {
    // max over elements of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
    double max_rel_error = 0.0;
    std::vector<double> per_input_max;
    std::size_t elements_checked = 0;
    bool passed = false;
};

// Builds the scalar to differentiate from `inputs` on a fresh graph.
using GradCheckFn = std::function<Tensor<double>(Graph<double>&, const std::vector<Tensor<double>>&)>;

// Compares reverse-mode gradients with central differences (f(x+h) - f(x-h)) / 2h
// for every element of every input. Inputs are cloned; the caller's tensors are untouched.
GradCheckReport grad_check(const GradCheckFn& fn, const std::vector<Tensor<double>>& inputs,
                           double tolerance = 1e-4, double step = 1e-5);

// Same comparison for tensors the function reaches by itself (model
// parameters, say). Their values are perturbed in place and restored;
// they are left requiring gradients, with any accumulated gradient dropped.
GradCheckReport grad_check_shared(const std::function<Tensor<double>(Graph<double>&)>& fn,
                                  std::vector<Tensor<double>> targets, double tolerance = 1e-4,
                                  double step = 1e-5);

// Named checks over every differentiable op, the recurrent cells and
// end-to-end miniature models.
std::vector<std::string> gradient_case_names();
GradCheckReport run_gradient_case(const std::string& name, double tolerance = 1e-4, std::uint64_t seed = 7);

}  // namespace avemo
