#pragma once

#include "avemo/graph.hpp"
#include "avemo/ingest.hpp"

#include <span>
#include <string>
#include <vector>

namespace avemo {

// Lin's concordance correlation coefficient with population (1/n) moments:
//   2 cov(x, y) / (var(x) + var(y) + (mean(x) - mean(y))^2)
// Defined as 0 when the denominator vanishes.
double ccc(std::span<const double> x, std::span<const double> y);

// Mean squared error over all elements of two [B, 2] tensors.
template <typename T>
Tensor<T> mse_loss(Graph<T>& graph, const Tensor<T>& pred, const Tensor<T>& target);

// 1 - (CCC(arousal column) + CCC(valence column)) / 2 with batch statistics; B >= 2.
template <typename T>
Tensor<T> ccc_loss(Graph<T>& graph, const Tensor<T>& pred, const Tensor<T>& target);

struct CccReport {
    double ccc_arousal = 0.0;
    double ccc_valence = 0.0;
    double total = 0.0;  // ccc_arousal + ccc_valence

    static CccReport from_components(double arousal, double valence) {
        return {arousal, valence, arousal + valence};
    }
};

CccReport evaluate(std::span<const AffectPair> predictions, std::span<const AffectPair> targets);

// "metric,arousal,valence,total" header plus one row.
std::string report_csv(const CccReport& report, const std::string& metric = "ccc");
// Aligned three-column table, values printed to 4 decimals.
std::string report_table(const std::vector<std::pair<std::string, CccReport>>& rows);

}  // namespace avemo
