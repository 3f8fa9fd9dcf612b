#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fgml {

// Row = true class, column = predicted class.
struct ConfusionMatrix {
    size_t classes = 0;
    std::vector<uint64_t> counts;  // C x C row-major

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(size_t c) : classes(c), counts(c * c, 0) {}

    uint64_t& at(size_t true_class, size_t predicted) {
        return counts[true_class * classes + predicted];
    }
    uint64_t at(size_t true_class, size_t predicted) const {
        return counts[true_class * classes + predicted];
    }
    uint64_t total() const;
    std::string to_csv(const std::vector<std::string>& class_names) const;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    uint64_t support = 0;
};

struct MetricsReport {
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
};

// One-vs-rest metrics: per class k, TP = cm[k][k], FP = column sum - TP,
// FN = row sum - TP; 0/0 ratios are defined as 0; accuracy = trace / total;
// macro values are unweighted class means.
MetricsReport metrics_from_confusion(const ConfusionMatrix& cm);

std::string format_metrics(const MetricsReport& report,
                           const std::vector<std::string>& class_names);

}  // namespace fgml
