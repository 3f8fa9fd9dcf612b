#include "fgml/metrics.hpp"

#include <cstdio>
#include <sstream>

#include "fgml/error.hpp"

namespace fgml {

uint64_t ConfusionMatrix::total() const {
    uint64_t t = 0;
    for (uint64_t c : counts) t += c;
    return t;
}

std::string ConfusionMatrix::to_csv(const std::vector<std::string>& class_names) const {
    std::ostringstream os;
    os << "true\\predicted";
    for (size_t p = 0; p < classes; ++p)
        os << "," << (p < class_names.size() ? class_names[p] : std::to_string(p));
    os << "\n";
    for (size_t t = 0; t < classes; ++t) {
        os << (t < class_names.size() ? class_names[t] : std::to_string(t));
        for (size_t p = 0; p < classes; ++p) os << "," << at(t, p);
        os << "\n";
    }
    return os.str();
}

MetricsReport metrics_from_confusion(const ConfusionMatrix& cm) {
    if (cm.classes == 0 || cm.total() == 0)
        raise(ErrorKind::Data, "metrics_from_confusion: empty confusion matrix");

    MetricsReport report;
    report.per_class.resize(cm.classes);
    uint64_t trace = 0;
    for (size_t k = 0; k < cm.classes; ++k) {
        const uint64_t tp = cm.at(k, k);
        uint64_t row_sum = 0, col_sum = 0;
        for (size_t j = 0; j < cm.classes; ++j) {
            row_sum += cm.at(k, j);
            col_sum += cm.at(j, k);
        }
        const uint64_t fp = col_sum - tp;
        const uint64_t fn = row_sum - tp;
        trace += tp;

        ClassMetrics& m = report.per_class[k];
        m.support = row_sum;
        m.precision = (tp + fp) == 0 ? 0.0
                                     : static_cast<double>(tp) / static_cast<double>(tp + fp);
        m.recall = (tp + fn) == 0 ? 0.0
                                  : static_cast<double>(tp) / static_cast<double>(tp + fn);
        m.f1 = (m.precision + m.recall) == 0.0
                   ? 0.0
                   : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        report.macro_precision += m.precision;
        report.macro_recall += m.recall;
        report.macro_f1 += m.f1;
    }
    const double c = static_cast<double>(cm.classes);
    report.macro_precision /= c;
    report.macro_recall /= c;
    report.macro_f1 /= c;
    report.accuracy = static_cast<double>(trace) / static_cast<double>(cm.total());
    return report;
}

std::string format_metrics(const MetricsReport& report,
                           const std::vector<std::string>& class_names) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof(line), "accuracy: %.2f%%\n", 100.0 * report.accuracy);
    os << line;
    os << "class                precision   recall       f1  support\n";
    for (size_t k = 0; k < report.per_class.size(); ++k) {
        const ClassMetrics& m = report.per_class[k];
        const std::string name = k < class_names.size() ? class_names[k] : std::to_string(k);
        std::snprintf(line, sizeof(line), "%-20s    %6.2f%%  %6.2f%%  %6.2f%%  %7llu\n",
                      name.c_str(), 100.0 * m.precision, 100.0 * m.recall, 100.0 * m.f1,
                      static_cast<unsigned long long>(m.support));
        os << line;
    }
    std::snprintf(line, sizeof(line), "%-20s    %6.2f%%  %6.2f%%  %6.2f%%\n", "macro",
                  100.0 * report.macro_precision, 100.0 * report.macro_recall,
                  100.0 * report.macro_f1);
    os << line;
    return os.str();
}

}  // namespace fgml
