#include "phaseparse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace phaseparse {

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median: empty input");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ErrorStats mae_medae(const std::vector<double>& predicted, const std::vector<double>& annotated) {
    if (predicted.size() != annotated.size())
        throw std::invalid_argument("mae_medae: length mismatch");
    if (predicted.empty()) throw std::invalid_argument("mae_medae: empty input");
    std::vector<double> errors(predicted.size());
    double sum = 0.0;
    for (size_t i = 0; i < predicted.size(); ++i) {
        errors[i] = std::abs(predicted[i] - annotated[i]);
        sum += errors[i];
    }
    ErrorStats stats;
    stats.mae = sum / static_cast<double>(errors.size());
    stats.medae = median(std::move(errors));
    return stats;
}

}  // namespace phaseparse
