#pragma once

#include <vector>

namespace phaseparse {

/// Median with the mean-of-middles convention for even counts.
double median(std::vector<double> values);

struct ErrorStats {
    double mae = 0.0;
    double medae = 0.0;
};

/// Mean and median absolute error between predicted and annotated transition
/// times (any consistent unit; the pipeline reports minutes).
ErrorStats mae_medae(const std::vector<double>& predicted, const std::vector<double>& annotated);

}  // namespace phaseparse
