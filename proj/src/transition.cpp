#include "phaseparse/transition.hpp"

#include <stdexcept>

namespace phaseparse {

namespace {

void check_nonempty(const PhaseProbabilitySeries& probs) {
    if (probs.p.empty()) throw std::invalid_argument("transition: empty probability series");
}

}  // namespace

double partition_score(const PhaseProbabilitySeries& probs, int64_t t) {
    check_nonempty(probs);
    const int64_t frames = probs.frames();
    if (t < 0 || t > frames) throw std::out_of_range("transition: t outside [0, frames]");
    double prefix = 0.0;
    for (int64_t i = 0; i < t; ++i) prefix += probs.p[i][0];
    double suffix = 0.0;
    for (int64_t i = frames - 1; i >= t; --i) suffix += probs.p[i][1];
    return prefix + suffix;
}

TransitionResult detect_transition(const PhaseProbabilitySeries& probs) {
    check_nonempty(probs);
    const int64_t frames = probs.frames();

    // Suffix sums accumulated back-to-front and the prefix front-to-back, in
    // the same order partition_score uses, so every candidate score is
    // bit-identical to the exhaustive evaluation.
    std::vector<double> suffix(static_cast<size_t>(frames) + 1, 0.0);
    for (int64_t i = frames - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + probs.p[i][1];

    int64_t best_t = 0;
    double best = suffix[0];
    double prefix = 0.0;
    for (int64_t t = 1; t <= frames; ++t) {
        prefix += probs.p[t - 1][0];
        const double score = prefix + suffix[t];
        if (score > best) {
            best = score;
            best_t = t;
        }
    }
    TransitionResult result;
    result.frame = best_t;
    result.seconds = probs.fps > 0.0 ? static_cast<double>(best_t) / probs.fps : 0.0;
    result.score = best;
    return result;
}

}  // namespace phaseparse
