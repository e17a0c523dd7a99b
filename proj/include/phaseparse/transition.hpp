#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace phaseparse {

/// Two-class per-frame probability estimates. Sums may drift from 1 by up to
/// ~1e-3 upstream; they are used as-is, never renormalized.
struct PhaseProbabilitySeries {
    std::vector<std::array<double, 2>> p;  // p[t] = {p(phase 1), p(phase 2)}
    double fps = 30.0;

    int64_t frames() const { return static_cast<int64_t>(p.size()); }
};

/// Two-phase partition score: mass of phase 1 before t plus mass of phase 2
/// from t on, t in [0, frames]. The phase-1 prefix is accumulated
/// front-to-back and the phase-2 suffix back-to-front, which is what lets the
/// detector reproduce these exact values in a single pass.
double partition_score(const PhaseProbabilitySeries& probs, int64_t t);

struct TransitionResult {
    int64_t frame = 0;
    double seconds = 0.0;
    double score = 0.0;
};

/// Earliest argmax of the partition score over t in [0, frames], O(frames).
/// Bit-identical to scanning partition_score exhaustively.
TransitionResult detect_transition(const PhaseProbabilitySeries& probs);

}  // namespace phaseparse
