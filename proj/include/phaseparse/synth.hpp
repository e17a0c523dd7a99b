#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "phaseparse/dataio.hpp"

namespace phaseparse {

/// Motion statistics of one procedure phase. Velocities are axial,
/// pixels/frame, positive = forward (into the tunnel).
struct PhaseMotion {
    double mean_velocity = 0.0;
    double jitter = 0.0;      // stddev of per-frame velocity noise
    double pause_prob = 0.0;  // frame freezes (velocity 0)
    double slip_prob = 0.0;   // momentary motion against the phase direction
};

/// Appearance statistics of one phase.
struct PhaseAppearance {
    double brightness = 100.0;       // wall base intensity, 0..255
    double lumen_radius = 0.2;       // dark disc radius, fraction of min(w,h)/2
    double texture_scale = 1.0;      // ring wavelength multiplier
    double wall_contact_prob = 0.0;  // per-frame chance of a stuck-in-wall frame
};

struct SynthConfig {
    int width = 64;
    int height = 64;
    int total_frames = 1200;
    double transition_fraction = 0.4;

    PhaseMotion forward_phase{1.2, 0.35, 0.08, 0.05};
    PhaseMotion backward_phase{-0.9, 0.30, 0.10, 0.06};
    // Mean velocity ramps down linearly within this many frames of the
    // transition; jitter stays, so the boundary neighborhood carries little
    // net direction signal, like the slow turn at the far end of the tunnel.
    int dwell_frames = 180;

    PhaseAppearance forward_look{95.0, 0.16, 1.0, 0.12};
    PhaseAppearance backward_look{150.0, 0.26, 1.4, 0.03};

    double flow_sigma = 0.5;        // additive Gaussian noise on synthetic flow
    double outlier_fraction = 0.1;  // pixels replaced by uniform junk vectors
    double flow_scale = 0.05;       // radial expansion per unit velocity
    double foe_jitter = 0.15;       // focus-of-expansion wobble, fraction of size

    uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument
};

struct MotionSchedule {
    std::vector<double> velocity;  // one entry per frame
    int64_t transition_frame = 0;
    int64_t total_frames = 0;
};

struct GroundTruth {
    int64_t transition_frame = 0;
    std::vector<int> phase;        // 1 before the transition, 2 after
    std::vector<double> velocity;  // true per-frame axial velocity
};

/// Samples a per-frame velocity schedule whose prefix sums peak uniquely at
/// the transition frame (resampled until that holds), plus matching truth.
std::pair<MotionSchedule, GroundTruth> make_schedule(const SynthConfig& cfg);

/// One radial field per consecutive frame pair (total_frames - 1 fields):
/// s*(p - FOE) with s = flow_scale * velocity, jittered FOE, Gaussian noise
/// and a fraction of outlier vectors.
std::vector<FlowField> synth_flow_fields(const MotionSchedule& schedule, const SynthConfig& cfg);

struct RenderedVideo {
    std::vector<FrameImage> frames;
    GroundTruth truth;
};

/// Procedural tunnel renderer: textured concentric rings around a dark lumen
/// disc, camera advanced by the schedule; per-phase brightness/lumen/texture;
/// occasional near-uniform bright wall-contact frames. Deterministic per seed.
RenderedVideo render_frames(const MotionSchedule& schedule, const SynthConfig& cfg);

}  // namespace phaseparse
