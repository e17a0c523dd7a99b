#include "phaseparse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "phaseparse/rng.hpp"

namespace phaseparse {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Tunnel depth advanced per unit velocity, and the projection constant tying
// wall depth to image radius (r = persp / depth-ahead).
constexpr double kZStep = 0.05;

void check_prob(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument(std::string("synth: ") + name + " must be in [0,1]");
}

}  // namespace

void SynthConfig::validate() const {
    if (width < 8 || height < 8) throw std::invalid_argument("synth: frame size below 8x8");
    if (total_frames < 100) throw std::invalid_argument("synth: total_frames must be >= 100");
    if (!(transition_fraction > 0.0 && transition_fraction < 1.0))
        throw std::invalid_argument("synth: transition fraction must be in (0,1)");
    check_prob(forward_phase.pause_prob, "pause_prob");
    check_prob(forward_phase.slip_prob, "slip_prob");
    check_prob(backward_phase.pause_prob, "pause_prob");
    check_prob(backward_phase.slip_prob, "slip_prob");
    check_prob(forward_look.wall_contact_prob, "wall_contact_prob");
    check_prob(backward_look.wall_contact_prob, "wall_contact_prob");
    check_prob(outlier_fraction, "outlier_fraction");
    if (dwell_frames < 0) throw std::invalid_argument("synth: dwell_frames must be >= 0");
    if (flow_sigma < 0.0) throw std::invalid_argument("synth: flow_sigma must be >= 0");
}

std::pair<MotionSchedule, GroundTruth> make_schedule(const SynthConfig& cfg) {
    cfg.validate();
    const int64_t n = cfg.total_frames;
    const int64_t b = std::llround(cfg.transition_fraction * static_cast<double>(n));

    Rng rng(derive_seed(cfg.seed, 17));
    std::vector<double> velocity(static_cast<size_t>(n));

    const auto sample = [&] {
        for (int64_t t = 0; t < n; ++t) {
            const PhaseMotion& ph = t < b ? cfg.forward_phase : cfg.backward_phase;
            // Mean ramps down toward the boundary; jitter does not, so the
            // neighborhood of the boundary is direction-ambiguous.
            double taper = 1.0;
            if (cfg.dwell_frames > 0) {
                const double dist = t < b ? static_cast<double>(b - t) : static_cast<double>(t - b + 1);
                taper = std::min(1.0, dist / cfg.dwell_frames);
            }
            double v;
            if (rng.bernoulli(ph.pause_prob)) {
                v = 0.0;
            } else if (rng.bernoulli(ph.slip_prob)) {
                const double sign = ph.mean_velocity >= 0.0 ? 1.0 : -1.0;
                v = -sign * (0.4 * std::abs(ph.mean_velocity) * taper +
                             std::abs(rng.normal(0.0, ph.jitter)));
            } else {
                v = ph.mean_velocity * taper + rng.normal(0.0, ph.jitter);
            }
            velocity[static_cast<size_t>(t)] = v;
        }
    };

    // Resample until the prefix sums attain their strict global maximum at the
    // transition frame, which makes the annotated boundary and the ideal
    // motion boundary coincide by construction.
    const int kMaxAttempts = 20000;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
        sample();
        double acc = 0.0, best = 0.0, at_b = 0.0;
        int64_t argmax = 0;
        for (int64_t t = 1; t <= n; ++t) {
            acc += velocity[static_cast<size_t>(t - 1)];
            if (acc > best) {
                best = acc;
                argmax = t;
            }
            if (t == b) at_b = acc;
        }
        ok = argmax == b && at_b > 0.0;
        if (ok) {
            // strictness: no other prefix may tie the maximum
            int ties = 0;
            acc = 0.0;
            for (int64_t t = 1; t <= n; ++t) {
                acc += velocity[static_cast<size_t>(t - 1)];
                if (acc == best) ++ties;
            }
            ok = ties == 1;
        }
    }
    if (!ok) throw std::runtime_error("synth: could not satisfy the boundary invariant");

    MotionSchedule schedule;
    schedule.velocity = velocity;
    schedule.transition_frame = b;
    schedule.total_frames = n;

    GroundTruth truth;
    truth.transition_frame = b;
    truth.velocity = std::move(velocity);
    truth.phase.resize(static_cast<size_t>(n));
    for (int64_t t = 0; t < n; ++t) truth.phase[static_cast<size_t>(t)] = t < b ? 1 : 2;
    return {std::move(schedule), std::move(truth)};
}

std::vector<FlowField> synth_flow_fields(const MotionSchedule& schedule, const SynthConfig& cfg) {
    if (schedule.total_frames != cfg.total_frames ||
        schedule.velocity.size() != static_cast<size_t>(cfg.total_frames))
        throw std::invalid_argument("synth: schedule/config length mismatch");
    Rng rng(derive_seed(cfg.seed, 23));
    const int w = cfg.width, h = cfg.height;
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;

    std::vector<FlowField> fields;
    fields.reserve(static_cast<size_t>(cfg.total_frames - 1));
    for (int64_t t = 0; t + 1 < cfg.total_frames; ++t) {
        const double s = cfg.flow_scale * schedule.velocity[static_cast<size_t>(t)];
        double foe_x = cx, foe_y = cy;
        if (cfg.foe_jitter > 0.0) {
            foe_x += cfg.foe_jitter * w * rng.uniform(-1.0, 1.0);
            foe_y += cfg.foe_jitter * h * rng.uniform(-1.0, 1.0);
        }
        FlowField f = FlowField::zeros(w, h);
        size_t i = 0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x, ++i) {
                double u = s * (x - foe_x);
                double v = s * (y - foe_y);
                if (cfg.flow_sigma > 0.0) {
                    u += rng.normal(0.0, cfg.flow_sigma);
                    v += rng.normal(0.0, cfg.flow_sigma);
                }
                if (cfg.outlier_fraction > 0.0 && rng.bernoulli(cfg.outlier_fraction)) {
                    u = rng.uniform(-2.0, 2.0);
                    v = rng.uniform(-2.0, 2.0);
                }
                f.u[i] = static_cast<float>(u);
                f.v[i] = static_cast<float>(v);
            }
        }
        fields.push_back(std::move(f));
    }
    return fields;
}

RenderedVideo render_frames(const MotionSchedule& schedule, const SynthConfig& cfg) {
    if (schedule.total_frames != cfg.total_frames)
        throw std::invalid_argument("synth: schedule/config length mismatch");
    Rng rng(derive_seed(cfg.seed, 31));
    const int w = cfg.width, h = cfg.height;
    const double r_half = std::min(w, h) / 2.0;
    const double persp = 0.75 * r_half;

    // per-video statics
    const double off_x = rng.uniform(-2.0, 2.0);
    const double off_y = rng.uniform(-2.0, 2.0);
    const double wobble_phase1 = rng.uniform(0.0, kTwoPi);
    const double wobble_phase2 = rng.uniform(0.0, kTwoPi);
    const int angular_order = 4 + static_cast<int>(rng.uniform_int(3));
    const double angular_phase = rng.uniform(0.0, kTwoPi);
    const double ring_phase1 = rng.uniform(0.0, kTwoPi);
    const double ring_phase2 = rng.uniform(0.0, kTwoPi);

    RenderedVideo video;
    video.truth.transition_frame = schedule.transition_frame;
    video.truth.velocity = schedule.velocity;
    video.truth.phase.resize(static_cast<size_t>(cfg.total_frames));

    double z = 0.0;
    // Wall contact is sticky: the camera stays pressed against the wall for a
    // few frames and sees an almost static pattern, so only entering and
    // leaving a contact run produce image discontinuities.
    constexpr double kContactStay = 0.7;
    bool in_contact = false;
    double wall_fx = 0.0, wall_fy = 0.0, wall_phase = 0.0;
    for (int64_t t = 0; t < cfg.total_frames; ++t) {
        const bool forward = t < schedule.transition_frame;
        video.truth.phase[static_cast<size_t>(t)] = forward ? 1 : 2;
        const PhaseAppearance& app = forward ? cfg.forward_look : cfg.backward_look;

        if (in_contact) {
            in_contact = rng.bernoulli(kContactStay);
            wall_phase += 0.1 * rng.normal();  // slight jiggle while stuck
        } else {
            // per-frame marginal contact probability stays at the configured
            // value: enter * (1 - p) = p * (1 - stay)
            const double enter =
                app.wall_contact_prob * (1.0 - kContactStay) /
                std::max(1.0 - app.wall_contact_prob, 0.01);
            if (rng.bernoulli(enter)) {
                in_contact = true;
                wall_fx = rng.uniform(0.3, 1.2);
                wall_fy = rng.uniform(0.3, 1.2);
                wall_phase = rng.uniform(0.0, kTwoPi);
            }
        }
        const bool wall_contact = in_contact;
        const double illum = 1.0 + 0.05 * rng.normal();
        const double ccx = (w - 1) / 2.0 + off_x + 2.5 * std::sin(kTwoPi * t / 131.0 + wobble_phase1);
        const double ccy = (h - 1) / 2.0 + off_y + 2.5 * std::sin(kTwoPi * t / 97.0 + wobble_phase2);

        FrameImage frame;
        frame.width = w;
        frame.height = h;
        frame.channels = 1;
        frame.data.resize(static_cast<size_t>(w) * h);

        if (wall_contact) {
            // stuck in the wall: bright, nearly flat, no lumen
            size_t i = 0;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x, ++i) {
                    double val = 208.0 + 22.0 * std::sin(kTwoPi * (wall_fx * x + wall_fy * y) /
                                                             std::max(w, h) +
                                                         wall_phase);
                    val = val * illum + 6.0 * (rng.uniform() - 0.5);
                    frame.data[i] = static_cast<uint8_t>(std::clamp(std::lround(val), 0l, 255l));
                }
            }
        } else {
            const double lumen_px = app.lumen_radius * r_half;
            const double k1 = kTwoPi / (0.9 * app.texture_scale);
            const double k2 = kTwoPi / (0.37 * app.texture_scale);
            size_t i = 0;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x, ++i) {
                    const double dx = x - ccx, dy = y - ccy;
                    const double r = std::sqrt(dx * dx + dy * dy);
                    double val;
                    if (r < lumen_px) {
                        val = 6.0 + 6.0 * r / std::max(lumen_px, 1.0);
                    } else {
                        const double z_wall = z + persp / std::max(r, lumen_px);
                        const double phi = std::atan2(dy, dx);
                        const double rings = std::sin(k1 * z_wall + ring_phase1);
                        const double weave = std::sin(k2 * z_wall + ring_phase2) *
                                             std::sin(angular_order * phi + angular_phase);
                        const double rn = std::min(r / r_half, 1.2);
                        const double shade = 0.55 + 0.45 * std::pow(rn, 0.7);
                        val = app.brightness * shade * (1.0 + 0.28 * rings + 0.22 * weave);
                    }
                    val = val * illum + 6.0 * (rng.uniform() - 0.5);
                    frame.data[i] = static_cast<uint8_t>(std::clamp(std::lround(val), 0l, 255l));
                }
            }
        }
        video.frames.push_back(std::move(frame));
        z += kZStep * schedule.velocity[static_cast<size_t>(t)];
    }
    return video;
}

}  // namespace phaseparse
