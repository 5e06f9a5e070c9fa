#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tiadc/capture.hpp"
#include "tiadc/config.hpp"
#include "tiadc/model.hpp"
#include "tiadc/profile.hpp"

namespace tiadc {

struct SineFitResult {
    double amplitude = 0.0;
    double phase_rad = 0.0; ///< in (-pi, pi]
    double dc = 0.0;
    double rms_residual = 0.0;
};

/// Three-parameter least-squares fit of A cos(2 pi r i + phi) + DC with r known.
inline SineFitResult sine_fit(std::span<const double> samples, double freq_ratio, bool known_freq = true) {
    require(known_freq, "only the known-frequency (three-parameter) sine fit is supported");
    require(samples.size() >= 8, "sine fit needs at least 8 samples");
    require(std::isfinite(freq_ratio) && freq_ratio > 0.0 && freq_ratio < 0.5,
            "sine fit frequency ratio must lie in (0, 0.5)");

    const auto n = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd D(n, 3);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        // reduce the phase argument before the trig call
        double cyc = freq_ratio * static_cast<double>(i);
        cyc -= std::floor(cyc);
        D(i, 0) = std::cos(kTwoPi * cyc);
        D(i, 1) = std::sin(kTwoPi * cyc);
        D(i, 2) = 1.0;
        y(i) = samples[static_cast<std::size_t>(i)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) throw ValidationError("degenerate input: sine fit normal equations are rank deficient");
    const Eigen::Vector3d p = qr.solve(y);

    SineFitResult r;
    r.amplitude = std::hypot(p(0), p(1));
    r.phase_rad = std::atan2(-p(1), p(0));
    if (r.phase_rad <= -std::numbers::pi) r.phase_rad += kTwoPi;
    r.dc = p(2);
    r.rms_residual = std::sqrt((y - D * p).squaredNorm() / static_cast<double>(n));
    return r;
}

struct ChannelMismatch {
    double gain_rel = 1.0;
    double dt_s = 0.0;
    double offset_lsb = 0.0;
};

/// Mismatch of every channel relative to channel 0 at one injected frequency.
struct MismatchMeasurement {
    double freq_hz = 0.0;
    std::vector<ChannelMismatch> channels;
};

/// Wraps an angle into [-pi, pi].
inline double wrap_phase(double x) { return x - kTwoPi * std::nearbyint(x / kTwoPi); }

/// Estimates gain, timing and offset mismatch from a coherent single-tone capture at f_in.
///
/// Each channel sees the tone at the channel-rate frequency f_in M / fs folded
/// into (0, 1/2); when the fold mirrors the spectrum the fitted phase changes
/// sign. Phase-to-time conversion always uses the true analog frequency, so
/// under-sampled captures are handled by the same path.
inline MismatchMeasurement estimate_mismatch_at(const Capture& capture, double f_in_hz, const TiadcConfig& cfg) {
    cfg.validate();
    const std::size_t M = cfg.channels();
    require(capture.size() > 0 && capture.size() % M == 0, "capture length must be a multiple of m_channels");
    require(std::isfinite(f_in_hz) && f_in_hz > 0.0, "calibration frequency must be positive");
    const double cycles = f_in_hz * static_cast<double>(capture.size()) / cfg.fs;
    require(std::abs(cycles - std::nearbyint(cycles)) < 1e-6,
            "calibration tone is not coherent with the capture length");

    double r = std::fmod(f_in_hz * static_cast<double>(M) / cfg.fs, 1.0);
    double sign = 1.0;
    if (r > 0.5) {
        r = 1.0 - r;
        sign = -1.0;
    }
    const auto channels = deinterleave(capture);
    std::vector<SineFitResult> fits;
    fits.reserve(M);
    for (const auto& x : channels) {
        const auto fit = sine_fit(x, r);
        if (!(fit.amplitude > 10.0 * fit.rms_residual)) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "tone at %.6g Hz is below 10x the fit residual (A=%.3g, rms=%.3g)",
                          f_in_hz, fit.amplitude, fit.rms_residual);
            throw UnreliableMeasurementError(buf, f_in_hz);
        }
        fits.push_back(fit);
    }

    const double omega = kTwoPi * f_in_hz;
    MismatchMeasurement meas;
    meas.freq_hz = f_in_hz;
    const double theta0 = sign * fits[0].phase_rad;
    for (std::size_t m = 0; m < M; ++m) {
        ChannelMismatch c;
        c.gain_rel = fits[m].amplitude / fits[0].amplitude;
        const double theta = sign * fits[m].phase_rad;
        c.dt_s = m == 0 ? 0.0 : wrap_phase(theta - theta0 - omega * static_cast<double>(m) * cfg.ts()) / omega;
        c.offset_lsb = fits[m].dc / cfg.lsb();
        meas.channels.push_back(c);
    }
    return meas;
}

/// Tabulates measurements into a profile; offsets are averaged into a constant column.
inline MismatchProfile build_profile(const std::vector<MismatchMeasurement>& measurements, const TiadcConfig& cfg) {
    require(measurements.size() >= 2, "at least two calibration frequencies are required");
    const std::size_t M = cfg.channels();
    std::vector<double> offsets(M, 0.0);
    for (std::size_t j = 0; j < measurements.size(); ++j) {
        require(measurements[j].channels.size() == M, "inconsistent channel counts across measurements");
        if (j > 0) {
            require(measurements[j].freq_hz != measurements[j - 1].freq_hz, "duplicate calibration frequency");
            require(measurements[j].freq_hz > measurements[j - 1].freq_hz, "measurements must be sorted by frequency");
        }
        for (std::size_t m = 0; m < M; ++m) offsets[m] += measurements[j].channels[m].offset_lsb;
    }
    for (auto& o : offsets) o /= static_cast<double>(measurements.size());

    std::vector<std::vector<MismatchRow>> table(M);
    for (const auto& meas : measurements)
        for (std::size_t m = 0; m < M; ++m)
            table[m].push_back({meas.freq_hz, meas.channels[m].gain_rel, meas.channels[m].dt_s, offsets[m]});
    return MismatchProfile(std::move(table));
}

struct CalibrationPoint {
    double freq_hz = 0.0;
    double amplitude_v = 0.0;
    std::size_t n_samples = 0;
};

/// Drives the simulator through a calibration plan and measures each point.
inline std::vector<MismatchMeasurement> measure_plan(const std::vector<CalibrationPoint>& plan,
                                                     const TiadcConfig& cfg, const MismatchProfile& truth) {
    std::vector<MismatchMeasurement> out;
    out.reserve(plan.size());
    for (const auto& p : plan) {
        ToneSpec tone{{{p.amplitude_v, p.freq_hz, 0.0}}, 0.0};
        const auto cap = simulate(tone, cfg, truth, p.n_samples);
        out.push_back(estimate_mismatch_at(cap, p.freq_hz, cfg));
    }
    return out;
}

} // namespace tiadc
