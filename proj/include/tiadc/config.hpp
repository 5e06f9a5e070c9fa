#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "tiadc/errors.hpp"

namespace tiadc {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Acquisition setup of an M-channel interleaved converter.
struct TiadcConfig {
    int m_channels = 4;
    double fs = 1.6e9;       ///< aggregate sample rate [Hz]
    int bits = 14;
    double full_scale = 2.0; ///< peak-to-peak input range [V]
    bool quantize = false;

    double ts() const { return 1.0 / fs; }
    /// per-channel sampling period, M * Ts
    double channel_period() const { return m_channels / fs; }
    double lsb() const { return full_scale / std::ldexp(1.0, bits); }
    std::size_t channels() const { return static_cast<std::size_t>(m_channels); }

    void validate() const {
        require(m_channels >= 2, "m_channels must be >= 2");
        require(std::isfinite(fs) && fs > 0.0, "fs must be positive");
        require(bits >= 1 && bits <= 24, "bits must lie in [1, 24]");
        require(std::isfinite(full_scale) && full_scale > 0.0, "full_scale must be positive");
    }
};

struct Tone {
    double amplitude = 0.0; ///< [V]
    double freq_hz = 0.0;   ///< analog frequency, any Nyquist zone
    double phase_rad = 0.0;
};

struct ToneSpec {
    std::vector<Tone> tones;
    double dc = 0.0;

    void validate() const {
        for (const auto& t : tones) {
            require(std::isfinite(t.amplitude) && t.amplitude >= 0.0, "tone amplitude must be >= 0");
            require(std::isfinite(t.freq_hz) && t.freq_hz >= 0.0, "tone frequency must be >= 0");
            require(std::isfinite(t.phase_rad), "tone phase must be finite");
        }
        require(std::isfinite(dc), "dc must be finite");
    }

    /// False when the summed peak excursion can exceed the converter range.
    bool clip_free(const TiadcConfig& cfg) const {
        double peak = std::abs(dc);
        for (const auto& t : tones) peak += t.amplitude;
        return peak <= cfg.full_scale / 2.0;
    }
};

/// Folds an analog frequency into the first Nyquist band [0, fs/2].
inline double fold_frequency(double f_hz, double fs) {
    double r = std::fmod(f_hz, fs);
    if (r < 0.0) r += fs;
    return r > fs / 2.0 ? fs - r : r;
}

/// Nyquist zone (1-based) of a non-negative analog frequency.
inline int nyquist_zone(double f_hz, double fs) {
    return static_cast<int>(std::floor(f_hz / (fs / 2.0))) + 1;
}

} // namespace tiadc
