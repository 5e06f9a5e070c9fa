#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "tiadc/config.hpp"
#include "tiadc/profile.hpp"

namespace tiadc {

/// Knobs of the smooth synthetic mismatch used by tests and bundled scenarios.
struct SmoothMismatch {
    double gain_offset = 0.004;  ///< per-channel static gain deviation (peak)
    double gain_ripple = 0.005;  ///< frequency ripple amplitude
    double dt_static_s = 1.2e-12;
    double dt_curvature_s = 0.2e-12; ///< timing change at f = fs/2
    double offset_lsb = 1.9;
    std::size_t rows = 257;      ///< table rows spanning [0, fs]
};

/// Smooth frequency-dependent profile, with x = f/(fs/2):
///   gain   1 + a_m + r_m (1 - cos(pi x)) / 2
///   timing c_m + s_m x^2
/// Both are even in frequency, as the magnitude and group delay of a real
/// analog front end are, so H_m stays smooth through DC. With the defaults
/// every channel stays within +-0.9 % gain, +-2 ps timing and +-1.9 LSB
/// offset up to fs.
inline MismatchProfile smooth_profile(const TiadcConfig& cfg, const SmoothMismatch& p = {}) {
    const std::size_t M = cfg.channels();
    std::vector<std::vector<MismatchRow>> table(M);
    for (std::size_t m = 0; m < M; ++m) {
        const double md = static_cast<double>(m);
        const double a = p.gain_offset * std::sin(2.1 * md + 0.3);
        const double r = p.gain_ripple * std::cos(1.3 * md + 0.2);
        const double c = p.dt_static_s * std::cos(1.7 * md + 0.5);
        const double s = p.dt_curvature_s * std::sin(0.9 * md + 1.0);
        const double o = p.offset_lsb * std::sin(2.3 * md + 0.7);
        for (std::size_t i = 0; i < p.rows; ++i) {
            const double x = 2.0 * static_cast<double>(i) / static_cast<double>(p.rows - 1); // f / (fs/2)
            const double ripple = r * (1.0 - std::cos(std::numbers::pi * x)) / 2.0;
            table[m].push_back({x * cfg.fs / 2.0, 1.0 + a + ripple, c + s * x * x, o});
        }
    }
    return MismatchProfile(std::move(table));
}

} // namespace tiadc
