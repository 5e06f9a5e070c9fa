#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "tiadc/capture.hpp"
#include "tiadc/config.hpp"
#include "tiadc/fft.hpp"
#include "tiadc/window.hpp"

namespace tiadc {

struct CoherentTone {
    long cycles = 0;       ///< J
    double freq_hz = 0.0;  ///< J fs / n_fft
};

/// Nearest odd J to f_target n_fft / fs that is coprime with n_fft (ties go to the lower J).
inline CoherentTone coherent_bin(double f_target, double fs, std::size_t n_fft) {
    require(std::isfinite(fs) && fs > 0.0, "fs must be positive");
    require(n_fft >= 2 && (n_fft & (n_fft - 1)) == 0, "n_fft must be a power of two");
    require(std::isfinite(f_target) && f_target > 0.0 && f_target < fs, "target must lie in (0, fs)");
    const double t = f_target * static_cast<double>(n_fft) / fs;
    require(std::nearbyint(t) >= 1.0, "coherent bin would be J = 0");
    const long n = static_cast<long>(n_fft);
    long best = -1;
    for (long c = 1; c < n; c += 2) {
        if (std::gcd(c, n) != 1) continue;
        if (best < 0 || std::abs(c - t) < std::abs(best - t)) best = c;
    }
    require(best > 0, "no coherent bin available");
    return {best, static_cast<double>(best) * fs / static_cast<double>(n_fft)};
}

inline double enob_from_sinad(double sinad_db) { return (sinad_db - 1.76) / 6.02; }

struct SpurEntry {
    double freq_hz = 0.0;
    double dbc = 0.0;
    std::string kind; ///< image(k), offset_spur(k), harmonic(h) or other
    int k = 0;
};

struct SpectrumReport {
    std::size_t n_fft = 0;
    Window window;
    double fs = 0.0;
    double full_scale = 0.0;
    int m_channels = 0;
    std::vector<double> freq_hz;    ///< single-sided bin frequencies
    std::vector<double> power;      ///< mean-square power per bin [V^2]
    std::vector<double> power_dbfs; ///< relative to a full-scale sine
    double enbw_bins = 1.0;         ///< equivalent noise bandwidth of the window

    // filled by dynamic_metrics
    std::size_t fundamental_bin = 0;
    double fundamental_dbfs = 0.0;
    double snr_db = 0.0;
    double sinad_db = 0.0;
    double thd_db = 0.0;
    double sfdr_db = 0.0;
    double enob_bits = 0.0;
    std::vector<SpurEntry> spurs;

    /// bins gathered on either side of a tone: 0 for coherent, mainlobe half-width otherwise
    std::size_t gather() const {
        switch (window.kind) {
        case WindowKind::none: return 0;
        case WindowKind::hann: return 2;
        case WindowKind::blackman: return 3;
        case WindowKind::kaiser: return static_cast<std::size_t>(std::ceil(std::hypot(window.beta, 3.1416) / 3.1416));
        }
        return 0;
    }

    std::size_t bin_of(double f_hz) const {
        const double f = fold_frequency(f_hz, fs);
        return static_cast<std::size_t>(std::nearbyint(f / fs * static_cast<double>(n_fft)));
    }
};

inline double to_db_power(double p) { return 10.0 * std::log10(std::max(p, 1e-300)); }

/// Single-sided power spectrum of the capture, excluding transient samples at
/// its start. A full-scale coherent sine reads 0 dBFS.
inline SpectrumReport spectrum(const Capture& capture, std::size_t n_fft, Window window) {
    require(n_fft >= 8 && (n_fft & (n_fft - 1)) == 0, "n_fft must be a power of two >= 8");
    require(window.kind != WindowKind::kaiser || window.beta >= 0.0, "invalid kaiser beta");
    const std::size_t skip = capture.transient_samples;
    require(capture.size() >= 2 * skip + n_fft, "capture too short for the requested FFT length");

    const auto w = window.periodic(n_fft);
    std::vector<double> seg(n_fft);
    for (std::size_t i = 0; i < n_fft; ++i) seg[i] = capture.samples[skip + i] * w[i];
    const auto X = fft::forward(seg);

    const double s1 = std::accumulate(w.begin(), w.end(), 0.0);
    const double s2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
    SpectrumReport r;
    r.n_fft = n_fft;
    r.window = window;
    r.fs = capture.config.fs;
    r.full_scale = capture.config.full_scale;
    r.m_channels = capture.config.m_channels;
    r.enbw_bins = static_cast<double>(n_fft) * s2 / (s1 * s1);
    const double pfs = std::pow(capture.config.full_scale / 2.0, 2) / 2.0;
    const std::size_t half = n_fft / 2;
    for (std::size_t k = 0; k <= half; ++k) {
        double p = std::norm(X[k]) / (s1 * s1);
        if (k != 0 && k != half) p *= 2.0;
        r.freq_hz.push_back(static_cast<double>(k) * r.fs / static_cast<double>(n_fft));
        r.power.push_back(p);
        r.power_dbfs.push_back(to_db_power(p / pfs));
    }
    return r;
}

namespace detail {

inline void mark(std::vector<char>& mask, std::size_t centre, std::size_t hw) {
    const std::size_t lo = centre > hw ? centre - hw : 0;
    const std::size_t hi = std::min(mask.size() - 1, centre + hw);
    for (std::size_t i = lo; i <= hi; ++i) mask[i] = 1;
}

inline double gathered(const SpectrumReport& r, std::size_t centre) {
    const std::size_t hw = r.gather();
    const std::size_t lo = centre > hw ? centre - hw : 0;
    const std::size_t hi = std::min(r.power.size() - 1, centre + hw);
    double s = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) s += r.power[i];
    return s / r.enbw_bins;
}

} // namespace detail

/// Fills SNR, SINAD, THD, SFDR, ENOB and the spur table of a spectrum.
///
/// SINAD counts everything but the fundamental and DC; SNR additionally drops
/// the harmonics and the interleave spurs at k fs/M and k fs/M +- f.
inline SpectrumReport dynamic_metrics(SpectrumReport r, double f_fund_hz, int m_channels, int harmonics = 5) {
    require(!r.power.empty(), "empty spectrum");
    require(m_channels >= 1, "m_channels must be positive");
    require(harmonics >= 0, "harmonics must be >= 0");
    const std::size_t nb = r.power.size();
    const std::size_t hw = r.gather();
    std::size_t fb = r.bin_of(f_fund_hz);
    if (hw > 0) { // snap to the local peak for non-coherent records
        std::size_t best = fb;
        for (std::size_t i = fb > hw ? fb - hw : 0; i <= std::min(nb - 1, fb + hw); ++i)
            if (r.power[i] > r.power[best]) best = i;
        fb = best;
    }
    require(fb >= 1 && fb < r.n_fft / 2, "fundamental bin must lie in [1, n_fft/2)");

    std::vector<char> fund(nb, 0), dc(nb, 0), harm(nb, 0), spur(nb, 0);
    detail::mark(fund, fb, hw);
    detail::mark(dc, 0, hw);
    const double fs = r.fs;
    const int M = m_channels;
    for (int h = 2; h <= harmonics + 1; ++h) detail::mark(harm, r.bin_of(h * f_fund_hz), hw);
    for (int k = 1; k < M; ++k) {
        const double base = k * fs / M;
        detail::mark(spur, r.bin_of(base + f_fund_hz), hw);
        detail::mark(spur, r.bin_of(base - f_fund_hz), hw);
        detail::mark(spur, r.bin_of(base), hw);
    }

    const double p_fund = detail::gathered(r, fb);
    double all = 0.0, p_harm = 0.0, p_noise = 0.0, max_spur = 0.0, mean_other = 0.0;
    std::size_t n_other = 0, max_bin = 0;
    for (std::size_t i = 0; i < nb; ++i) {
        if (fund[i] || dc[i]) continue;
        all += r.power[i];
        ++n_other;
        if (harm[i]) p_harm += r.power[i];
        if (!harm[i] && !spur[i]) p_noise += r.power[i];
        if (r.power[i] > max_spur) {
            max_spur = r.power[i];
            max_bin = i;
        }
    }
    mean_other = n_other ? all / static_cast<double>(n_other) : 0.0;
    const double peak = r.power[fb];
    if (!(peak > 0.0) || !(peak > 10.0 * mean_other) || !(peak >= max_spur)) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "fundamental not found above threshold at %.6g Hz", f_fund_hz);
        throw ValidationError(buf);
    }
    all /= r.enbw_bins;
    p_harm /= r.enbw_bins;
    p_noise /= r.enbw_bins;

    r.fundamental_bin = fb;
    const double pfs = std::pow(r.full_scale / 2.0, 2) / 2.0;
    r.fundamental_dbfs = to_db_power(p_fund / pfs);
    r.snr_db = to_db_power(p_fund) - to_db_power(p_noise);
    r.sinad_db = to_db_power(p_fund) - to_db_power(all);
    r.thd_db = to_db_power(p_harm) - to_db_power(p_fund);
    r.sfdr_db = to_db_power(peak) - to_db_power(max_spur);
    r.enob_bits = enob_from_sinad(r.sinad_db);

    // spur table
    r.spurs.clear();
    std::vector<char> listed(nb, 0);
    auto add = [&](double f, const std::string& kind, int k) {
        const std::size_t b = r.bin_of(f);
        if (fund[b] || dc[b] || listed[b]) return;
        listed[b] = 1;
        r.spurs.push_back({fold_frequency(f, fs), to_db_power(detail::gathered(r, b)) - to_db_power(p_fund),
                           kind + "(" + std::to_string(k) + ")", k});
    };
    for (int k = 1; k < M; ++k) {
        add(k * fs / M - f_fund_hz, "image", k);
        add(k * fs / M + f_fund_hz, "image", k);
    }
    for (int k = 1; k < M; ++k) add(k * fs / M, "offset_spur", k);
    for (int h = 2; h <= harmonics + 1; ++h) add(h * f_fund_hz, "harmonic", h);
    if (!listed[max_bin] && max_spur > 0.0)
        r.spurs.push_back({r.freq_hz[max_bin], to_db_power(detail::gathered(r, max_bin)) - to_db_power(p_fund),
                           "other", 0});
    return r;
}

struct ImageSpur {
    int k = 0;
    double freq_hz = 0.0;
    double dbc = 0.0;
    bool collision = false; ///< lands on the fundamental bin(s)
};

/// Level of every interleave image fold(k fs/M +- f), k = 1..M-1, relative to the fundamental.
inline std::vector<ImageSpur> image_spur_levels(const SpectrumReport& r, double f_fund_hz, double fs, int m_channels) {
    require(!r.power.empty(), "empty spectrum");
    require(m_channels >= 2, "m_channels must be >= 2");
    const std::size_t hw = r.gather();
    const std::size_t fb = r.bin_of(f_fund_hz);
    const double p_fund = detail::gathered(r, fb);
    require(p_fund > 0.0, "fundamental not identified");
    std::vector<ImageSpur> out;
    std::vector<std::size_t> seen;
    for (int k = 1; k < m_channels; ++k) {
        for (double sgn : {-1.0, 1.0}) {
            const double f = fold_frequency(k * fs / m_channels + sgn * f_fund_hz, fs);
            const std::size_t b = r.bin_of(f);
            if (std::find(seen.begin(), seen.end(), b) != seen.end()) continue;
            seen.push_back(b);
            ImageSpur s;
            s.k = k;
            s.freq_hz = f;
            s.collision = (b > fb ? b - fb : fb - b) <= 2 * hw;
            s.dbc = to_db_power(detail::gathered(r, b)) - to_db_power(p_fund);
            out.push_back(s);
        }
    }
    return out;
}

} // namespace tiadc
