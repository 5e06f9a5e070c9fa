#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "tiadc/capture.hpp"
#include "tiadc/config.hpp"
#include "tiadc/profile.hpp"

namespace tiadc {

using cplx = std::complex<double>;

/// Analog response of channel m, g_m(W) exp(jW(m Ts + dt_m(W))), for W >= 0 [rad/s].
inline cplx channel_response(const MismatchProfile& profile, const TiadcConfig& cfg, std::size_t m,
                             double omega_analog) {
    require(m < profile.channels() && m < cfg.channels(), "invalid channel index");
    require(std::isfinite(omega_analog), "non-finite frequency");
    require(omega_analog >= 0.0, "channel_response expects a non-negative frequency");
    const auto p = profile.at(m, omega_analog / kTwoPi);
    return std::polar(p.gain, omega_analog * (static_cast<double>(m) * cfg.ts() + p.dt_s));
}

/// Same as channel_response but accepts negative frequencies via H(-jW) = conj(H(jW)).
inline cplx channel_response_signed(const MismatchProfile& profile, const TiadcConfig& cfg, std::size_t m,
                                    double omega_analog) {
    if (omega_analog < 0.0) return std::conj(channel_response(profile, cfg, m, -omega_analog));
    return channel_response(profile, cfg, m, omega_analog);
}

/// Ideal mid-tread quantizer with saturation at the two's-complement code range.
inline double quantize(double v, const TiadcConfig& cfg) {
    const double lsb = cfg.lsb();
    const double top = std::ldexp(1.0, cfg.bits - 1);
    const double code = std::clamp(std::nearbyint(v / lsb), -top, top - 1.0);
    return code * lsb;
}

/// Per-channel sample streams x_m[i] for a multi-tone input.
inline std::vector<std::vector<double>> sample_channels(const ToneSpec& tones, const TiadcConfig& cfg,
                                                        const MismatchProfile& profile, std::size_t n_total) {
    cfg.validate();
    tones.validate();
    const std::size_t M = cfg.channels();
    require(profile.channels() == M, "profile channel count does not match config");
    require(n_total > 0 && n_total % M == 0, "n_total must be a positive multiple of m_channels");
    const std::size_t per = n_total / M;

    std::vector<std::vector<double>> out(M, std::vector<double>(per, 0.0));
    for (std::size_t m = 0; m < M; ++m) {
        const double offset_v = profile.offset_lsb(m) * cfg.lsb();
        auto& x = out[m];
        std::fill(x.begin(), x.end(), offset_v + tones.dc);
        for (const auto& t : tones.tones) {
            const auto p = profile.at(m, t.freq_hz);
            const double omega = kTwoPi * t.freq_hz;
            const double cps = t.freq_hz / cfg.fs; // cycles per aggregate sample
            const double extra = omega * p.dt_s + t.phase_rad;
            for (std::size_t i = 0; i < per; ++i) {
                double cycles = cps * static_cast<double>(i * M + m);
                cycles -= std::floor(cycles);
                x[i] += p.gain * t.amplitude * std::cos(kTwoPi * cycles + extra);
            }
        }
        if (cfg.quantize)
            for (auto& v : x) v = quantize(v, cfg);
    }
    return out;
}

/// Round-robin merge: y[i M + m] = x_m[i].
inline Capture interleave(const std::vector<std::vector<double>>& channels, const TiadcConfig& cfg) {
    require(channels.size() == cfg.channels(), "channel count does not match config");
    const std::size_t per = channels.front().size();
    for (const auto& c : channels) require(c.size() == per, "ragged channel lengths");
    const std::size_t M = channels.size();
    Capture cap;
    cap.config = cfg;
    cap.samples.resize(per * M);
    for (std::size_t i = 0; i < per; ++i)
        for (std::size_t m = 0; m < M; ++m) cap.samples[i * M + m] = channels[m][i];
    return cap;
}

inline std::vector<std::vector<double>> deinterleave(const Capture& cap) {
    const std::size_t M = cap.config.channels();
    require(cap.size() % M == 0, "capture length must be a multiple of m_channels");
    std::vector<std::vector<double>> ch(M, std::vector<double>(cap.size() / M));
    for (std::size_t n = 0; n < cap.size(); ++n) ch[n % M][n / M] = cap.samples[n];
    return ch;
}

/// Convenience: sample, interleave.
inline Capture simulate(const ToneSpec& tones, const TiadcConfig& cfg, const MismatchProfile& profile,
                        std::size_t n_total) {
    return interleave(sample_channels(tones, cfg, profile, n_total), cfg);
}

enum class LineKind { fundamental, image, offset_spur };

inline std::string to_string(LineKind k) {
    switch (k) {
    case LineKind::fundamental: return "fundamental";
    case LineKind::image: return "image";
    case LineKind::offset_spur: return "offset_spur";
    }
    return "?";
}

struct PredictedLine {
    double freq_hz = 0.0; ///< folded into [0, fs/2]
    double amplitude = 0.0; ///< peak amplitude of the real spectral line [V]
    LineKind kind = LineKind::fundamental;
    int k = 0;
    std::size_t tone = 0; ///< originating tone (meaningless for offset spurs)
};

/// Analytic output spectrum of the interleaved record, quantization ignored.
///
/// Each tone produces lines at f + k fs/M, k in [0, M), whose complex
/// coefficient is the k-th DFT term of the per-channel mismatch factors
/// g_m exp(jW dt_m); offsets produce lines at k fs/M. All terms are kept as
/// two-sided exponential coefficients, folded and merged by complex addition
/// before magnitudes are taken.
inline std::vector<PredictedLine> predict_output_spectrum(const ToneSpec& tones, const TiadcConfig& cfg,
                                                          const MismatchProfile& profile, int zone) {
    cfg.validate();
    tones.validate();
    require(zone == 1 || zone == 2, "zone must be 1 or 2");
    const std::size_t M = cfg.channels();
    require(profile.channels() == M, "profile channel count does not match config");
    for (const auto& t : tones.tones)
        require(t.amplitude == 0.0 || nyquist_zone(t.freq_hz, cfg.fs) == zone,
                "tone frequency lies outside the requested Nyquist zone");

    struct Term {
        double nu; // cycles per sample in [0, 1)
        cplx coef;
        LineKind kind;
        int k;
        std::size_t tone;
    };
    std::vector<Term> terms;
    auto wrap = [](double nu) {
        nu -= std::floor(nu);
        return nu >= 1.0 ? 0.0 : nu;
    };
    const double Md = static_cast<double>(M);

    for (std::size_t ti = 0; ti < tones.tones.size(); ++ti) {
        const auto& t = tones.tones[ti];
        const double omega = kTwoPi * t.freq_hz;
        std::vector<cplx> mis(M);
        for (std::size_t m = 0; m < M; ++m) {
            const auto p = profile.at(m, t.freq_hz);
            mis[m] = std::polar(p.gain, omega * p.dt_s);
        }
        const cplx half = std::polar(t.amplitude / 2.0, t.phase_rad);
        for (std::size_t k = 0; k < M; ++k) {
            cplx c{0.0, 0.0};
            for (std::size_t m = 0; m < M; ++m)
                c += mis[m] * std::polar(1.0, -kTwoPi * static_cast<double>(k * m) / Md);
            c /= Md;
            const double nu = wrap(t.freq_hz / cfg.fs + static_cast<double>(k) / Md);
            const auto kind = k == 0 ? LineKind::fundamental : LineKind::image;
            terms.push_back({nu, half * c, kind, static_cast<int>(k), ti});
            terms.push_back({wrap(-nu), std::conj(half * c), kind, static_cast<int>(k), ti});
        }
    }
    for (std::size_t k = 0; k < M; ++k) {
        cplx o{0.0, 0.0};
        for (std::size_t m = 0; m < M; ++m)
            o += profile.offset_lsb(m) * cfg.lsb() * std::polar(1.0, -kTwoPi * static_cast<double>(k * m) / Md);
        o /= Md;
        if (k == 0) o += tones.dc;
        terms.push_back({static_cast<double>(k) / Md, o, LineKind::offset_spur, static_cast<int>(k), 0});
    }

    // Reduce to the half band: coefficients at 1 - nu are conjugates of those at nu.
    struct Acc {
        double nu;
        cplx coef;
        LineKind kind;
        int k;
        std::size_t tone;
    };
    std::vector<Acc> acc;
    constexpr double tol = 1e-12;
    for (const auto& tm : terms) {
        if (tm.nu > 0.5 + tol) continue; // mirrored half carries no extra information
        auto it = std::find_if(acc.begin(), acc.end(), [&](const Acc& a) { return std::abs(a.nu - tm.nu) < tol; });
        if (it == acc.end()) {
            acc.push_back({tm.nu, tm.coef, tm.kind, tm.k, tm.tone});
        } else {
            it->coef += tm.coef;
            if (static_cast<int>(tm.kind) < static_cast<int>(it->kind)) {
                it->kind = tm.kind;
                it->k = tm.k;
                it->tone = tm.tone;
            }
        }
    }
    std::sort(acc.begin(), acc.end(), [](const Acc& a, const Acc& b) { return a.nu < b.nu; });

    std::vector<PredictedLine> lines;
    lines.reserve(acc.size());
    for (const auto& a : acc) {
        const bool edge = a.nu < tol || std::abs(a.nu - 0.5) < tol;
        // At DC and fs/2 both conjugate halves were accumulated, so the coefficient is the real line value.
        const double amp = edge ? std::abs(a.coef) : 2.0 * std::abs(a.coef);
        lines.push_back({a.nu * cfg.fs, amp, a.kind, a.k, a.tone});
    }
    return lines;
}

} // namespace tiadc
