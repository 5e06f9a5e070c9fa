#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tiadc/config.hpp"
#include "tiadc/fft.hpp"
#include "tiadc/model.hpp"
#include "tiadc/profile.hpp"
#include "tiadc/window.hpp"

namespace tiadc {

/// Parameters of the frequency-sampling design of the correction bank.
struct DesignSpec {
    std::size_t n_grid = 1024; ///< N, DFT grid size
    std::size_t taps = 65;     ///< L, odd
    long delay_d = -1;         ///< target group delay in samples; negative selects (L-1)/2
    Window window = Window::kaiser(8.0);
    int zone = 1;
    /// Condition number above which a grid point is declared singular.
    double max_condition = 1e8;

    std::size_t delay() const { return delay_d < 0 ? (taps - 1) / 2 : static_cast<std::size_t>(delay_d); }

    void validate() const {
        require(taps >= 1 && taps % 2 == 1, "filter length L must be odd");
        require(n_grid >= 4 && (n_grid & (n_grid - 1)) == 0, "grid size N must be a power of two");
        require(n_grid >= 4 * taps, "grid size N must be at least 4 L");
        require(delay() < n_grid, "delay d must satisfy 0 <= d < N");
        require(zone == 1 || zone == 2, "zone must be 1 or 2");
        require(max_condition > 1.0, "max_condition must exceed 1");
    }
};

/// Synthesis bank: branch m filters the zero-stuffed stream of channel m.
struct FilterBank {
    std::vector<std::vector<double>> taps; ///< [m][p]
    DesignSpec spec;
    int m_channels = 0;
    double fs = 0.0;
    /// largest imaginary part discarded from the inverse DFT
    double max_imag_residue = 0.0;

    std::size_t length() const { return taps.empty() ? 0 : taps.front().size(); }

    void validate() const {
        require(m_channels >= 2 && taps.size() == static_cast<std::size_t>(m_channels),
                "bank must hold one branch per channel");
        for (const auto& b : taps) {
            require(b.size() == length() && !b.empty(), "all branches must have the same length");
            for (double v : b) require(std::isfinite(v), "bank coefficients must be finite");
        }
    }

    /// Stable identifier derived from the coefficients (FNV-1a, 64 bit).
    std::string id() const {
        std::uint64_t h = 1469598103934665603ULL;
        auto mix = [&](const void* p, std::size_t n) {
            const auto* b = static_cast<const unsigned char*>(p);
            for (std::size_t i = 0; i < n; ++i) {
                h ^= b[i];
                h *= 1099511628211ULL;
            }
        };
        mix(&m_channels, sizeof m_channels);
        for (const auto& b : taps) mix(b.data(), b.size() * sizeof(double));
        char buf[24];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

namespace detail {

inline long floor_div_l(double v) { return static_cast<long>(std::floor(v)); }

/// Integers k with k/M in the half-open interval (lo, hi].
inline void append_range(std::vector<int>& out, double lo, double hi, int M) {
    const long kmax = floor_div_l(hi * M);
    long kmin = floor_div_l(lo * M) + 1;
    for (long k = kmin; k <= kmax; ++k) out.push_back(static_cast<int>(k));
}

} // namespace detail

/// Alias indices k contributing to normalized output frequency x = omega / 2 pi.
///
/// Zone 1 keeps  -1/2 <= x - k/M < 1/2; zone 2 keeps 1/2 <= x - k/M < 1 or
/// -1 <= x - k/M < -1/2. Both are half-open so exactly M indices qualify.
inline std::vector<int> k_set_cycles(double x, int M, int zone) {
    require(M >= 1, "m_channels must be positive");
    require(zone == 1 || zone == 2, "zone must be 1 or 2");
    std::vector<int> ks;
    if (zone == 1) {
        detail::append_range(ks, x - 0.5, x + 0.5, M);
    } else {
        detail::append_range(ks, x - 1.0, x - 0.5, M);
        detail::append_range(ks, x + 0.5, x + 1.0, M);
    }
    std::sort(ks.begin(), ks.end());
    return ks;
}

inline std::vector<int> k_set(double omega, int M, int zone) {
    require(std::isfinite(omega) && omega >= 0.0 && omega < std::numbers::pi, "omega must lie in [0, pi)");
    return k_set_cycles(omega / kTwoPi, M, zone);
}

/// The member of a k-set that carries the undistorted signal (k = 0 mod M).
inline int reference_k(const std::vector<int>& ks, int M) {
    for (int k : ks)
        if (((k % M) + M) % M == 0) return k;
    throw ValidationError("k-set has no reference member");
}

/// Analog band [lo, hi] in Hz whose channel responses a design in `zone` reads.
inline std::pair<double, double> design_band(const TiadcConfig& cfg, int zone) {
    return {(zone - 1) * cfg.fs / 2.0, zone * cfg.fs / 2.0};
}

/// Non-empty when the profile table leaves more than 10 % of the design band
/// to clamped extrapolation.
inline std::string coverage_warning(const MismatchProfile& profile, const TiadcConfig& cfg, int zone) {
    const auto [lo, hi] = design_band(cfg, zone);
    const double covered = std::max(0.0, std::min(hi, profile.max_freq()) - std::max(lo, profile.min_freq()));
    if (covered >= 0.9 * (hi - lo)) return {};
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "profile table spans [%.6g, %.6g] Hz but the zone-%d design reads [%.6g, %.6g] Hz; "
                  "values outside the table are clamped",
                  profile.min_freq(), profile.max_freq(), zone, lo, hi);
    return buf;
}

/// Result of one perfect-reconstruction solve.
struct PrSolution {
    std::vector<cplx> response; ///< F_m, m in [0, M)
    double condition = 0.0;
    double relative_residual = 0.0;
};

namespace detail {

inline PrSolution solve_pr_cycles(double x, const MismatchProfile& profile, const TiadcConfig& cfg,
                                  const DesignSpec& spec) {
    const int M = cfg.m_channels;
    require(profile.channels() == cfg.channels(), "profile channel count does not match config");
    const auto ks = k_set_cycles(x, M, spec.zone);
    const int kref = reference_k(ks, M);
    const double d = static_cast<double>(spec.delay());

    Eigen::MatrixXcd A(M, M);
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(M);
    for (int row = 0; row < M; ++row) {
        const int k = ks[static_cast<std::size_t>(row)];
        const double u = x - static_cast<double>(k) / M;
        for (int m = 0; m < M; ++m)
            A(row, m) = channel_response_signed(profile, cfg, static_cast<std::size_t>(m), kTwoPi * u * cfg.fs);
        if (k == kref) b(row) = static_cast<double>(M) * std::polar(1.0, -kTwoPi * x * d);
    }

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
    if (!(cond <= spec.max_condition)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "perfect-reconstruction system is singular at omega = %.9g rad (cond %.3g)",
                      kTwoPi * x, cond);
        throw SingularDesignError(buf, kTwoPi * x);
    }
    const Eigen::VectorXcd F = A.fullPivLu().solve(b);
    const double res = (A * F - b).norm() / b.norm();
    if (!(res <= 1e-10)) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "linear solve residual %.3g too large at omega = %.9g rad", res, kTwoPi * x);
        throw SingularDesignError(buf, kTwoPi * x);
    }
    PrSolution s;
    s.response.assign(F.data(), F.data() + M);
    s.condition = cond;
    s.relative_residual = res;
    return s;
}

} // namespace detail

/// Solves sum_m F_m H_m(W_k) = M exp(-j omega d) for the reference alias and
/// 0 for every other member of the zone's k-set.
inline std::vector<cplx> solve_pr_at(double omega, const MismatchProfile& profile, const TiadcConfig& cfg,
                                     const DesignSpec& spec) {
    require(std::isfinite(omega) && omega >= 0.0 && omega < std::numbers::pi, "omega must lie in [0, pi)");
    cfg.validate();
    spec.validate();
    return detail::solve_pr_cycles(omega / kTwoPi, profile, cfg, spec).response;
}

/// Unwindowed impulse responses of every branch (length N, circular).
inline std::vector<std::vector<cplx>> branch_impulse_responses(const MismatchProfile& profile, const TiadcConfig& cfg,
                                                               const DesignSpec& spec) {
    cfg.validate();
    spec.validate();
    const std::size_t M = cfg.channels();
    const std::size_t N = spec.n_grid;
    const std::size_t half = N / 2;

    std::vector<std::vector<cplx>> grid(half + 1);
    auto solve = [&](std::size_t n) {
        return detail::solve_pr_cycles(static_cast<double>(n) / static_cast<double>(N), profile, cfg, spec).response;
    };
    for (std::size_t n = 1; n < half; ++n) grid[n] = solve(n);
    // DC and fs/2: fall back to the adjacent bin when the system is singular there.
    for (std::size_t n : {std::size_t{0}, half}) {
        try {
            grid[n] = solve(n);
        } catch (const SingularDesignError&) {
            grid[n] = grid[n == 0 ? 1 : half - 1];
        }
        for (auto& v : grid[n]) v = {v.real(), 0.0}; // a real filter has a real response there
    }

    std::vector<std::vector<cplx>> out(M);
    std::vector<cplx> spectrum(N);
    for (std::size_t m = 0; m < M; ++m) {
        for (std::size_t n = 0; n <= half; ++n) spectrum[n] = grid[n][m];
        for (std::size_t n = 1; n < half; ++n) spectrum[N - n] = std::conj(grid[n][m]);
        out[m] = fft::inverse(spectrum);
    }
    return out;
}

/// Designs the M-branch correction bank by frequency sampling.
///
/// Branch m is approximately a delay of d + m samples (it also absorbs the
/// interleaving delay of its channel), so its window is centred there.
inline FilterBank design_filter_bank(const MismatchProfile& profile, const TiadcConfig& cfg, const DesignSpec& spec) {
    const auto h = branch_impulse_responses(profile, cfg, spec);
    const std::size_t M = cfg.channels();
    const std::size_t L = spec.taps;
    const std::size_t half_len = (L - 1) / 2;
    const auto w = spec.window.coefficients(L);

    FilterBank bank;
    bank.spec = spec;
    bank.m_channels = cfg.m_channels;
    bank.fs = cfg.fs;
    bank.taps.assign(M, std::vector<double>(L, 0.0));
    for (std::size_t m = 0; m < M; ++m) {
        const long centre = static_cast<long>(spec.delay() + m);
        for (std::size_t p = 0; p < L; ++p) {
            bank.max_imag_residue = std::max(bank.max_imag_residue, std::abs(h[m][p].imag()));
            const long q = static_cast<long>(p) - centre + static_cast<long>(half_len);
            if (q < 0 || q >= static_cast<long>(L)) continue;
            bank.taps[m][p] = h[m][p].real() * w[static_cast<std::size_t>(q)];
        }
    }
    bank.validate();
    return bank;
}

/// Frequency response of every branch, F_m(exp(j 2 pi x)).
inline std::vector<cplx> bank_response(const FilterBank& bank, double x) {
    std::vector<cplx> F(bank.taps.size());
    for (std::size_t m = 0; m < bank.taps.size(); ++m) {
        cplx acc{0.0, 0.0};
        const auto& t = bank.taps[m];
        for (std::size_t p = 0; p < t.size(); ++p) acc += t[p] * std::polar(1.0, -kTwoPi * x * static_cast<double>(p));
        F[m] = acc;
    }
    return F;
}

struct PrResidualPoint {
    double omega = 0.0;
    double residual_k0 = 0.0;    ///< |Gamma_ref - M exp(-j omega d)|
    double residual_alias = 0.0; ///< max over the other alias rows of |Gamma_k|
    /// Same as residual_alias, restricted to rows whose analog frequency lies
    /// in the central part of the zone (see pr_residual).
    double residual_alias_inband = 0.0;
};

struct PrResidualReport {
    std::vector<PrResidualPoint> points;
    double max_residual_k0 = 0.0;
    double max_residual_alias = 0.0;
    double max_residual_alias_inband = 0.0;
};

/// Evaluates the reconstruction conditions of a (windowed, truncated) bank
/// against a profile on n_check frequencies uniformly covering [0, pi).
///
/// `band_fraction` selects the central part of the Nyquist zone whose alias
/// rows count toward the in-band residual.
inline PrResidualReport pr_residual(const FilterBank& bank, const MismatchProfile& profile, const TiadcConfig& cfg,
                                    std::size_t n_check, double band_fraction = 0.9) {
    require(n_check >= 64, "n_check must be >= 64");
    require(bank.m_channels == cfg.m_channels, "bank and config disagree on m_channels");
    const int M = cfg.m_channels;
    const int zone = bank.spec.zone;
    const double d = static_cast<double>(bank.spec.delay());
    const double lo = (zone - 1) * 0.5 + (1.0 - band_fraction) * 0.25;
    const double hi = zone * 0.5 - (1.0 - band_fraction) * 0.25;

    PrResidualReport rep;
    for (std::size_t j = 0; j < n_check; ++j) {
        const double x = static_cast<double>(j) / (2.0 * static_cast<double>(n_check));
        const auto F = bank_response(bank, x);
        const auto ks = k_set_cycles(x, M, zone);
        const int kref = reference_k(ks, M);
        PrResidualPoint pt;
        pt.omega = kTwoPi * x;
        for (int k : ks) {
            const double u = x - static_cast<double>(k) / M;
            cplx gamma{0.0, 0.0};
            for (int m = 0; m < M; ++m)
                gamma += F[static_cast<std::size_t>(m)] *
                         channel_response_signed(profile, cfg, static_cast<std::size_t>(m), kTwoPi * u * cfg.fs);
            if (k == kref) {
                pt.residual_k0 = std::abs(gamma - static_cast<double>(M) * std::polar(1.0, -kTwoPi * x * d));
            } else {
                pt.residual_alias = std::max(pt.residual_alias, std::abs(gamma));
                if (std::abs(u) >= lo && std::abs(u) <= hi)
                    pt.residual_alias_inband = std::max(pt.residual_alias_inband, std::abs(gamma));
            }
        }
        rep.max_residual_k0 = std::max(rep.max_residual_k0, pt.residual_k0);
        rep.max_residual_alias = std::max(rep.max_residual_alias, pt.residual_alias);
        rep.max_residual_alias_inband = std::max(rep.max_residual_alias_inband, pt.residual_alias_inband);
        rep.points.push_back(pt);
    }
    return rep;
}

} // namespace tiadc
