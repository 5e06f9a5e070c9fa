#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "tiadc/errors.hpp"

namespace tiadc {

enum class WindowKind { none, hann, blackman, kaiser };

struct Window {
    WindowKind kind = WindowKind::none;
    double beta = 8.0; ///< Kaiser shape parameter

    static Window kaiser(double b) { return {WindowKind::kaiser, b}; }

    /// Symmetric window of length n (peak exactly 1 at the centre for odd n).
    std::vector<double> coefficients(std::size_t n) const {
        std::vector<double> w(n, 1.0);
        if (n < 2) return w;
        const double den = static_cast<double>(n - 1);
        constexpr double pi = std::numbers::pi;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = static_cast<double>(i) / den;
            switch (kind) {
            case WindowKind::none: break;
            case WindowKind::hann: w[i] = 0.5 - 0.5 * std::cos(2.0 * pi * x); break;
            case WindowKind::blackman:
                w[i] = 0.42 - 0.5 * std::cos(2.0 * pi * x) + 0.08 * std::cos(4.0 * pi * x);
                break;
            case WindowKind::kaiser: {
                const double r = 2.0 * x - 1.0;
                w[i] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) /
                       std::cyl_bessel_i(0.0, beta);
                break;
            }
            }
        }
        return w;
    }

    /// Periodic (DFT-even) variant used for spectral analysis.
    std::vector<double> periodic(std::size_t n) const {
        auto w = coefficients(n + 1);
        w.pop_back();
        return w;
    }

    std::string name() const {
        switch (kind) {
        case WindowKind::none: return "none";
        case WindowKind::hann: return "hann";
        case WindowKind::blackman: return "blackman";
        case WindowKind::kaiser: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "kaiser:%.17g", beta);
            return buf;
        }
        }
        return "none";
    }

    /// Accepts "none", "hann", "blackman", "kaiser" or "kaiser:<beta>".
    static Window parse(const std::string& s) {
        if (s == "none" || s == "rect") return {WindowKind::none, 0.0};
        if (s == "hann") return {WindowKind::hann, 0.0};
        if (s == "blackman") return {WindowKind::blackman, 0.0};
        if (s == "kaiser") return kaiser(8.0);
        if (s.rfind("kaiser:", 0) == 0) {
            try {
                std::size_t used = 0;
                const double b = std::stod(s.substr(7), &used);
                if (used == s.size() - 7 && b >= 0.0) return kaiser(b);
            } catch (const std::exception&) {
            }
        }
        throw ValidationError("unknown window '" + s + "'");
    }
};

} // namespace tiadc
