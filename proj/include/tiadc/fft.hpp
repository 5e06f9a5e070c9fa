#pragma once

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <vector>

#include <fftw3.h>

#include "tiadc/errors.hpp"

namespace tiadc::fft {

namespace detail {
// FFTW's planner is not re-entrant.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

inline std::vector<std::complex<double>> transform(std::span<const std::complex<double>> in, int sign) {
    const int n = static_cast<int>(in.size());
    require(n > 0, "empty transform");
    std::vector<std::complex<double>> out(in.begin(), in.end());
    auto* buf = reinterpret_cast<fftw_complex*>(out.data());
    fftw_plan plan;
    {
        std::lock_guard lk(planner_mutex());
        plan = fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lk(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}
} // namespace detail

/// X[k] = sum_n x[n] exp(-j 2 pi k n / N), unnormalized.
inline std::vector<std::complex<double>> forward(std::span<const std::complex<double>> x) {
    return detail::transform(x, FFTW_FORWARD);
}

inline std::vector<std::complex<double>> forward(std::span<const double> x) {
    std::vector<std::complex<double>> c(x.begin(), x.end());
    return detail::transform(c, FFTW_FORWARD);
}

/// x[n] = (1/N) sum_k X[k] exp(+j 2 pi k n / N).
inline std::vector<std::complex<double>> inverse(std::span<const std::complex<double>> X) {
    auto out = detail::transform(X, FFTW_BACKWARD);
    const double s = 1.0 / static_cast<double>(X.size());
    for (auto& v : out) v *= s;
    return out;
}

} // namespace tiadc::fft
