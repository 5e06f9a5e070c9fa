#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "tiadc/errors.hpp"

namespace tiadc {

/// One tabulated mismatch sample of one channel.
struct MismatchRow {
    double freq_hz = 0.0;
    double gain = 1.0;
    double dt_s = 0.0;
    double offset_lsb = 0.0;
};

/// Interpolated mismatch values at one query frequency.
struct MismatchPoint {
    double gain = 1.0;
    double dt_s = 0.0;
    double offset_lsb = 0.0;
};

/// Per-channel frequency-tabulated gain, timing error and offset.
///
/// All channels share one frequency grid. Lookups interpolate linearly per
/// column and clamp to the nearest endpoint outside the table.
class MismatchProfile {
public:
    MismatchProfile() = default;

    explicit MismatchProfile(std::vector<std::vector<MismatchRow>> channels)
        : channels_(std::move(channels)) {
        validate();
    }

    /// Unit gain, zero timing error and zero offset on a two-knot grid spanning [0, f_max].
    static MismatchProfile ideal(int m_channels, double f_max_hz) {
        std::vector<std::vector<MismatchRow>> ch(static_cast<std::size_t>(m_channels));
        for (auto& rows : ch) rows = {{0.0, 1.0, 0.0, 0.0}, {f_max_hz, 1.0, 0.0, 0.0}};
        return MismatchProfile(std::move(ch));
    }

    /// Frequency-independent per-channel values on a two-knot grid.
    static MismatchProfile constant(const std::vector<MismatchPoint>& per_channel, double f_max_hz) {
        std::vector<std::vector<MismatchRow>> ch;
        for (const auto& p : per_channel)
            ch.push_back({{0.0, p.gain, p.dt_s, p.offset_lsb}, {f_max_hz, p.gain, p.dt_s, p.offset_lsb}});
        return MismatchProfile(std::move(ch));
    }

    std::size_t channels() const { return channels_.size(); }
    std::size_t rows() const { return channels_.empty() ? 0 : channels_.front().size(); }
    const std::vector<MismatchRow>& channel(std::size_t m) const { return channels_.at(m); }
    const std::vector<std::vector<MismatchRow>>& table() const { return channels_; }

    double min_freq() const { return channels_.front().front().freq_hz; }
    double max_freq() const { return channels_.front().back().freq_hz; }
    bool covers(double lo_hz, double hi_hz) const { return lo_hz >= min_freq() && hi_hz <= max_freq(); }

    MismatchPoint at(std::size_t m, double freq_hz) const {
        require(m < channels_.size(), "invalid channel index");
        require(std::isfinite(freq_hz), "non-finite query frequency");
        const auto& rows = channels_[m];
        if (freq_hz <= rows.front().freq_hz) return point(rows.front());
        if (freq_hz >= rows.back().freq_hz) return point(rows.back());
        auto hi = std::upper_bound(rows.begin(), rows.end(), freq_hz,
                                   [](double f, const MismatchRow& r) { return f < r.freq_hz; });
        auto lo = hi - 1;
        const double t = (freq_hz - lo->freq_hz) / (hi->freq_hz - lo->freq_hz);
        return {lo->gain + t * (hi->gain - lo->gain),
                lo->dt_s + t * (hi->dt_s - lo->dt_s),
                lo->offset_lsb + t * (hi->offset_lsb - lo->offset_lsb)};
    }

    /// Offset of channel m; offsets are frequency independent, so the table mean is used.
    double offset_lsb(std::size_t m) const {
        const auto& rows = channels_.at(m);
        double s = 0.0;
        for (const auto& r : rows) s += r.offset_lsb;
        return s / static_cast<double>(rows.size());
    }

private:
    static MismatchPoint point(const MismatchRow& r) { return {r.gain, r.dt_s, r.offset_lsb}; }

    void validate() const {
        require(channels_.size() >= 2, "profile needs at least two channels");
        const auto& ref = channels_.front();
        require(!ref.empty(), "profile channel has no rows");
        for (const auto& rows : channels_) {
            require(rows.size() == ref.size(), "profile channels must share the same frequency grid");
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto& r = rows[i];
                require(std::isfinite(r.freq_hz) && r.freq_hz >= 0.0, "profile frequency must be finite and >= 0");
                require(r.freq_hz == ref[i].freq_hz, "profile channels must share the same frequency grid");
                require(std::isfinite(r.gain) && r.gain > 0.0, "profile gain must be > 0");
                require(std::isfinite(r.dt_s) && std::isfinite(r.offset_lsb), "profile values must be finite");
                if (i > 0) require(r.freq_hz > rows[i - 1].freq_hz, "profile frequencies must be strictly increasing");
            }
        }
    }

    std::vector<std::vector<MismatchRow>> channels_;
};

} // namespace tiadc
