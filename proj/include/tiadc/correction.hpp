#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tiadc/capture.hpp"
#include "tiadc/filter_design.hpp"
#include "tiadc/profile.hpp"

namespace tiadc {

/// Subtracts each channel's offset (profile offset column, in LSB) from its samples.
inline Capture correct_offsets(const Capture& capture, const MismatchProfile& profile) {
    const std::size_t M = capture.config.channels();
    require(profile.channels() == M, "profile channel count does not match capture");
    require(capture.size() % M == 0, "capture length must be a multiple of m_channels");
    Capture out = capture;
    const double lsb = capture.config.lsb();
    for (std::size_t m = 0; m < M; ++m) {
        const double o = profile.offset_lsb(m) * lsb;
        if (o == 0.0) continue;
        for (std::size_t n = m; n < out.size(); n += M) out.samples[n] -= o;
    }
    return out;
}

/// Frame-at-a-time synthesis filter bank.
///
/// A frame is one sample of every channel (M consecutive interleaved
/// samples). Output sample n of frame i is
///   y[n] = sum_m sum_{p = n mod M, p < L} f_m[p] x_m[(n - p) / M],
/// i.e. every branch filters its zero-stuffed channel stream and the branches
/// are summed. Inputs before the first frame are zero.
class BankStreamer {
public:
    explicit BankStreamer(const FilterBank& bank)
        : taps_(bank.taps), M_(static_cast<std::size_t>(bank.m_channels)), L_(bank.length()) {
        bank.validate();
        depth_ = (L_ + M_ - 1) / M_ + 1;
        history_.assign(depth_ * M_, 0.0);
    }

    std::size_t frame_size() const { return M_; }

    /// Consumes whole frames and returns the same number of output samples.
    std::vector<double> process(std::span<const double> input) {
        require(input.size() % M_ == 0, "input must consist of whole frames");
        std::vector<double> out(input.size());
        for (std::size_t f = 0; f < input.size() / M_; ++f) {
            push_frame(input.subspan(f * M_, M_));
            for (std::size_t r = 0; r < M_; ++r) out[f * M_ + r] = output_at(r);
        }
        return out;
    }

    void reset() {
        std::fill(history_.begin(), history_.end(), 0.0);
        head_ = 0;
    }

private:
    void push_frame(std::span<const double> frame) {
        head_ = (head_ + 1) % depth_;
        std::copy(frame.begin(), frame.end(), history_.begin() + static_cast<std::ptrdiff_t>(head_ * M_));
    }

    // sample of channel m, `age` frames before the newest one
    double x(std::size_t m, std::size_t age) const { return history_[((head_ + depth_ - age) % depth_) * M_ + m]; }

    // output at offset r within the newest frame
    double output_at(std::size_t r) const {
        double acc = 0.0;
        for (std::size_t m = 0; m < M_; ++m) {
            const auto& f = taps_[m];
            for (std::size_t p = r, age = 0; p < L_; p += M_, ++age) acc += f[p] * x(m, age);
        }
        return acc;
    }

    std::vector<std::vector<double>> taps_;
    std::size_t M_;
    std::size_t L_;
    std::size_t depth_ = 0;
    std::vector<double> history_;
    std::size_t head_ = 0;
};

/// Applies the synthesis bank to a whole capture. The output has the input's
/// length, is delayed by the bank's d, and its first and last L samples are
/// flagged as transient.
inline Capture correct(const Capture& capture, const FilterBank& bank) {
    bank.validate();
    require(bank.m_channels == capture.config.m_channels, "bank and capture disagree on m_channels");
    require(capture.size() >= bank.length(), "capture is shorter than the filter length");
    require(capture.size() % capture.config.channels() == 0, "capture length must be a multiple of m_channels");
    BankStreamer s(bank);
    Capture out;
    out.config = capture.config;
    out.samples = s.process(capture.samples);
    out.corrected = true;
    out.bank_id = bank.id();
    out.transient_samples = bank.length();
    return out;
}

} // namespace tiadc
