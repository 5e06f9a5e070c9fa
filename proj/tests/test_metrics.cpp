#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "tiadc/metrics.hpp"
#include "tiadc/model.hpp"
#include "tiadc/synthetic.hpp"

using namespace tiadc;

namespace {

Capture sine(double amp, double f, std::size_t n, TiadcConfig c = {}) {
    return simulate(ToneSpec{{{amp, f, 0.3}}, 0.0}, c, MismatchProfile::ideal(c.m_channels, c.fs), n);
}

} // namespace

TEST(CoherentBin, Examples) {
    const auto a = coherent_bin(200e6, 1.6e9, 4096);
    EXPECT_EQ(a.cycles, 511);
    EXPECT_NEAR(a.freq_hz, 199.609375e6, 1e-3);
    // 4 sits halfway between 3 and 5; ties go to the lower J, as 512 -> 511 above
    EXPECT_EQ(coherent_bin(0.4e9, 1.6e9, 16).cycles, 3);
    EXPECT_EQ(coherent_bin(0.45e9, 1.6e9, 16).cycles, 5);
    EXPECT_EQ(coherent_bin(1.2e9, 1.6e9, 8192).cycles % 2, 1); // zone 2 targets allowed
    EXPECT_THROW(coherent_bin(1.0, 1.6e9, 4096), ValidationError);
    EXPECT_THROW(coherent_bin(100e6, 1.6e9, 1000), ValidationError);
}

TEST(Spectrum, FullAndHalfScale) {
    const std::size_t N = 4096;
    const double f = coherent_bin(123e6, 1.6e9, N).freq_hz;
    const auto r = spectrum(sine(1.0, f, N), N, Window{});
    const std::size_t fb = r.bin_of(f);
    EXPECT_NEAR(r.power_dbfs[fb], 0.0, 0.01);
    for (std::size_t k = 0; k < r.power_dbfs.size(); ++k)
        if (k != fb) {
            EXPECT_LT(r.power_dbfs[k], -250.0) << k;
        }
    EXPECT_NEAR(spectrum(sine(0.5, f, N), N, Window{}).power_dbfs[fb], -6.0206, 0.01);
}

TEST(Spectrum, DcOnly) {
    TiadcConfig c;
    const auto cap = simulate(ToneSpec{{}, 0.3}, c, MismatchProfile::ideal(4, c.fs), 1024);
    const auto r = spectrum(cap, 1024, Window{});
    EXPECT_NEAR(r.power[0], 0.09, 1e-15);
    for (std::size_t k = 1; k < r.power.size(); ++k) EXPECT_LT(r.power[k], 1e-28);
}

TEST(Spectrum, Parseval) {
    TiadcConfig c;
    const auto cap = simulate(ToneSpec{{{0.4, 211e6, 0.1}, {0.3, 777e6, 2.0}}, 0.05}, c, smooth_profile(c), 2048);
    const auto r = spectrum(cap, 2048, Window{});
    const double bins = std::accumulate(r.power.begin(), r.power.end(), 0.0);
    double ms = 0;
    for (double v : cap.samples) ms += v * v;
    ms /= 2048;
    EXPECT_NEAR(bins / ms, 1.0, 1e-9);
}

TEST(Spectrum, SkipsTransientAndRejectsShort) {
    auto cap = sine(1.0, 100e6, 1024);
    cap.transient_samples = 65;
    EXPECT_THROW(spectrum(cap, 1024, Window{}), ValidationError);
    EXPECT_NO_THROW(spectrum(cap, 512, Window{}));
    EXPECT_THROW(spectrum(cap, 500, Window{}), ValidationError);
}

TEST(Metrics, EnobIdentity) {
    EXPECT_DOUBLE_EQ(enob_from_sinad(74.0), 12.0);
    const std::size_t N = 4096;
    const double f = coherent_bin(97e6, 1.6e9, N).freq_hz;
    const auto r = dynamic_metrics(spectrum(sine(0.9, f, N), N, Window{}), f, 4);
    EXPECT_DOUBLE_EQ(r.enob_bits, (r.sinad_db - 1.76) / 6.02);
    EXPECT_GE(r.sfdr_db, 0.0);
}

TEST(Metrics, IdealTwelveBitQuantizer) {
    TiadcConfig c;
    c.bits = 12;
    c.quantize = true;
    const std::size_t N = 4096;
    const double f = coherent_bin(97e6, c.fs, N).freq_hz;
    const auto r = dynamic_metrics(spectrum(sine(1.0 - c.lsb() / 2, f, N, c), N, Window{}), f, 4);
    EXPECT_NEAR(r.enob_bits, 12.0, 0.15);
}

TEST(Metrics, TwoChannelGainSfdr) {
    TiadcConfig c;
    c.m_channels = 2;
    const std::size_t N = 8192;
    const double f = coherent_bin(130e6, c.fs, N).freq_hz;
    const auto p = MismatchProfile::constant({{1, 0, 0}, {1.02, 0, 0}}, c.fs);
    const auto r = dynamic_metrics(spectrum(simulate(ToneSpec{{{0.9, f, 0}}, 0}, c, p, N), N, Window{}), f, 2);
    EXPECT_NEAR(r.sfdr_db, -20 * std::log10(0.01 / 1.01), 1e-6);
    bool found = false;
    for (const auto& s : r.spurs)
        if (s.kind == "image(1)") {
            EXPECT_NEAR(s.freq_hz, c.fs / 2 - f, 1.0);
            EXPECT_NEAR(s.dbc, 20 * std::log10(0.01 / 1.01), 1e-6);
            found = true;
        }
    EXPECT_TRUE(found);
}

TEST(Metrics, MissingFundamental) {
    const std::size_t N = 4096;
    const auto cap = sine(0.9, coherent_bin(97e6, 1.6e9, N).freq_hz, N);
    EXPECT_THROW(dynamic_metrics(spectrum(cap, N, Window{}), 300e6, 4), ValidationError);
}

TEST(Metrics, ScaleInvariance) {
    TiadcConfig c;
    const std::size_t N = 4096;
    const double f = coherent_bin(311e6, c.fs, N).freq_hz;
    auto cap = simulate(ToneSpec{{{0.8, f, 0}}, 0}, c, smooth_profile(c), N);
    const auto a = dynamic_metrics(spectrum(cap, N, Window{}), f, 4);
    for (auto& v : cap.samples) v *= 0.5;
    const auto b = dynamic_metrics(spectrum(cap, N, Window{}), f, 4);
    EXPECT_NEAR(a.sinad_db, b.sinad_db, 1e-9);
    EXPECT_NEAR(a.snr_db, b.snr_db, 1e-9);
    EXPECT_NEAR(a.sfdr_db, b.sfdr_db, 1e-9);
    EXPECT_NEAR(a.thd_db, b.thd_db, 1e-6);
    EXPECT_NEAR(a.fundamental_dbfs - b.fundamental_dbfs, -20 * std::log10(0.5), 1e-9);
}

TEST(Metrics, NonCoherentWithWindow) {
    TiadcConfig c;
    const std::size_t N = 8192;
    const double f = 123.4567e6; // not on a bin
    for (auto w : {Window{WindowKind::hann, 0}, Window{WindowKind::blackman, 0}, Window::kaiser(8), Window::kaiser(20)}) {
        const auto r = dynamic_metrics(spectrum(sine(0.5, f, N), N, w), f, 4);
        EXPECT_NEAR(r.fundamental_dbfs, -6.0206, 0.5) << w.name();
    }
    // sidelobe leakage past the gathered bins caps SINAD; a high-beta Kaiser pushes it away
    EXPECT_GT(dynamic_metrics(spectrum(sine(0.5, f, N), N, Window::kaiser(20)), f, 4).enob_bits, 20.0);
}

TEST(ImageSpurs, IdealFloorPlacementAndCollision) {
    TiadcConfig c;
    const std::size_t N = 8192;
    const double f = coherent_bin(170e6, c.fs, N).freq_hz;
    const auto ideal = spectrum(sine(0.9, f, N), N, Window{});
    for (const auto& s : image_spur_levels(ideal, f, c.fs, 4)) EXPECT_LT(s.dbc, -120.0);

    const auto rep = spectrum(simulate(ToneSpec{{{0.9, 170e6, 0}}, 0}, c, smooth_profile(c), N), N,
                              Window::kaiser(8));
    const auto im = image_spur_levels(rep, 170e6, c.fs, 4);
    std::vector<double> mhz;
    for (const auto& s : im) mhz.push_back(s.freq_hz / 1e6);
    std::sort(mhz.begin(), mhz.end());
    ASSERT_EQ(mhz.size(), 3u);
    EXPECT_NEAR(mhz[0], 230, 1e-9);
    EXPECT_NEAR(mhz[1], 570, 1e-9);
    EXPECT_NEAR(mhz[2], 630, 1e-9);
    for (const auto& s : im) EXPECT_GT(s.dbc, -70.0); // visible above the window floor

    // fs/8: 400 - 200 lands on the tone
    const auto r8 = spectrum(simulate(ToneSpec{{{0.9, c.fs / 8, 0}}, 0}, c, smooth_profile(c), N), N, Window{});
    bool flagged = false;
    for (const auto& s : image_spur_levels(r8, c.fs / 8, c.fs, 4))
        if (s.k == 1 && s.collision) flagged = true;
    EXPECT_TRUE(flagged);
}

TEST(SpurTable, Classification) {
    TiadcConfig c;
    const std::size_t N = 8192;
    const double f = coherent_bin(170e6, c.fs, N).freq_hz;
    const auto r = dynamic_metrics(
        spectrum(simulate(ToneSpec{{{0.9, f, 0}}, 0}, c, smooth_profile(c), N), N, Window{}), f, 4);
    int images = 0, offsets = 0, harmonics = 0;
    for (const auto& s : r.spurs) {
        images += s.kind.rfind("image(", 0) == 0;
        offsets += s.kind.rfind("offset_spur(", 0) == 0;
        harmonics += s.kind.rfind("harmonic(", 0) == 0;
    }
    EXPECT_EQ(images, 3);
    EXPECT_EQ(offsets, 2); // fs/4 and fs/2; 3fs/4 folds onto fs/4
    EXPECT_GE(harmonics, 1);
}
