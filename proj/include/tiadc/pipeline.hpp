#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <future>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tiadc/calibration.hpp"
#include "tiadc/correction.hpp"
#include "tiadc/filter_design.hpp"
#include "tiadc/io.hpp"
#include "tiadc/metrics.hpp"
#include "tiadc/model.hpp"
#include "tiadc/synthetic.hpp"

namespace tiadc {

/// An error re-raised with the name of the pipeline stage it came from.
class StageError : public Error {
public:
    StageError(std::string stage, std::string kind, const std::string& what)
        : Error(what), stage_(std::move(stage)), kind_(std::move(kind)) {}
    const char* kind() const noexcept override { return kind_.c_str(); }
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
    std::string kind_;
};

template <class F>
auto in_stage(const std::string& stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(stage, e.kind(), e.what());
    } catch (const nlohmann::json::exception& e) {
        throw StageError(stage, "validation", e.what());
    } catch (const std::exception& e) {
        throw StageError(stage, "error", e.what());
    }
}

// ---- scenario -----------------------------------------------------------------

struct SweepSpec {
    double f_lo_hz = 0.0;
    double f_hi_hz = 0.0;
    std::size_t n_tones = 20;
    double amplitude_v = 0.94;
    double phase_rad = 0.4;
    std::size_t n_fft = 8192;
    Window window;
};

struct CalibrationSpec {
    std::vector<CalibrationPoint> plan;
    /// build a frequency-independent profile from the single plan point
    bool narrowband = false;
};

struct Thresholds {
    double min_image_drop_db = -INFINITY;
    double min_enob_gain_bits = -INFINITY;
    double min_enob_after_bits = -INFINITY;
};

struct Scenario {
    std::string name;
    TiadcConfig config;
    MismatchProfile truth;
    CalibrationSpec calibration;
    DesignSpec design;
    SweepSpec sweep;
    std::vector<double> two_tone_hz; ///< empty: no two-tone run
    double two_tone_amplitude_v = 0.45;
    Thresholds thresholds;
    std::uint64_t seed = 1;
    double noise_rms_v = 0.0; ///< white noise added to every simulated capture
};

inline TiadcConfig config_from_json(const nlohmann::json& j) {
    TiadcConfig c;
    c.m_channels = j.value("m_channels", c.m_channels);
    c.fs = j.value("fs_hz", c.fs);
    c.bits = j.value("bits", c.bits);
    c.full_scale = j.value("full_scale_v", c.full_scale);
    c.quantize = j.value("quantize", c.quantize);
    for (const auto& [k, v] : j.items())
        if (k != "m_channels" && k != "fs_hz" && k != "bits" && k != "full_scale_v" && k != "quantize")
            throw ValidationError("unknown config field '" + k + "'");
    c.validate();
    return c;
}

inline TiadcConfig read_config(const std::filesystem::path& p) {
    auto f = io::open_in(p);
    try {
        return config_from_json(nlohmann::json::parse(f));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(p.string() + ": " + e.what());
    }
}

namespace detail {

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    require(n >= 1, "point count must be positive");
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path q(p);
    return q.is_absolute() ? q : base / q;
}

inline MismatchProfile truth_from_json(const nlohmann::json& j, const TiadcConfig& cfg,
                                       const std::filesystem::path& base) {
    if (j.is_string()) return io::read_profile(resolve(base, j.get<std::string>()));
    require(j.is_object() && j.contains("synthetic"), "truth_profile must be a path or {\"synthetic\": ...}");
    const auto& s = j.at("synthetic");
    SmoothMismatch p;
    if (s.is_string()) {
        require(s.get<std::string>() == "reference", "unknown synthetic profile '" + s.get<std::string>() + "'");
    } else {
        p.gain_offset = s.value("gain_offset", p.gain_offset);
        p.gain_ripple = s.value("gain_ripple", p.gain_ripple);
        p.dt_static_s = s.value("dt_static_s", p.dt_static_s);
        p.dt_curvature_s = s.value("dt_curvature_s", p.dt_curvature_s);
        p.offset_lsb = s.value("offset_lsb", p.offset_lsb);
        p.rows = s.value("rows", p.rows);
    }
    return smooth_profile(cfg, p);
}

} // namespace detail

/// Reads a scenario; relative paths inside it resolve against its directory.
inline Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
    Scenario s;
    s.name = j.value("name", std::string("scenario"));
    s.seed = j.value("seed", std::uint64_t{1});
    s.noise_rms_v = j.value("noise_rms_v", 0.0);
    require(s.noise_rms_v >= 0.0, "noise_rms_v must be >= 0");
    s.config = in_stage("config", [&] { return config_from_json(j.at("config")); });
    s.truth = in_stage("truth_profile", [&] { return detail::truth_from_json(j.at("truth_profile"), s.config, base); });

    in_stage("calibration", [&] {
        const auto& c = j.at("calibration");
        s.calibration.narrowband = c.value("narrowband", false);
        if (c.contains("plan")) {
            s.calibration.plan = io::read_plan(detail::resolve(base, c.at("plan").get<std::string>()));
        } else {
            const std::size_t n = c.value("n_samples", std::size_t{4096});
            const double amp = c.value("amplitude_v", 0.9);
            for (double f : detail::linspace(c.at("f_lo_hz").get<double>(),
                                             c.value("f_hi_hz", c.at("f_lo_hz").get<double>()),
                                             c.value("n_points", std::size_t{16})))
                s.calibration.plan.push_back({coherent_bin(f, s.config.fs, n).freq_hz, amp, n});
        }
        if (s.calibration.narrowband) require(s.calibration.plan.size() == 1, "a narrowband calibration uses one point");
    });

    in_stage("design", [&] {
        const auto& d = j.value("design", nlohmann::json::object());
        s.design.n_grid = d.value("n_grid", s.design.n_grid);
        s.design.taps = d.value("taps", s.design.taps);
        s.design.delay_d = d.value("delay_d", s.design.delay_d);
        s.design.zone = d.value("zone", s.design.zone);
        s.design.max_condition = d.value("max_condition", s.design.max_condition);
        if (d.contains("window")) s.design.window = Window::parse(d.at("window").get<std::string>());
        s.design.validate();
    });

    in_stage("sweep", [&] {
        const auto& w = j.at("sweep");
        s.sweep.f_lo_hz = w.at("f_lo_hz").get<double>();
        s.sweep.f_hi_hz = w.value("f_hi_hz", s.sweep.f_lo_hz);
        s.sweep.n_tones = w.value("n_tones", s.sweep.n_tones);
        s.sweep.amplitude_v = w.value("amplitude_v", s.sweep.amplitude_v);
        s.sweep.phase_rad = w.value("phase_rad", s.sweep.phase_rad);
        s.sweep.n_fft = w.value("n_fft", s.sweep.n_fft);
        if (w.contains("window")) s.sweep.window = Window::parse(w.at("window").get<std::string>());
        require(s.sweep.n_tones >= 1, "sweep needs at least one tone");
        require(s.sweep.f_lo_hz > 0.0 && s.sweep.f_hi_hz >= s.sweep.f_lo_hz && s.sweep.f_hi_hz < s.config.fs,
                "sweep frequencies must satisfy 0 < f_lo <= f_hi < fs");
    });

    if (j.contains("two_tone"))
        in_stage("two_tone", [&] {
            const auto& t = j.at("two_tone");
            s.two_tone_hz = t.at("freqs_hz").get<std::vector<double>>();
            s.two_tone_amplitude_v = t.value("amplitude_v", s.two_tone_amplitude_v);
            require(s.two_tone_hz.size() == 2, "two_tone.freqs_hz needs exactly two frequencies");
        });

    if (j.contains("thresholds")) {
        const auto& t = j.at("thresholds");
        s.thresholds.min_image_drop_db = t.value("min_image_drop_db", s.thresholds.min_image_drop_db);
        s.thresholds.min_enob_gain_bits = t.value("min_enob_gain_bits", s.thresholds.min_enob_gain_bits);
        s.thresholds.min_enob_after_bits = t.value("min_enob_after_bits", s.thresholds.min_enob_after_bits);
    }
    return s;
}

inline Scenario read_scenario(const std::filesystem::path& p) {
    const auto j = in_stage("scenario", [&] {
        auto f = io::open_in(p);
        try {
            return nlohmann::json::parse(f);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(p.string() + ": " + e.what());
        }
    });
    return scenario_from_json(j, p.parent_path());
}

// ---- run ----------------------------------------------------------------------

struct ImageChange {
    double tone_hz = 0.0;
    int k = 0;
    double freq_hz = 0.0;
    double dbc_before = 0.0;
    double dbc_after = 0.0;
    double drop_db() const { return dbc_before - dbc_after; }
};

struct ToneResult {
    double f_in_hz = 0.0;
    SpectrumReport before;
    SpectrumReport after;
    std::vector<ImageChange> images; ///< collisions with a fundamental omitted
    double max_image_dbc_before = -INFINITY;
    double max_image_dbc_after = -INFINITY;
    double min_image_drop_db() const {
        double d = INFINITY;
        for (const auto& i : images) d = std::min(d, i.drop_db());
        return d;
    }
};

struct PipelineResult {
    MismatchProfile measured;
    FilterBank bank;
    PrResidualReport residuals;
    std::vector<ToneResult> sweep;
    std::vector<ImageChange> two_tone;
    std::vector<std::string> warnings;
    std::vector<std::string> violations;
};

/// Record length for an FFT of n_fft points after dropping `transient` samples at both ends.
inline std::size_t record_length(std::size_t n_fft, std::size_t transient, std::size_t M) {
    const std::size_t n = n_fft + 2 * transient;
    return (n + M - 1) / M * M;
}

namespace detail {

inline void add_noise(Capture& cap, double rms, std::uint64_t seed) {
    if (rms <= 0.0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, rms);
    for (auto& v : cap.samples) v += nd(rng);
}

/// Image levels of every tone in `tones`, before and after, skipping images
/// that land on (or next to) any of the tones.
inline std::vector<ImageChange> image_changes(const SpectrumReport& before, const SpectrumReport& after,
                                              const std::vector<double>& tones, const TiadcConfig& cfg) {
    std::vector<ImageChange> out;
    const std::size_t hw = before.gather();
    for (double f : tones) {
        const auto ib = image_spur_levels(before, f, cfg.fs, cfg.m_channels);
        const auto ia = image_spur_levels(after, f, cfg.fs, cfg.m_channels);
        for (std::size_t i = 0; i < ib.size(); ++i) {
            const std::size_t b = before.bin_of(ib[i].freq_hz);
            bool hit = false;
            for (double g : tones) {
                const std::size_t fb = before.bin_of(g);
                hit = hit || (b > fb ? b - fb : fb - b) <= 2 * hw;
            }
            if (hit) continue;
            out.push_back({f, ib[i].k, ib[i].freq_hz, ib[i].dbc, ia[i].dbc});
        }
    }
    return out;
}

} // namespace detail

/// Simulates one tone set through the converter, corrects it, and measures
/// both records over the same n_fft window.
inline std::pair<Capture, Capture> run_capture(const ToneSpec& tones, const Scenario& s, const MismatchProfile& measured,
                                               const FilterBank& bank, std::uint64_t seed) {
    const std::size_t L = bank.length();
    Capture raw = simulate(tones, s.config, s.truth, record_length(s.sweep.n_fft, L, s.config.channels()));
    detail::add_noise(raw, s.noise_rms_v, seed);
    Capture cor = correct(correct_offsets(raw, measured), bank);
    raw.transient_samples = L;
    return {std::move(raw), std::move(cor)};
}

inline ToneResult run_tone(double f_target, const Scenario& s, const MismatchProfile& measured, const FilterBank& bank,
                           std::uint64_t seed) {
    const auto ct = coherent_bin(f_target, s.config.fs, s.sweep.n_fft);
    const ToneSpec tone{{{s.sweep.amplitude_v, ct.freq_hz, s.sweep.phase_rad}}, 0.0};
    const auto [raw, cor] = run_capture(tone, s, measured, bank, seed);
    ToneResult r;
    r.f_in_hz = ct.freq_hz;
    r.before = dynamic_metrics(spectrum(raw, s.sweep.n_fft, s.sweep.window), ct.freq_hz, s.config.m_channels);
    r.after = dynamic_metrics(spectrum(cor, s.sweep.n_fft, s.sweep.window), ct.freq_hz, s.config.m_channels);
    r.images = detail::image_changes(r.before, r.after, {ct.freq_hz}, s.config);
    for (const auto& i : r.images) {
        r.max_image_dbc_before = std::max(r.max_image_dbc_before, i.dbc_before);
        r.max_image_dbc_after = std::max(r.max_image_dbc_after, i.dbc_after);
    }
    return r;
}

/// Measured profile for a scenario: wideband table or single-point snapshot.
inline MismatchProfile calibrate(const Scenario& s) {
    const auto meas = measure_plan(s.calibration.plan, s.config, s.truth);
    if (!s.calibration.narrowband) return build_profile(meas, s.config);
    std::vector<MismatchPoint> pts;
    for (const auto& c : meas.front().channels) pts.push_back({c.gain_rel, c.dt_s, c.offset_lsb});
    return MismatchProfile::constant(pts, s.config.fs);
}

/// Runs calibrate -> design -> (simulate -> correct -> analyze) per sweep tone.
/// Sweep tones run concurrently; results are ordered by frequency.
inline PipelineResult run_pipeline(const Scenario& s) {
    PipelineResult res;
    res.measured = in_stage("calibration", [&] { return calibrate(s); });
    in_stage("design", [&] {
        if (auto w = coverage_warning(res.measured, s.config, s.design.zone); !w.empty()) res.warnings.push_back(w);
        res.bank = design_filter_bank(res.measured, s.config, s.design);
        res.residuals = pr_residual(res.bank, res.measured, s.config, 512);
    });

    const auto freqs = detail::linspace(s.sweep.f_lo_hz, s.sweep.f_hi_hz, s.sweep.n_tones);
    res.sweep = in_stage("sweep", [&] {
        std::vector<ToneResult> out(freqs.size());
        const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(8, std::thread::hardware_concurrency()));
        std::vector<std::future<void>> jobs;
        for (std::size_t w = 0; w < workers; ++w)
            jobs.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t i = w; i < freqs.size(); i += workers)
                    out[i] = run_tone(freqs[i], s, res.measured, res.bank, s.seed + i);
            }));
        for (auto& j : jobs) j.get();
        std::sort(out.begin(), out.end(), [](const ToneResult& a, const ToneResult& b) { return a.f_in_hz < b.f_in_hz; });
        return out;
    });

    if (!s.two_tone_hz.empty())
        res.two_tone = in_stage("two_tone", [&] {
            ToneSpec t;
            std::vector<double> fs_;
            for (double f : s.two_tone_hz) {
                const double fc = coherent_bin(f, s.config.fs, s.sweep.n_fft).freq_hz;
                t.tones.push_back({s.two_tone_amplitude_v, fc, s.sweep.phase_rad});
                fs_.push_back(fc);
            }
            const auto [raw, cor] = run_capture(t, s, res.measured, res.bank, s.seed + freqs.size());
            return detail::image_changes(spectrum(raw, s.sweep.n_fft, s.sweep.window),
                                         spectrum(cor, s.sweep.n_fft, s.sweep.window), fs_, s.config);
        });

    char buf[256];
    const auto& th = s.thresholds;
    for (const auto& r : res.sweep) {
        const double gain = r.after.enob_bits - r.before.enob_bits;
        if (r.min_image_drop_db() < th.min_image_drop_db) {
            std::snprintf(buf, sizeof buf, "f_in=%.9g Hz: image drop %.2f dB < %.2f dB", r.f_in_hz,
                          r.min_image_drop_db(), th.min_image_drop_db);
            res.violations.push_back(buf);
        }
        if (gain < th.min_enob_gain_bits) {
            std::snprintf(buf, sizeof buf, "f_in=%.9g Hz: ENOB gain %.3f bits < %.3f bits", r.f_in_hz, gain,
                          th.min_enob_gain_bits);
            res.violations.push_back(buf);
        }
        if (r.after.enob_bits < th.min_enob_after_bits) {
            std::snprintf(buf, sizeof buf, "f_in=%.9g Hz: ENOB after %.3f bits < %.3f bits", r.f_in_hz,
                          r.after.enob_bits, th.min_enob_after_bits);
            res.violations.push_back(buf);
        }
    }
    for (const auto& i : res.two_tone)
        if (i.drop_db() < th.min_image_drop_db) {
            std::snprintf(buf, sizeof buf, "two-tone %.9g Hz image k=%d at %.9g Hz: drop %.2f dB < %.2f dB",
                          i.tone_hz, i.k, i.freq_hz, i.drop_db(), th.min_image_drop_db);
            res.violations.push_back(buf);
        }
    return res;
}

/// Writes every artifact of a run into `dir`.
inline void write_pipeline_outputs(const std::filesystem::path& dir, const Scenario& s, const PipelineResult& r) {
    using io::num;
    io::write_profile(dir / "truth_profile.csv", s.truth);
    io::write_plan(dir / "calibration_plan.csv", s.calibration.plan);
    io::write_profile(dir / "measured_profile.csv", r.measured);
    io::write_bank(dir / "bank.csv", r.bank);
    io::write_residuals(dir / "residuals.csv", r.residuals);
    {
        const auto p = dir / "summary.csv";
        auto f = io::open_out(p);
        f << "f_in_hz,enob_before,enob_after,max_image_dbc_before,max_image_dbc_after\n";
        for (const auto& t : r.sweep)
            f << num(t.f_in_hz) << ',' << num(t.before.enob_bits) << ',' << num(t.after.enob_bits) << ','
              << num(t.max_image_dbc_before) << ',' << num(t.max_image_dbc_after) << '\n';
        io::finish(f, p);
    }
    auto write_images = [&](const std::filesystem::path& p, const std::vector<ImageChange>& v) {
        auto f = io::open_out(p);
        f << "tone_hz,k,freq_hz,dbc_before,dbc_after,drop_db\n";
        for (const auto& i : v)
            f << num(i.tone_hz) << ',' << i.k << ',' << num(i.freq_hz) << ',' << num(i.dbc_before) << ','
              << num(i.dbc_after) << ',' << num(i.drop_db()) << '\n';
        io::finish(f, p);
    };
    std::vector<ImageChange> all;
    for (const auto& t : r.sweep) all.insert(all.end(), t.images.begin(), t.images.end());
    write_images(dir / "images.csv", all);
    if (!r.two_tone.empty()) write_images(dir / "two_tone_images.csv", r.two_tone);
    for (std::size_t i = 0; i < r.sweep.size(); ++i) {
        const std::string stem = "tone" + std::to_string(i);
        io::write_spectrum(dir / "spectra" / (stem + "_before.csv"), r.sweep[i].before);
        io::write_spectrum(dir / "spectra" / (stem + "_after.csv"), r.sweep[i].after);
        io::write_spurs(dir / "spectra" / (stem + "_spurs_after.csv"), r.sweep[i].after);
    }
}

} // namespace tiadc
