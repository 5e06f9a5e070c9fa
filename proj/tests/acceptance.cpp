// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "tiadc/tiadc.hpp"

using namespace tiadc;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(TIADC_SOURCE_DIR) / "scenarios";

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& what) {
        if (!cond && ok) detail = what; // keep the first failure
        ok = ok && cond;
    }
};

std::string fmt(const char* f, auto... a) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, a...);
    return buf;
}

double dbfs_of_line(const PredictedLine& l, const TiadcConfig& c) {
    const bool edge = l.freq_hz == 0.0 || l.freq_hz == c.fs / 2;
    const double p = edge ? l.amplitude * l.amplitude : l.amplitude * l.amplitude / 2;
    const double ref = c.full_scale * c.full_scale / 8;
    return 10 * std::log10(p / ref);
}

// ---- 1 ------------------------------------------------------------------------

Check oracle_agreement() {
    Check r;
    TiadcConfig c;
    c.quantize = false;
    const auto p = smooth_profile(c);
    const std::size_t N = 8192;
    double worst = 0;
    std::size_t lines = 0;
    for (double target : {97e6, 170e6, 433e6, 611e6}) {
        const auto ct = coherent_bin(target, c.fs, N);
        const ToneSpec t{{{0.9, ct.freq_hz, 0.4}}, 0.0};
        const auto rep = spectrum(simulate(t, c, p, N), N, Window{});
        std::set<std::size_t> predicted;
        for (const auto& l : predict_output_spectrum(t, c, p, 1)) {
            const std::size_t b = rep.bin_of(l.freq_hz);
            predicted.insert(b);
            const double want = dbfs_of_line(l, c);
            if (want < -120) continue;
            const double err = std::abs(rep.power_dbfs[b] - want);
            worst = std::max(worst, err);
            ++lines;
            r.expect(err <= 0.5, fmt("%.6g Hz tone: line at %.6g Hz off by %.3f dB", ct.freq_hz, l.freq_hz, err));
        }
        // and nothing unpredicted rises above the floor
        for (std::size_t b = 0; b < rep.power_dbfs.size(); ++b)
            if (!predicted.count(b))
                r.expect(rep.power_dbfs[b] < -120,
                         fmt("unpredicted bin %zu at %.1f dBFS", b, rep.power_dbfs[b]));
    }
    if (r.ok) r.detail = fmt("%zu lines, worst %.2e dB", lines, worst);
    return r;
}

// ---- 2 ------------------------------------------------------------------------

// Direct DFT of one bin, normalized to the sine amplitude.
double bin_amplitude(const std::vector<double>& x, std::size_t k) {
    const std::size_t N = x.size();
    double re = 0, im = 0;
    for (std::size_t n = 0; n < N; ++n) {
        const double a = kTwoPi * static_cast<double>((k * n) % N) / N;
        re += x[n] * std::cos(a);
        im -= x[n] * std::sin(a);
    }
    return 2 * std::hypot(re, im) / N;
}

Check two_channel_closed_form() {
    Check r;
    TiadcConfig c;
    c.m_channels = 2;
    c.quantize = false;
    const std::size_t N = 8192;
    const auto ct = coherent_bin(130e6, c.fs, N);
    const auto p = MismatchProfile::constant({{1.0, 0, 0}, {1.02, 0, 0}}, c.fs);
    const auto cap = simulate(ToneSpec{{{0.9, ct.freq_hz, 0.2}}, 0}, c, p, N);

    const std::size_t kf = static_cast<std::size_t>(ct.cycles), ki = N / 2 - kf;
    const double direct = 20 * std::log10(bin_amplitude(cap.samples, ki) / bin_amplitude(cap.samples, kf));

    double via_spectrum = NAN;
    for (const auto& s : image_spur_levels(spectrum(cap, N, Window{}), ct.freq_hz, c.fs, 2)) via_spectrum = s.dbc;

    r.expect(std::abs(direct + 40.04) <= 0.1, fmt("direct DFT image %.3f dBc", direct));
    r.expect(std::abs(via_spectrum + 40.04) <= 0.1, fmt("analyzer image %.3f dBc", via_spectrum));
    r.expect(std::abs(direct - via_spectrum) <= 1e-6, "analyzer disagrees with direct DFT");
    r.detail = fmt("image %.4f dBc (direct %.4f)", via_spectrum, direct);
    return r;
}

// ---- 3 ------------------------------------------------------------------------

Check closed_form_filters() {
    Check r;
    TiadcConfig c;
    DesignSpec s;
    const std::size_t d = s.delay();
    double worst = 0;
    auto compare = [&](const MismatchProfile& p, const std::vector<double>& g, int zone) {
        s.zone = zone;
        const auto h = branch_impulse_responses(p, c, s);
        for (std::size_t m = 0; m < g.size(); ++m)
            for (std::size_t n = 0; n < s.n_grid; ++n) {
                const double want = n == d + m ? 1.0 / g[m] : 0.0;
                const double err = std::abs(h[m][n] - cplx(want, 0));
                worst = std::max(worst, err);
                r.expect(err <= 1e-9, fmt("zone %d branch %zu tap %zu error %.2e", zone, m, n, err));
            }
    };
    const std::vector<double> ones(4, 1.0), g = {1.0, 0.98, 1.013, 1.004};
    std::vector<MismatchPoint> pts;
    for (double v : g) pts.push_back({v, 0, 0});
    for (int zone : {1, 2}) {
        compare(MismatchProfile::ideal(4, c.fs), ones, zone);
        compare(MismatchProfile::constant(pts, c.fs), g, zone);
    }
    if (r.ok) r.detail = fmt("max tap error %.2e", worst);
    return r;
}

// ---- 4 / 5 / 6 / 7 ------------------------------------------------------------

struct SweepOutcome {
    Scenario scenario;
    PipelineResult result;
};

SweepOutcome run_scenario(const std::string& file) {
    auto s = read_scenario(kScenarios / file);
    auto res = run_pipeline(s);
    return {std::move(s), std::move(res)};
}

void sweep_properties(Check& r, const PipelineResult& res, double lo, double hi) {
    double worst_drop = INFINITY, worst_gain = INFINITY, worst_enob = INFINITY;
    r.expect(res.sweep.size() == 20, fmt("%zu swept tones", res.sweep.size()));
    for (const auto& t : res.sweep) {
        const double gain = t.after.enob_bits - t.before.enob_bits;
        r.expect(t.f_in_hz > lo && t.f_in_hz < hi, fmt("tone %.6g Hz outside the sweep band", t.f_in_hz));
        r.expect(t.images.size() == 3, fmt("%.6g Hz: %zu images tracked", t.f_in_hz, t.images.size()));
        r.expect(t.min_image_drop_db() >= 30.0, fmt("%.6g Hz: image drop %.2f dB", t.f_in_hz, t.min_image_drop_db()));
        r.expect(gain >= 2.0, fmt("%.6g Hz: ENOB gain %.3f", t.f_in_hz, gain));
        r.expect(t.after.enob_bits >= 13.0, fmt("%.6g Hz: ENOB after %.3f", t.f_in_hz, t.after.enob_bits));
        worst_drop = std::min(worst_drop, t.min_image_drop_db());
        worst_gain = std::min(worst_gain, gain);
        worst_enob = std::min(worst_enob, t.after.enob_bits);
    }
    if (r.ok)
        r.detail = fmt("20 tones, min drop %.1f dB, min ENOB gain %.2f bits, min ENOB after %.2f bits", worst_drop,
                       worst_gain, worst_enob);
}

void design_matches(Check& r, const Scenario& s, int zone) {
    r.expect(s.design.n_grid == 1024 && s.design.taps == 65 && s.design.window.kind == WindowKind::kaiser &&
                 s.design.window.beta == 8.0 && s.design.zone == zone,
             "scenario bank is not N=1024, L=65, Kaiser 8");
    r.expect(s.calibration.plan.size() == 16 && !s.calibration.narrowband, "scenario is not a 16-point calibration");
    r.expect(s.config.bits == 14 && s.config.quantize, "scenario does not quantize to 14 bits");
}

Check wideband_zone1(const SweepOutcome& o) {
    Check r;
    design_matches(r, o.scenario, 1);
    const double half = o.scenario.config.fs / 2;
    sweep_properties(r, o.result, 0.02 * half - 1e6, 0.9 * half + 1e6);
    return r;
}

Check two_tone(const SweepOutcome& o) {
    Check r;
    r.expect(o.scenario.two_tone_hz.size() == 2, "scenario has no two-tone test");
    std::set<double> tones;
    double worst = INFINITY;
    for (const auto& i : o.result.two_tone) {
        tones.insert(i.tone_hz);
        worst = std::min(worst, i.drop_db());
        r.expect(i.drop_db() >= 30.0, fmt("tone %.6g Hz image k=%d: drop %.2f dB", i.tone_hz, i.k, i.drop_db()));
    }
    r.expect(tones.size() == 2, "images of both tones were not tracked");
    if (r.ok) r.detail = fmt("%zu images, min drop %.1f dB", o.result.two_tone.size(), worst);
    return r;
}

Check zone2(const SweepOutcome& o) {
    Check r;
    design_matches(r, o.scenario, 2);
    const double fs = o.scenario.config.fs;
    sweep_properties(r, o.result, 0.55 * fs, 0.95 * fs);
    return r;
}

Check narrowband_contrast() {
    Check r;
    const auto s = read_scenario(kScenarios / "narrowband_contrast.json");
    r.expect(s.calibration.narrowband && s.calibration.plan.size() == 1, "scenario is not a single-point snapshot");
    const auto res = run_pipeline(s);
    const double f_design = s.calibration.plan.front().freq_hz;
    const auto at_design = run_tone(f_design, s, res.measured, res.bank, s.seed);
    r.expect(at_design.min_image_drop_db() >= 30.0,
             fmt("drop at the design frequency only %.2f dB", at_design.min_image_drop_db()));
    std::size_t failing = 0;
    double worst = INFINITY;
    for (const auto& t : res.sweep)
        if (t.f_in_hz > s.config.fs / 4) {
            failing += t.min_image_drop_db() < 30.0;
            worst = std::min(worst, t.min_image_drop_db());
        }
    r.expect(failing >= 1, "every upper-half tone still meets the 30 dB bound");
    if (r.ok)
        r.detail = fmt("design %.6g Hz drop %.1f dB; %zu upper-half tones below 30 dB (worst %.1f dB)", f_design,
                       at_design.min_image_drop_db(), failing, worst);
    return r;
}

// ---- 8 ------------------------------------------------------------------------

Check calibration_round_trip() {
    Check r;
    TiadcConfig c;
    c.quantize = false;
    const auto truth = smooth_profile(c);
    double eg = 0, et = 0;
    for (int zone : {1, 2}) {
        std::vector<CalibrationPoint> plan;
        const double base = (zone - 1) * c.fs / 2;
        for (int i = 0; i < 16; ++i)
            plan.push_back({coherent_bin(base + (0.01 + 0.98 * i / 15) * c.fs / 2, c.fs, 4096).freq_hz, 0.9, 4096});
        const auto prof = build_profile(measure_plan(plan, c, truth), c);
        for (const auto& p : plan)
            for (std::size_t m = 0; m < 4; ++m) {
                // the measured profile is relative to channel 0
                const auto t = truth.at(m, p.freq_hz), ref = truth.at(0, p.freq_hz), e = prof.at(m, p.freq_hz);
                eg = std::max(eg, std::abs(e.gain - t.gain / ref.gain));
                et = std::max(et, std::abs(e.dt_s - (t.dt_s - ref.dt_s)));
            }
    }
    r.expect(eg <= 1e-3, fmt("gain error %.3e", eg));
    r.expect(et <= 0.1e-12, fmt("timing error %.3e s", et));
    if (r.ok) r.detail = fmt("32 points, max gain error %.2e, max timing error %.2e ps", eg, et * 1e12);
    return r;
}

// ---- 9 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ostringstream s;
    s << std::ifstream(p, std::ios::binary).rdbuf();
    return s.str();
}

Check invariants() {
    Check r;
    std::mt19937_64 rng(2024);

    // k-set: M members, one per residue class, each inside its zone interval
    std::uniform_real_distribution<double> ux(0.0, 0.5);
    std::size_t ksets = 0;
    for (int M : {2, 3, 4, 8})
        for (int zone : {1, 2})
            for (int i = 0; i < 10000; ++i) {
                const double x = ux(rng);
                const auto ks = k_set_cycles(x, M, zone);
                std::set<int> residues;
                for (int k : ks) residues.insert(((k % M) + M) % M);
                r.expect(ks.size() == static_cast<std::size_t>(M) && residues.size() == ks.size(),
                         fmt("k-set at x=%.17g M=%d zone %d", x, M, zone));
                ++ksets;
            }

    TiadcConfig c;
    const auto bank = design_filter_bank(smooth_profile(c), c, DesignSpec{});
    auto noise = [&](std::size_t n) {
        Capture x;
        x.config = c;
        std::uniform_real_distribution<double> u(-1, 1);
        for (std::size_t i = 0; i < n; ++i) x.samples.push_back(u(rng));
        return x;
    };

    // linearity
    {
        const auto a = noise(1024), b = noise(1024);
        Capture w = a;
        for (std::size_t n = 0; n < w.size(); ++n) w.samples[n] = 0.3 * a.samples[n] - 2.1 * b.samples[n];
        const auto ya = correct(a, bank), yb = correct(b, bank), yw = correct(w, bank);
        double err = 0, scale = 0;
        for (std::size_t n = 0; n < w.size(); ++n) {
            err = std::max(err, std::abs(yw.samples[n] - 0.3 * ya.samples[n] + 2.1 * yb.samples[n]));
            scale = std::max(scale, std::abs(yw.samples[n]));
        }
        r.expect(err <= 1e-9 * scale, fmt("linearity error %.2e", err / scale));
    }
    // shift by whole frames
    {
        const auto x = noise(1024);
        for (std::size_t sh : {4u, 8u, 64u}) {
            Capture s = x;
            s.samples.assign(sh, 0.0);
            s.samples.insert(s.samples.end(), x.samples.begin(), x.samples.end() - static_cast<long>(sh));
            const auto yx = correct(x, bank), ys = correct(s, bank);
            for (std::size_t n = sh; n < x.size(); ++n)
                r.expect(ys.samples[n] == yx.samples[n - sh], fmt("shift %zu differs at %zu", sh, n));
        }
    }
    // dense operator
    for (std::size_t N : {68u, 128u, 256u}) {
        const auto x = noise(N);
        const auto y = correct(x, bank);
        const std::size_t M = 4, L = bank.length();
        for (std::size_t n = 0; n < N; ++n) {
            double acc = 0;
            for (std::size_t j = 0; j < N; ++j) {
                const std::size_t m = j % M, start = j - m;
                if (n >= start && n - start < L) acc += bank.taps[m][n - start] * x.samples[j];
            }
            r.expect(std::abs(acc - y.samples[n]) <= 1e-12, fmt("dense operator differs at N=%zu n=%zu", N, n));
        }
    }
    // Parseval
    {
        const auto x = noise(4096);
        const auto rep = spectrum(x, 4096, Window{});
        double bins = 0, ms = 0;
        for (double v : rep.power) bins += v;
        for (double v : x.samples) ms += v * v;
        ms /= 4096;
        r.expect(std::abs(bins / ms - 1) <= 1e-9, fmt("Parseval ratio %.12f", bins / ms));
    }
    r.expect(enob_from_sinad(74.0) == 12.0, "ENOB(74 dB) != 12");

    // deterministic reruns
    {
        auto j = nlohmann::json::parse(std::ifstream(kScenarios / "wideband_zone1.json"));
        j["sweep"]["n_tones"] = 6;
        const auto s = scenario_from_json(j, kScenarios);
        const auto a = fs::temp_directory_path() / "tiadc_acceptance_a";
        const auto b = fs::temp_directory_path() / "tiadc_acceptance_b";
        fs::remove_all(a);
        fs::remove_all(b);
        write_pipeline_outputs(a, s, run_pipeline(s));
        write_pipeline_outputs(b, s, run_pipeline(s));
        std::size_t files = 0;
        for (const auto& e : fs::recursive_directory_iterator(a))
            if (e.is_regular_file()) {
                ++files;
                r.expect(slurp(e.path()) == slurp(b / fs::relative(e.path(), a)),
                         "rerun differs in " + fs::relative(e.path(), a).string());
            }
        r.expect(files > 10, "pipeline wrote too few files");
        fs::remove_all(a);
        fs::remove_all(b);
    }
    if (r.ok) r.detail = fmt("%zu k-sets, linearity, shift, dense, Parseval, ENOB, rerun", ksets);
    return r;
}

} // namespace

int main() {
    int failures = 0;
    auto report = [&](int n, const char* name, double limit_s, const std::function<Check()>& f, double shared_s = 0) {
        const auto t0 = std::chrono::steady_clock::now();
        Check c;
        try {
            c = f();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        const double dt = shared_s + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (dt > limit_s) {
            c.detail += fmt(" [runtime over %.0f s]", limit_s);
            c.ok = false;
        }
        failures += !c.ok;
        std::printf("%s criterion %d: %s: %s (%.2f s)\n", c.ok ? "PASS" : "FAIL", n, name, c.detail.c_str(), dt);
        std::fflush(stdout);
    };

    report(1, "spectrum oracle agreement", 5, oracle_agreement);
    report(2, "two-channel closed form", 1, two_channel_closed_form);
    report(3, "closed-form filter solutions", 5, closed_form_filters);

    SweepOutcome z1;
    double z1_time = 0;
    {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            z1 = run_scenario("wideband_zone1.json");
        } catch (const std::exception& e) {
            std::fprintf(stderr, "wideband_zone1: %s\n", e.what());
        }
        z1_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    // the scenario run covers both the sweep and the two-tone capture
    report(4, "wideband zone-1 correction", 60, [&] { return wideband_zone1(z1); }, z1_time);
    report(5, "two-tone correction", 10, [&] { return two_tone(z1); }, z1_time);
    report(6, "under-sampling zone-2 correction", 60, [] { return zone2(run_scenario("undersampling_zone2.json")); });
    report(7, "narrowband vs wideband contrast", 60, narrowband_contrast);
    report(8, "calibration round trip", 10, calibration_round_trip);
    report(9, "invariant suites", 30, invariants);

    std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
