// tiadc — simulate, calibrate, design, correct and analyze interleaved ADC captures.
//
// Exit codes: 0 ok, 1 scenario thresholds violated, 2 validation, 3 file I/O,
// 4 singular design, 5 unreliable measurement, 6 anything else.
// Errors are one line on stderr: "error[<kind>]: <stage>: <message>".

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tiadc/tiadc.hpp"

namespace fs = std::filesystem;
using namespace tiadc;

namespace {

struct Globals {
    std::string config;
    std::string out_dir;
    long long seed = -1;
};

int exit_code(const std::string& kind) {
    if (kind == "validation") return 2;
    if (kind == "io") return 3;
    if (kind == "singular-design") return 4;
    if (kind == "unreliable-measurement") return 5;
    return 6;
}

int fail(const std::string& kind, const std::string& stage, const std::string& msg) {
    std::string one = msg;
    for (auto& c : one)
        if (c == '\n' || c == '\r') c = ' ';
    std::fprintf(stderr, "error[%s]: %s: %s\n", kind.c_str(), stage.c_str(), one.c_str());
    return exit_code(kind);
}

void warn(const std::string& msg) { std::fprintf(stderr, "warning: %s\n", msg.c_str()); }

fs::path out_path(const Globals& g, const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() || g.out_dir.empty() ? q : fs::path(g.out_dir) / q;
}

TiadcConfig load_config(const Globals& g) { return g.config.empty() ? TiadcConfig{} : read_config(g.config); }

MismatchProfile load_profile(const std::string& what, const TiadcConfig& cfg) {
    if (what == "ideal") return MismatchProfile::ideal(cfg.m_channels, cfg.fs);
    if (what == "synthetic") return smooth_profile(cfg);
    return io::read_profile(what);
}

Tone parse_tone(const std::string& s) {
    const auto c = io::split(s);
    require(c.size() == 2 || c.size() == 3, "tone must be 'amplitude_v,freq_hz[,phase_rad]': '" + s + "'");
    return {io::parse_double(c[0], "tone"), io::parse_double(c[1], "tone"),
            c.size() == 3 ? io::parse_double(c[2], "tone") : 0.0};
}

void print_metrics(const SpectrumReport& r) {
    std::printf("fundamental_hz=%.9g fundamental_dbfs=%.3f\n", r.freq_hz[r.fundamental_bin], r.fundamental_dbfs);
    std::printf("snr_db=%.3f sinad_db=%.3f thd_db=%.3f sfdr_db=%.3f enob_bits=%.4f\n", r.snr_db, r.sinad_db, r.thd_db,
                r.sfdr_db, r.enob_bits);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-interleaved ADC mismatch simulation and correction"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "converter configuration (JSON)");
    app.add_option("--out-dir", g.out_dir, "directory for relative output paths");
    app.add_option("--seed", g.seed, "RNG seed for noise injection");

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate an interleaved capture");
    std::string sim_profile = "ideal", sim_out;
    std::vector<std::string> sim_tones;
    double sim_dc = 0.0, sim_noise = 0.0;
    std::size_t sim_n = 8192;
    sim->add_option("--profile", sim_profile, "profile CSV, 'ideal' or 'synthetic'");
    sim->add_option("--tone", sim_tones, "amplitude_v,freq_hz[,phase_rad] (repeatable)")->required();
    sim->add_option("--dc", sim_dc, "DC input [V]");
    sim->add_option("-n,--samples", sim_n, "capture length");
    sim->add_option("--noise-rms", sim_noise, "additive white noise [V rms]");
    sim->add_option("-o,--out", sim_out, "capture file")->required();

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "measure a mismatch profile from a calibration plan");
    std::string cal_plan, cal_truth = "synthetic", cal_captures, cal_out;
    cal->add_option("--plan", cal_plan, "calibration plan CSV")->required();
    cal->add_option("--truth", cal_truth, "profile to simulate against: CSV, 'ideal' or 'synthetic'");
    cal->add_option("--captures", cal_captures, "ingest cal_<i>.f64 captures from this directory instead");
    cal->add_option("-o,--out", cal_out, "profile CSV")->required();

    // design
    auto* des = app.add_subcommand("design", "design the correction filter bank");
    std::string des_profile, des_window = "kaiser:8", des_out, des_res;
    DesignSpec spec;
    des->add_option("--profile", des_profile, "measured profile CSV")->required();
    des->add_option("-N,--n-grid", spec.n_grid, "DFT grid size");
    des->add_option("-L,--taps", spec.taps, "filter length (odd)");
    des->add_option("-d,--delay", spec.delay_d, "group delay in samples (default (L-1)/2)");
    des->add_option("--window", des_window, "none | hann | blackman | kaiser[:beta]");
    des->add_option("--zone", spec.zone, "Nyquist zone (1 or 2)");
    des->add_option("-o,--out", des_out, "bank CSV")->required();
    des->add_option("--residuals", des_res, "residual report CSV (default <out>.residuals.csv)");

    // correct
    auto* cor = app.add_subcommand("correct", "apply offset correction and the filter bank");
    std::string cor_in, cor_bank, cor_profile, cor_out;
    cor->add_option("--capture", cor_in, "input capture")->required();
    cor->add_option("--bank", cor_bank, "bank CSV")->required();
    cor->add_option("--profile", cor_profile, "profile CSV supplying the offsets")->required();
    cor->add_option("-o,--out", cor_out, "corrected capture")->required();

    // analyze
    auto* ana = app.add_subcommand("analyze", "spectrum, dynamic metrics and image spurs");
    std::string ana_in, ana_window = "none", ana_prefix;
    std::size_t ana_nfft = 8192;
    double ana_fund = 0.0;
    ana->add_option("--capture", ana_in, "capture to analyze")->required();
    ana->add_option("--n-fft", ana_nfft, "FFT length");
    ana->add_option("--window", ana_window, "none | hann | blackman | kaiser[:beta]");
    ana->add_option("--f-fund", ana_fund, "fundamental frequency [Hz]")->required();
    ana->add_option("-o,--out", ana_prefix, "output prefix")->required();

    // pipeline
    auto* pip = app.add_subcommand("pipeline", "run a scenario end to end");
    std::string pip_scenario;
    pip->add_option("scenario", pip_scenario, "scenario JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("validation", "arguments", e.what());
    }

    std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (*sim) {
            const auto cfg = load_config(g);
            const auto profile = load_profile(sim_profile, cfg);
            ToneSpec tones;
            for (const auto& t : sim_tones) tones.tones.push_back(parse_tone(t));
            tones.dc = sim_dc;
            if (!tones.clip_free(cfg)) warn("tone amplitudes plus dc exceed full_scale/2; the capture may clip");
            auto cap = simulate(tones, cfg, profile, sim_n);
            if (sim_noise > 0.0) {
                std::mt19937_64 rng(static_cast<std::uint64_t>(g.seed < 0 ? 1 : g.seed));
                std::normal_distribution<double> nd(0.0, sim_noise);
                for (auto& v : cap.samples) v += nd(rng);
            }
            io::write_capture(out_path(g, sim_out), cap);
            std::printf("simulated n=%zu fs=%.9g M=%d tones=", cap.size(), cfg.fs, cfg.m_channels);
            for (std::size_t i = 0; i < tones.tones.size(); ++i)
                std::printf("%s%.6g V@%.9g Hz", i ? "," : "", tones.tones[i].amplitude, tones.tones[i].freq_hz);
            std::printf("\n");
        } else if (*cal) {
            const auto cfg = load_config(g);
            const auto plan = io::read_plan(cal_plan);
            require(plan.size() >= 2, "at least two calibration frequencies are required");
            std::vector<MismatchMeasurement> meas;
            if (cal_captures.empty()) {
                meas = measure_plan(plan, cfg, load_profile(cal_truth, cfg));
            } else {
                for (std::size_t i = 0; i < plan.size(); ++i) {
                    const fs::path p = fs::path(cal_captures) / ("cal_" + std::to_string(i) + ".f64");
                    if (!fs::exists(p)) throw IoError("missing calibration capture '" + p.string() + "'");
                    const auto cap = io::read_capture(p);
                    require(cap.config.m_channels == cfg.m_channels && cap.config.fs == cfg.fs,
                            p.string() + ": capture configuration differs from --config");
                    meas.push_back(estimate_mismatch_at(cap, plan[i].freq_hz, cfg));
                }
            }
            const auto profile = build_profile(meas, cfg);
            io::write_profile(out_path(g, cal_out), profile);
            std::printf("calibrated %zu frequencies, %d channels\n", meas.size(), cfg.m_channels);
        } else if (*des) {
            const auto cfg = load_config(g);
            spec.window = Window::parse(des_window);
            const auto profile = io::read_profile(des_profile);
            if (auto w = coverage_warning(profile, cfg, spec.zone); !w.empty()) warn(w);
            const auto bank = design_filter_bank(profile, cfg, spec);
            const auto rep = pr_residual(bank, profile, cfg, 512);
            const auto bank_path = out_path(g, des_out);
            io::write_bank(bank_path, bank);
            io::write_residuals(des_res.empty() ? fs::path(bank_path.string() + ".residuals.csv") : out_path(g, des_res),
                                rep);
            std::printf("bank %s: M=%d L=%zu N=%zu d=%zu zone=%d window=%s\n", bank.id().c_str(), bank.m_channels,
                        bank.length(), spec.n_grid, spec.delay(), spec.zone, spec.window.name().c_str());
            std::printf("max_residual_alias=%.6g max_residual_alias_inband=%.6g max_residual_k0=%.6g\n",
                        rep.max_residual_alias, rep.max_residual_alias_inband, rep.max_residual_k0);
        } else if (*cor) {
            const auto cap = io::read_capture(cor_in);
            const auto bank = io::read_bank(cor_bank);
            const auto profile = io::read_profile(cor_profile);
            require(bank.fs == cap.config.fs, "bank was designed for a different sample rate");
            const auto out = correct(correct_offsets(cap, profile), bank);
            io::write_capture(out_path(g, cor_out), out);
            std::printf("corrected n=%zu bank=%s transient_samples=%zu\n", out.size(), out.bank_id.c_str(),
                        out.transient_samples);
        } else if (*ana) {
            const auto cap = io::read_capture(ana_in);
            const auto rep = dynamic_metrics(spectrum(cap, ana_nfft, Window::parse(ana_window)), ana_fund,
                                             cap.config.m_channels);
            io::write_spectrum(out_path(g, ana_prefix + "_spectrum.csv"), rep);
            io::write_spurs(out_path(g, ana_prefix + "_spurs.csv"), rep);
            print_metrics(rep);
            for (const auto& s : image_spur_levels(rep, ana_fund, cap.config.fs, cap.config.m_channels))
                std::printf("image k=%d freq_hz=%.9g dbc=%.2f%s\n", s.k, s.freq_hz, s.dbc,
                            s.collision ? " collision" : "");
        } else if (*pip) {
            stage = "scenario";
            auto sc = read_scenario(pip_scenario);
            if (g.seed >= 0) sc.seed = static_cast<std::uint64_t>(g.seed);
            const fs::path dir = g.out_dir.empty() ? fs::path("out") / sc.name : fs::path(g.out_dir);
            const auto res = run_pipeline(sc);
            for (const auto& w : res.warnings) warn(w);
            stage = "outputs";
            write_pipeline_outputs(dir, sc, res);
            std::printf("%-14s %11s %11s %13s %13s %10s\n", "f_in_hz", "enob_before", "enob_after", "image_before",
                        "image_after", "min_drop");
            for (const auto& t : res.sweep)
                std::printf("%-14.9g %11.3f %11.3f %13.2f %13.2f %10.2f\n", t.f_in_hz, t.before.enob_bits,
                            t.after.enob_bits, t.max_image_dbc_before, t.max_image_dbc_after, t.min_image_drop_db());
            if (!res.two_tone.empty()) {
                double worst = INFINITY;
                for (const auto& i : res.two_tone) worst = std::min(worst, i.drop_db());
                std::printf("two-tone: %zu images, min drop %.2f dB\n", res.two_tone.size(), worst);
            }
            std::printf("outputs in %s\n", dir.string().c_str());
            if (!res.violations.empty()) {
                for (const auto& v : res.violations) std::fprintf(stderr, "violation: %s\n", v.c_str());
                std::fprintf(stderr, "error[threshold]: pipeline: %zu threshold violation(s)\n", res.violations.size());
                return 1;
            }
        }
    } catch (const StageError& e) {
        return fail(e.kind(), e.stage(), e.what());
    } catch (const Error& e) {
        return fail(e.kind(), stage, e.what());
    } catch (const std::exception& e) {
        return fail("error", stage, e.what());
    }
    return 0;
}
