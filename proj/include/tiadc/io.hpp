#pragma once

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tiadc/calibration.hpp"
#include "tiadc/capture.hpp"
#include "tiadc/filter_design.hpp"
#include "tiadc/metrics.hpp"
#include "tiadc/profile.hpp"

namespace tiadc::io {

namespace fs = std::filesystem;

/// %.17g, so doubles survive a text round trip bit for bit.
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    const auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size()) throw ValidationError(where + ": not a number: '" + t + "'");
    return v;
}

inline long parse_long(const std::string& s, const std::string& where) {
    const std::string t = trim(s);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (t.empty() || end != t.c_str() + t.size()) throw ValidationError(where + ": not an integer: '" + t + "'");
    return v;
}

inline std::ifstream open_in(const fs::path& p, bool binary = false) {
    std::ifstream f(p, binary ? std::ios::binary : std::ios::in);
    if (!f) throw IoError("cannot open '" + p.string() + "' for reading");
    return f;
}

inline std::ofstream open_out(const fs::path& p, bool binary = false) {
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::ofstream f(p, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!f) throw IoError("cannot open '" + p.string() + "' for writing");
    return f;
}

inline void finish(std::ofstream& f, const fs::path& p) {
    f.flush();
    if (!f) throw IoError("write to '" + p.string() + "' failed");
}

/// Data lines of a CSV file; blank lines and '#' comments are skipped and the
/// header is checked against `header`.
inline std::vector<std::pair<std::size_t, std::vector<std::string>>> read_csv(const fs::path& p,
                                                                             const std::string& header) {
    auto f = open_in(p);
    std::string line;
    std::size_t lineno = 0;
    bool seen_header = false;
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    while (std::getline(f, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (!seen_header) {
            if (line != header) throw ValidationError(p.string() + ": expected header '" + header + "'");
            seen_header = true;
            continue;
        }
        rows.emplace_back(lineno, split(line));
    }
    if (!seen_header) throw ValidationError(p.string() + ": missing header '" + header + "'");
    return rows;
}

// ---- mismatch profile -------------------------------------------------------

inline constexpr const char* kProfileHeader = "channel,freq_hz,gain,dt_s,offset_lsb";

inline void write_profile(const fs::path& p, const MismatchProfile& profile) {
    auto f = open_out(p);
    f << kProfileHeader << '\n';
    for (std::size_t m = 0; m < profile.channels(); ++m)
        for (const auto& r : profile.channel(m))
            f << m << ',' << num(r.freq_hz) << ',' << num(r.gain) << ',' << num(r.dt_s) << ',' << num(r.offset_lsb)
              << '\n';
    finish(f, p);
}

inline MismatchProfile read_profile(const fs::path& p) {
    std::vector<std::vector<MismatchRow>> table;
    for (const auto& [ln, c] : read_csv(p, kProfileHeader)) {
        const std::string where = p.string() + ":" + std::to_string(ln);
        if (c.size() != 5) throw ValidationError(where + ": expected 5 columns");
        const long m = parse_long(c[0], where);
        if (m < 0) throw ValidationError(where + ": negative channel index");
        if (static_cast<std::size_t>(m) != table.size() && static_cast<std::size_t>(m) + 1 != table.size())
            throw ValidationError(where + ": rows must be sorted by channel");
        if (static_cast<std::size_t>(m) == table.size()) table.emplace_back();
        table.back().push_back({parse_double(c[1], where), parse_double(c[2], where), parse_double(c[3], where),
                                parse_double(c[4], where)});
    }
    try {
        return MismatchProfile(std::move(table));
    } catch (const ValidationError& e) {
        throw ValidationError(p.string() + ": " + e.what());
    }
}

// ---- capture ----------------------------------------------------------------

/// Sidecar metadata lives next to the sample file as `<path>.json`.
inline fs::path sidecar_path(const fs::path& p) { return fs::path(p.string() + ".json"); }

inline void write_capture(const fs::path& p, const Capture& cap) {
    static_assert(sizeof(double) == 8);
    {
        auto f = open_out(p, true);
        for (double v : cap.samples) {
            unsigned char b[8];
            std::uint64_t u;
            std::memcpy(&u, &v, 8);
            for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i)); // little endian
            f.write(reinterpret_cast<const char*>(b), 8);
        }
        finish(f, p);
    }
    nlohmann::ordered_json j;
    j["fs_hz"] = cap.config.fs;
    j["m_channels"] = cap.config.m_channels;
    j["bits"] = cap.config.bits;
    j["full_scale_v"] = cap.config.full_scale;
    j["n"] = cap.samples.size();
    j["quantize"] = cap.config.quantize;
    j["corrected"] = cap.corrected;
    j["bank_id"] = cap.bank_id;
    j["transient_samples"] = cap.transient_samples;
    const auto sp = sidecar_path(p);
    auto f = open_out(sp);
    f << j.dump(2) << '\n';
    finish(f, sp);
}

inline Capture read_capture(const fs::path& p) {
    const auto sp = sidecar_path(p);
    nlohmann::json j;
    {
        auto f = open_in(sp);
        try {
            j = nlohmann::json::parse(f);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(sp.string() + ": " + e.what());
        }
    }
    Capture cap;
    std::size_t n = 0;
    try {
        cap.config.fs = j.at("fs_hz").get<double>();
        cap.config.m_channels = j.at("m_channels").get<int>();
        cap.config.bits = j.at("bits").get<int>();
        cap.config.full_scale = j.at("full_scale_v").get<double>();
        n = j.at("n").get<std::size_t>();
        cap.config.quantize = j.value("quantize", false);
        cap.corrected = j.value("corrected", false);
        cap.bank_id = j.value("bank_id", std::string{});
        cap.transient_samples = j.value("transient_samples", std::size_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(sp.string() + ": " + e.what());
    }
    auto f = open_in(p, true);
    cap.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        unsigned char b[8];
        if (!f.read(reinterpret_cast<char*>(b), 8))
            throw IoError(p.string() + ": expected " + std::to_string(n) + " samples, file is shorter");
        std::uint64_t u = 0;
        for (int k = 0; k < 8; ++k) u |= static_cast<std::uint64_t>(b[k]) << (8 * k);
        std::memcpy(&cap.samples[i], &u, 8);
    }
    if (f.peek() != std::char_traits<char>::eof())
        throw IoError(p.string() + ": file holds more than the " + std::to_string(n) + " samples in its sidecar");
    try {
        cap.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(p.string() + ": " + e.what());
    }
    return cap;
}

// ---- calibration plan -------------------------------------------------------

inline constexpr const char* kPlanHeader = "freq_hz,amplitude_v,n_samples";

inline std::vector<CalibrationPoint> read_plan(const fs::path& p) {
    std::vector<CalibrationPoint> plan;
    for (const auto& [ln, c] : read_csv(p, kPlanHeader)) {
        const std::string where = p.string() + ":" + std::to_string(ln);
        if (c.size() != 3) throw ValidationError(where + ": expected 3 columns");
        const long n = parse_long(c[2], where);
        if (n <= 0) throw ValidationError(where + ": n_samples must be positive");
        plan.push_back({parse_double(c[0], where), parse_double(c[1], where), static_cast<std::size_t>(n)});
    }
    return plan;
}

inline void write_plan(const fs::path& p, const std::vector<CalibrationPoint>& plan) {
    auto f = open_out(p);
    f << kPlanHeader << '\n';
    for (const auto& c : plan) f << num(c.freq_hz) << ',' << num(c.amplitude_v) << ',' << c.n_samples << '\n';
    finish(f, p);
}

// ---- filter bank ------------------------------------------------------------

inline constexpr const char* kBankHeader = "channel,tap_index,coefficient";

/// `key,value` header block, then one row per coefficient.
inline void write_bank(const fs::path& p, const FilterBank& bank) {
    auto f = open_out(p);
    f << "m_channels," << bank.m_channels << '\n'
      << "taps," << bank.length() << '\n'
      << "n_grid," << bank.spec.n_grid << '\n'
      << "delay_d," << bank.spec.delay() << '\n'
      << "zone," << bank.spec.zone << '\n'
      << "window," << bank.spec.window.name() << '\n'
      << "fs_hz," << num(bank.fs) << '\n'
      << "max_condition," << num(bank.spec.max_condition) << '\n'
      << kBankHeader << '\n';
    for (std::size_t m = 0; m < bank.taps.size(); ++m)
        for (std::size_t i = 0; i < bank.taps[m].size(); ++i) f << m << ',' << i << ',' << num(bank.taps[m][i]) << '\n';
    finish(f, p);
}

inline FilterBank read_bank(const fs::path& p) {
    auto f = open_in(p);
    std::map<std::string, std::string> meta;
    std::string line;
    std::size_t lineno = 0;
    bool in_rows = false;
    FilterBank bank;
    std::vector<std::vector<double>> taps;
    while (std::getline(f, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const std::string where = p.string() + ":" + std::to_string(lineno);
        if (!in_rows) {
            if (line == kBankHeader) {
                in_rows = true;
                continue;
            }
            const auto c = split(line);
            if (c.size() != 2) throw ValidationError(where + ": expected 'key,value' in the header block");
            meta[trim(c[0])] = trim(c[1]);
            continue;
        }
        const auto c = split(line);
        if (c.size() != 3) throw ValidationError(where + ": expected 3 columns");
        const long m = parse_long(c[0], where);
        const long i = parse_long(c[1], where);
        if (m < 0 || i < 0) throw ValidationError(where + ": negative index");
        if (static_cast<std::size_t>(m) >= taps.size()) taps.resize(static_cast<std::size_t>(m) + 1);
        auto& b = taps[static_cast<std::size_t>(m)];
        if (static_cast<std::size_t>(i) != b.size()) throw ValidationError(where + ": taps must be listed in order");
        b.push_back(parse_double(c[2], where));
    }
    if (!in_rows) throw ValidationError(p.string() + ": missing '" + std::string(kBankHeader) + "' header");
    auto get = [&](const char* k) -> const std::string& {
        auto it = meta.find(k);
        if (it == meta.end()) throw ValidationError(p.string() + ": header block lacks '" + k + "'");
        return it->second;
    };
    const std::string where = p.string();
    bank.m_channels = static_cast<int>(parse_long(get("m_channels"), where));
    bank.spec.taps = static_cast<std::size_t>(parse_long(get("taps"), where));
    bank.spec.n_grid = static_cast<std::size_t>(parse_long(get("n_grid"), where));
    bank.spec.delay_d = parse_long(get("delay_d"), where);
    bank.spec.zone = static_cast<int>(parse_long(get("zone"), where));
    bank.spec.window = Window::parse(get("window"));
    bank.fs = parse_double(get("fs_hz"), where);
    if (meta.count("max_condition")) bank.spec.max_condition = parse_double(meta["max_condition"], where);
    bank.taps = std::move(taps);
    try {
        bank.spec.validate();
        bank.validate();
        require(bank.length() == bank.spec.taps, "tap count disagrees with the header block");
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    }
    return bank;
}

// ---- reports ----------------------------------------------------------------

inline void write_residuals(const fs::path& p, const PrResidualReport& rep) {
    auto f = open_out(p);
    f << "omega_rad,residual_k0,residual_alias,residual_alias_inband\n";
    for (const auto& r : rep.points)
        f << num(r.omega) << ',' << num(r.residual_k0) << ',' << num(r.residual_alias) << ','
          << num(r.residual_alias_inband) << '\n';
    f << "# max_residual_k0=" << num(rep.max_residual_k0) << '\n'
      << "# max_residual_alias=" << num(rep.max_residual_alias) << '\n'
      << "# max_residual_alias_inband=" << num(rep.max_residual_alias_inband) << '\n';
    finish(f, p);
}

/// `freq_hz,power_dbfs` rows; the metrics follow as '#' comment lines so
/// gnuplot and most spreadsheet importers skip them.
inline void write_spectrum(const fs::path& p, const SpectrumReport& r) {
    auto f = open_out(p);
    f << "freq_hz,power_dbfs\n";
    for (std::size_t i = 0; i < r.freq_hz.size(); ++i) f << num(r.freq_hz[i]) << ',' << num(r.power_dbfs[i]) << '\n';
    f << "# n_fft=" << r.n_fft << '\n'
      << "# window=" << r.window.name() << '\n'
      << "# fundamental_hz=" << num(r.freq_hz.empty() ? 0.0 : r.freq_hz[r.fundamental_bin]) << '\n'
      << "# fundamental_dbfs=" << num(r.fundamental_dbfs) << '\n'
      << "# snr_db=" << num(r.snr_db) << '\n'
      << "# sinad_db=" << num(r.sinad_db) << '\n'
      << "# thd_db=" << num(r.thd_db) << '\n'
      << "# sfdr_db=" << num(r.sfdr_db) << '\n'
      << "# enob_bits=" << num(r.enob_bits) << '\n';
    finish(f, p);
}

inline void write_spurs(const fs::path& p, const SpectrumReport& r) {
    auto f = open_out(p);
    f << "k,freq_hz,dbc,kind\n";
    for (const auto& s : r.spurs) f << s.k << ',' << num(s.freq_hz) << ',' << num(s.dbc) << ',' << s.kind << '\n';
    finish(f, p);
}

} // namespace tiadc::io
