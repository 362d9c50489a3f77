#pragma once

// CSV plumbing: event histories in, result tables out.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hmmcredit/error.hpp"
#include "hmmcredit/filter.hpp"

namespace hmmcredit::io {

/// 12 significant digits, '.' decimal, no grouping.
inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw InputError("line " + std::to_string(line) + ": bad number '" + s + "'");
}

}  // namespace detail

/// Parses `time,kind,obligor` rows. A header row is optional; blank lines and
/// '#' comments are skipped. The horizon is left at the last event time.
inline EventHistory parse_events(std::istream& in) {
    EventHistory h;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto cells = detail::split(t);
        if (cells.size() >= 2 && cells[0] == "time" && cells[1] == "kind") continue;
        if (cells.size() < 2 || cells.size() > 3)
            throw InputError("line " + std::to_string(n) + ": expected time,kind,obligor");
        const double time = detail::parse_double(cells[0], n);
        if (cells[1] == "yjump") {
            if (cells.size() == 3 && !cells[2].empty())
                throw InputError("line " + std::to_string(n) + ": yjump rows take no obligor");
            h.events.push_back(Event::yjump(time));
        } else if (cells[1] == "default") {
            if (cells.size() < 3 || cells[2].empty())
                throw InputError("line " + std::to_string(n) + ": default rows need an obligor");
            const double id = detail::parse_double(cells[2], n);
            if (id != static_cast<int>(id) || id < 1)
                throw InputError("line " + std::to_string(n) + ": obligor must be a positive integer");
            h.events.push_back(Event::default_of(static_cast<int>(id), time));
        } else {
            throw InputError("line " + std::to_string(n) + ": unknown event kind '" + cells[1] + "'");
        }
        if (h.events.size() > 1 && !(time > h.events[h.events.size() - 2].time))
            throw InputError("line " + std::to_string(n) + ": event times must be strictly increasing");
        if (!(time > 0.0)) throw InputError("line " + std::to_string(n) + ": event times must be positive");
    }
    if (!h.events.empty()) h.horizon = h.events.back().time;
    return h;
}

inline EventHistory read_events(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open events file " + path.string());
    return parse_events(in);
}

inline void write_events(std::ostream& out, const EventHistory& h) {
    out << "time,kind,obligor\n";
    for (const auto& e : h.events) {
        if (e.kind == EventKind::YJump)
            out << num(e.time) << ",yjump,\n";
        else
            out << num(e.time) << ",default," << e.obligor << "\n";
    }
}

/// Writes through a temporary file and renames, so readers never see a
/// partial file.
inline void write_file(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out << content;
        if (!out) throw InputError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace hmmcredit::io
