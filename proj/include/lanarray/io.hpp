#pragma once

// Artifact writers: versioned CSV tables, JSON-lines records, little-endian
// float64 path dumps with JSON sidecars, and the run manifest.

#include "lanarray/errors.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <bit>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace lanarray::io {

inline constexpr const char* kToolVersion = "0.1.0";

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

/// Shortest round-trip text for a double, so reruns produce identical bytes.
inline std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

/// RFC 4180 quoting where needed.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : os_(path, std::ios::binary) {
        if (!os_) throw ConfigError("cannot open " + path.string() + " for writing");
        os_ << "# schema=1\r\n";
        row(header);
    }
    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) os_ << (i ? "," : "") << csv_field(fields[i]);
        os_ << "\r\n";
    }

private:
    std::ofstream os_;
};

class JsonLinesWriter {
public:
    explicit JsonLinesWriter(const std::filesystem::path& path) : os_(path, std::ios::binary) {
        if (!os_) throw ConfigError("cannot open " + path.string() + " for writing");
    }
    void write(const nlohmann::json& j) { os_ << j.dump() << '\n'; }

private:
    std::ofstream os_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
    os << j.dump(2) << '\n';
}

/// Little-endian float64 array plus "<path>.json" sidecar.
inline void write_path_dump(const std::filesystem::path& path, const Eigen::VectorXd& x, const nlohmann::json& sidecar) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(x[i]);
        unsigned char b[8];
        for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
        os.write(reinterpret_cast<const char*>(b), 8);
    }
    nlohmann::json meta = sidecar;
    meta["length"] = x.size();
    meta["dtype"] = "float64";
    meta["endianness"] = "little";
    write_json(std::filesystem::path(path.string() + ".json"), meta);
}

inline Eigen::VectorXd read_path_dump(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open data file " + path.string());
    std::vector<double> v;
    unsigned char b[8];
    while (is.read(reinterpret_cast<char*>(b), 8)) {
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
        v.push_back(std::bit_cast<double>(bits));
    }
    if (is.gcount() != 0) throw ConfigError("data file " + path.string() + " is not a whole number of float64 values");
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

/// Run manifest; timestamps live only here.
struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string started;
    std::string finished;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> outputs;

    nlohmann::json to_json() const {
        return {{"command", command}, {"config_hash", config_hash}, {"tool_version", kToolVersion},
                {"started", started}, {"finished", finished},       {"seeds", seeds},
                {"outputs", outputs}};
    }
};

} // namespace lanarray::io
