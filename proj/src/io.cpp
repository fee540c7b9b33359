#include "law/io.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "law/error.hpp"

namespace law::io {

bool is_little_endian() {
    uint16_t probe = 0x1;
    const auto* bytes = reinterpret_cast<const unsigned char*>(&probe);
    return bytes[0] == 1;
}

namespace {

template <typename T>
void write_scalar(std::ostream& out, T v) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if (!is_little_endian()) std::reverse(buf, buf + sizeof(T));
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
    if (!out) throw IoError("binary write failed");
}

template <typename T>
T read_scalar(std::istream& in, const std::string& what) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!in) throw IoError("truncated or unreadable data while reading " + what);
    if (!is_little_endian()) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace

void write_u32(std::ostream& out, uint32_t v) { write_scalar(out, v); }
void write_u64(std::ostream& out, uint64_t v) { write_scalar(out, v); }
void write_f64(std::ostream& out, double v) { write_scalar(out, v); }

void write_f64_block(std::ostream& out, const double* data, size_t n) {
    if (is_little_endian()) {
        out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
        if (!out) throw IoError("binary write failed");
        return;
    }
    for (size_t i = 0; i < n; ++i) write_f64(out, data[i]);
}

void write_i64_block(std::ostream& out, const int64_t* data, size_t n) {
    if (is_little_endian()) {
        out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(int64_t)));
        if (!out) throw IoError("binary write failed");
        return;
    }
    for (size_t i = 0; i < n; ++i) write_scalar(out, data[i]);
}

uint32_t read_u32(std::istream& in, const std::string& what) { return read_scalar<uint32_t>(in, what); }
uint64_t read_u64(std::istream& in, const std::string& what) { return read_scalar<uint64_t>(in, what); }
double read_f64(std::istream& in, const std::string& what) { return read_scalar<double>(in, what); }

void read_f64_block(std::istream& in, double* data, size_t n, const std::string& what) {
    if (is_little_endian()) {
        in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) throw IoError("truncated or unreadable data while reading " + what);
        return;
    }
    for (size_t i = 0; i < n; ++i) data[i] = read_f64(in, what);
}

void read_i64_block(std::istream& in, int64_t* data, size_t n, const std::string& what) {
    if (is_little_endian()) {
        in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(int64_t)));
        if (!in) throw IoError("truncated or unreadable data while reading " + what);
        return;
    }
    for (size_t i = 0; i < n; ++i) data[i] = read_scalar<int64_t>(in, what);
}

void write_bytes(std::ostream& out, const void* data, size_t n) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw IoError("binary write failed");
}

void read_bytes(std::istream& in, void* data, size_t n, const std::string& what) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n));
    if (!in) throw IoError("truncated or unreadable data while reading " + what);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) {
        // Try to shorten while keeping an exact round-trip.
        for (int prec = 1; prec < 17; ++prec) {
            char shorter[40];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            std::sscanf(shorter, "%lf", &back);
            if (back == v) return shorter;
        }
    }
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace law::io
