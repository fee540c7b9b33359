#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace law::io {

bool is_little_endian();

void write_u32(std::ostream& out, uint32_t v);
void write_u64(std::ostream& out, uint64_t v);
void write_f64(std::ostream& out, double v);
void write_f64_block(std::ostream& out, const double* data, size_t n);
void write_i64_block(std::ostream& out, const int64_t* data, size_t n);

uint32_t read_u32(std::istream& in, const std::string& what);
uint64_t read_u64(std::istream& in, const std::string& what);
double read_f64(std::istream& in, const std::string& what);
void read_f64_block(std::istream& in, double* data, size_t n, const std::string& what);
void read_i64_block(std::istream& in, int64_t* data, size_t n, const std::string& what);

void write_bytes(std::ostream& out, const void* data, size_t n);
void read_bytes(std::istream& in, void* data, size_t n, const std::string& what);

// Shortest decimal rendering that round-trips a float64. Used for every CSV
// field so reruns are byte-comparable.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace law::io
