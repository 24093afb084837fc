#pragma once

// Little-endian primitives shared by the binary container formats.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string_view>

namespace uda::binio {

using Magic = std::array<char, 8>;

void write_magic(std::ostream& out, const Magic& magic);
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);

// Readers throw uda::Error("<what>: truncated") on short reads.
void expect_magic(std::istream& in, const Magic& magic, std::string_view what);
std::uint32_t read_u32(std::istream& in, std::string_view what);
std::uint64_t read_u64(std::istream& in, std::string_view what);
double read_f64(std::istream& in, std::string_view what);

// Throws unless the stream is exactly at end of file.
void expect_eof(std::istream& in, std::string_view what);

}  // namespace uda::binio
