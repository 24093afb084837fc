#include "uda/binio.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "uda/image.hpp"

namespace uda::binio {

namespace {

template <typename T>
void put_le(std::ostream& out, T v) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
T get_le(std::istream& in, std::string_view what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw Error(std::string(what) + ": truncated");
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(bytes[i]) << (8 * i);
  }
  return v;
}

}  // namespace

void write_magic(std::ostream& out, const Magic& magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

void write_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
void write_f64(std::ostream& out, double v) {
  put_le(out, std::bit_cast<std::uint64_t>(v));
}

void expect_magic(std::istream& in, const Magic& magic, std::string_view what) {
  Magic got{};
  in.read(got.data(), static_cast<std::streamsize>(got.size()));
  if (in.gcount() != static_cast<std::streamsize>(got.size())) {
    throw Error(std::string(what) + ": truncated");
  }
  if (got != magic) throw Error(std::string(what) + ": magic mismatch");
}

std::uint32_t read_u32(std::istream& in, std::string_view what) {
  return get_le<std::uint32_t>(in, what);
}

std::uint64_t read_u64(std::istream& in, std::string_view what) {
  return get_le<std::uint64_t>(in, what);
}

double read_f64(std::istream& in, std::string_view what) {
  return std::bit_cast<double>(get_le<std::uint64_t>(in, what));
}

void expect_eof(std::istream& in, std::string_view what) {
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(std::string(what) + ": trailing data");
  }
}

}  // namespace uda::binio
