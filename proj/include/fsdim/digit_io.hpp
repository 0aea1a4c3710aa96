#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "fsdim/digits.hpp"
#include "fsdim/sources.hpp"

namespace fsdim::io {

// Text digit files: optional first line "#base=<b>", then one character per digit
// (0-9A-Z) with no separators. A trailing newline is tolerated.
// Binary digit files: "FSD1", u32 little-endian base, then one byte per digit.

inline constexpr std::array<char, 4> kBinaryMagic{'F', 'S', 'D', '1'};

enum class DigitFormat { Text, Binary };

/// Text for bases up to 36, binary up to 256.
inline DigitFormat default_format(std::uint32_t base) {
  if (base <= 36) return DigitFormat::Text;
  if (base <= 256) return DigitFormat::Binary;
  throw InvalidArgument("no digit file format for base " + std::to_string(base));
}

inline DigitString parse_digit_text(const std::string& content, std::uint32_t default_base = 10) {
  std::string_view body = content;
  std::uint32_t base = default_base;
  if (body.starts_with("#")) {
    auto eol = body.find('\n');
    std::string_view header = body.substr(0, eol);
    if (!header.starts_with("#base=")) throw InvalidDigit("unrecognized header line: " + std::string(header));
    try {
      base = static_cast<std::uint32_t>(std::stoul(std::string(header.substr(6))));
    } catch (const std::exception&) {
      throw InvalidDigit("malformed base in header: " + std::string(header));
    }
    body = eol == std::string_view::npos ? std::string_view{} : body.substr(eol + 1);
  }
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
  if (base > 36) throw InvalidDigit("text digit files support base <= 36");
  return DigitString::from_text(body, Alphabet(base));
}

inline DigitString read_digit_file(const std::string& path, std::uint32_t default_base = 10) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open digit file: " + path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (content.size() >= 4 && std::memcmp(content.data(), kBinaryMagic.data(), 4) == 0) {
    if (content.size() < 8) throw InvalidDigit("truncated binary digit header: " + path);
    std::uint32_t base = 0;
    for (int i = 0; i < 4; ++i)
      base |= static_cast<std::uint32_t>(static_cast<unsigned char>(content[4 + i])) << (8 * i);
    std::vector<digit_t> digits;
    digits.reserve(content.size() - 8);
    for (std::size_t i = 8; i < content.size(); ++i)
      digits.push_back(static_cast<unsigned char>(content[i]));
    return DigitString(Alphabet(base), std::move(digits));
  }
  return parse_digit_text(content, default_base);
}

/// Writes up to max_digits digits of s; returns the number written. When
/// `source_has_more` is given it reports whether s continues past the last digit written.
inline std::uint64_t write_digit_file(const std::string& path, const SequenceSource& s,
                                      std::uint64_t max_digits,
                                      std::optional<DigitFormat> format = std::nullopt,
                                      bool header = true, bool* source_has_more = nullptr) {
  const DigitFormat fmt = format.value_or(default_format(s.base()));
  if (fmt == DigitFormat::Text && s.base() > 36) throw InvalidArgument("text format needs base <= 36");
  if (fmt == DigitFormat::Binary && s.base() > 256) throw InvalidArgument("binary format needs base <= 256");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write digit file: " + path);
  if (fmt == DigitFormat::Binary) {
    out.write(kBinaryMagic.data(), 4);
    for (int i = 0; i < 4; ++i) out.put(static_cast<char>((s.base() >> (8 * i)) & 0xFF));
  } else if (header) {
    out << "#base=" << s.base() << '\n';
  }
  auto cursor = s.open();
  std::vector<digit_t> buf(1 << 14);
  std::string chunk;
  std::uint64_t written = 0;
  while (written < max_digits) {
    auto want = static_cast<std::size_t>(std::min<std::uint64_t>(buf.size(), max_digits - written));
    std::size_t n = cursor->read(std::span(buf).first(want));
    if (n == 0) break;
    chunk.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      digit_t d = buf[i];
      if (fmt == DigitFormat::Binary) {
        chunk[i] = static_cast<char>(d);
      } else {
        chunk[i] = d < 10 ? static_cast<char>('0' + d) : static_cast<char>('A' + (d - 10));
      }
    }
    out.write(chunk.data(), static_cast<std::streamsize>(n));
    written += n;
  }
  if (source_has_more) {
    digit_t probe;
    *source_has_more = written == max_digits && cursor->read(std::span(&probe, 1)) == 1;
  }
  if (fmt == DigitFormat::Text) out << '\n';
  if (!out) throw InvalidArgument("error writing digit file: " + path);
  return written;
}

/// Set files: one decimal integer per line, strictly increasing. Blank lines are skipped.
inline std::vector<Natural> read_set_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open set file: " + path);
  std::vector<Natural> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    for (char c : line) {
      if (c < '0' || c > '9') {
        throw InvalidArgument("set file " + path + " line " + std::to_string(lineno) +
                              ": not a decimal natural");
      }
    }
    Natural v(line, 10);
    if (!out.empty() && v <= out.back()) {
      throw OrderViolation("set file " + path + " line " + std::to_string(lineno) +
                           ": values must be strictly increasing");
    }
    out.push_back(std::move(v));
  }
  return out;
}

inline void write_set_file(const std::string& path, const std::vector<Natural>& values) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write set file: " + path);
  for (const auto& v : values) out << v.get_str(10) << '\n';
  if (!out) throw InvalidArgument("error writing set file: " + path);
}

}  // namespace fsdim::io
