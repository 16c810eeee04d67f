#include "genrec/text_format.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

namespace genrec {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw FormatError("format_real: conversion failed");
  return std::string(buf, ptr);
}

double parse_real(std::string_view text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw FormatError("not a real number: '" + std::string(text) + "'");
  return v;
}

void write_row(std::ostream& os, const double* data, Index n) {
  for (Index i = 0; i < n; ++i) {
    if (i) os << ' ';
    os << format_real(data[i]);
  }
  os << '\n';
}

void write_matrix_rows(std::ostream& os, const Matrix& a) {
  for (Index i = 0; i < a.rows(); ++i) {
    const Vector row = a.row(i).transpose();
    write_row(os, row.data(), row.size());
  }
}

bool TokenReader::at_end() {
  is_ >> std::ws;
  return is_.eof();
}

std::string TokenReader::next(std::string_view what) {
  std::string tok;
  if (!(is_ >> tok))
    throw FormatError("unexpected end of input while reading " + std::string(what));
  ++token_index_;
  return tok;
}

void TokenReader::expect(std::string_view word) {
  const std::string tok = next(word);
  if (tok != word)
    throw FormatError("expected '" + std::string(word) + "', got '" + tok + "' (token " +
                      std::to_string(token_index_) + ")");
}

double TokenReader::read_real(std::string_view what) {
  const std::string tok = next(what);
  try {
    return parse_real(tok);
  } catch (const FormatError&) {
    throw FormatError(std::string(what) + ": not a real number: '" + tok + "' (token " +
                      std::to_string(token_index_) + ")");
  }
}

long long TokenReader::read_integer(std::string_view what) {
  const std::string tok = next(what);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw FormatError(std::string(what) + ": not an integer: '" + tok + "'");
  return v;
}

Index TokenReader::read_count(std::string_view what) {
  const long long v = read_integer(what);
  if (v < 0) throw FormatError(std::string(what) + ": negative count");
  return static_cast<Index>(v);
}

std::string keyed_value(std::string_view token, std::string_view key) {
  const auto eq = token.find('=');
  if (eq == std::string_view::npos || token.substr(0, eq) != key)
    throw FormatError("expected '" + std::string(key) + "=...', got '" + std::string(token) + "'");
  return std::string(token.substr(eq + 1));
}

}  // namespace genrec
