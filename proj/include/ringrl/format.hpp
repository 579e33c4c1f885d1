#pragma once

#include <charconv>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace ringrl {

// Shortest round-trip decimal form; deterministic across runs of one build.
inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

// Fixed-precision form for plot coordinates.
inline std::string format_fixed(double value, int precision) {
  char buf[64];
  auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed, precision);
  if (ec != std::errc()) throw std::runtime_error("format_fixed: conversion failed");
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& text) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::invalid_argument("parse_double: bad number '" + text + "'");
  return value;
}

}  // namespace ringrl
