#pragma once

// Named field presets used for resources, strategies and initial data:
//   constant:c
//   cosine:c0:amp          c0 + amp cos(pi s_x) [cos(pi s_y)], s the unit coordinate
//   decreasing-linear:K0   2 K0 (1 - s_x)
//   random-fourier:K0:modes:amplitude   seeded by the run seed
//   step:x0:left:right     left for x < x0, right otherwise
//   gaussian:x0:width      normalized to unit integral
//   uniform                1 / volume
//   file:path              CSV with columns x[,y],value on the grid nodes

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fishgame/grid.hpp"
#include "fishgame/harvest.hpp"

namespace fishgame {

class PresetError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(trim(s), &pos);
  } catch (const std::exception&) {
    throw PresetError(what + ": '" + s + "' is not a number");
  }
  if (pos != trim(s).size()) throw PresetError(what + ": '" + s + "' is not a number");
  return v;
}

// Uniform [0,1) from the top 53 bits, identical on every platform.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double unit_coord(const Grid& g, int axis, double x) {
  return (x - g.lower(axis)) / (g.upper(axis) - g.lower(axis));
}

}  // namespace detail

/// Sum of cos(j pi s_x) cos(k pi s_y) modes with coefficients uniform in
/// [-amplitude, amplitude] / (1 + j + k), then projected onto
/// {0 <= K <= 1, mean(K) = K0}.
inline Field random_fourier(const Grid& g, double K0, std::uint64_t seed, int modes, double amplitude) {
  if (!(K0 > 0.0 && K0 < 1.0)) throw PresetError("random-fourier: K0 must lie in (0, 1)");
  if (modes < 1) throw PresetError("random-fourier: modes must be at least 1");
  std::mt19937_64 rng(seed);
  const int ky_max = g.dim() == 2 ? modes : 0;
  std::vector<double> coef;
  for (int j = 0; j <= modes; ++j)
    for (int k = 0; k <= ky_max; ++k)
      coef.push_back(amplitude * (2.0 * detail::unit_draw(rng) - 1.0) / (1.0 + j + k));
  using std::numbers::pi;
  Field f = Field::from_function(g, [&](double x, double y) {
    const double sx = detail::unit_coord(g, 0, x);
    const double sy = g.dim() == 2 ? detail::unit_coord(g, 1, y) : 0.0;
    double v = 0.0;
    std::size_t c = 0;
    for (int j = 0; j <= modes; ++j)
      for (int k = 0; k <= ky_max; ++k) v += coef[c++] * std::cos(j * pi * sx) * std::cos(k * pi * sy);
    return v;
  });
  return project(f, StrategyConstraints{1.0, K0, ConstraintMode::Equality});
}

/// Reads a field written as x[,y],value with one row per grid node in order.
inline Field field_from_csv(const Grid& g, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw PresetError("cannot open field file '" + path + "'");
  std::string line;
  std::getline(in, line);
  Field f(g);
  std::size_t k = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cols = detail::split(line, ',');
    const std::size_t want = static_cast<std::size_t>(g.dim()) + 1;
    if (cols.size() != want)
      throw PresetError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(want) +
                        " columns");
    if (k >= g.size()) throw PresetError(path + ": more rows than grid nodes");
    const auto p = g.point(k);
    for (int a = 0; a < g.dim(); ++a) {
      const double c = detail::parse_double(cols[a], path + ":" + std::to_string(lineno));
      if (std::abs(c - p[a]) > 1e-9 * (1.0 + std::abs(p[a])))
        throw PresetError(path + ":" + std::to_string(lineno) + ": coordinate does not match grid node");
    }
    f[k++] = detail::parse_double(cols.back(), path + ":" + std::to_string(lineno));
  }
  if (k != g.size())
    throw PresetError(path + ": " + std::to_string(k) + " rows for " + std::to_string(g.size()) +
                      " grid nodes");
  return f;
}

/// Builds a field from a preset string such as "constant:0.7".
inline Field field_preset(const Grid& g, const std::string& spec, std::uint64_t seed = 0) {
  using std::numbers::pi;
  const auto colon = spec.find(':');
  const std::string name = detail::trim(spec.substr(0, colon));
  if (name == "file") {
    if (colon == std::string::npos) throw PresetError("file preset needs a path");
    return field_from_csv(g, detail::trim(spec.substr(colon + 1)));
  }
  std::vector<double> args;
  if (colon != std::string::npos)
    for (const auto& a : detail::split(spec.substr(colon + 1), ':'))
      args.push_back(detail::parse_double(a, "preset '" + spec + "'"));
  auto need = [&](std::size_t n) {
    if (args.size() != n)
      throw PresetError("preset '" + name + "' takes " + std::to_string(n) + " parameter(s), got " +
                        std::to_string(args.size()));
  };
  if (name == "constant") {
    need(1);
    return Field(g, args[0]);
  }
  if (name == "cosine") {
    need(2);
    return Field::from_function(g, [&](double x, double y) {
      double c = std::cos(pi * detail::unit_coord(g, 0, x));
      if (g.dim() == 2) c *= std::cos(pi * detail::unit_coord(g, 1, y));
      return args[0] + args[1] * c;
    });
  }
  if (name == "decreasing-linear") {
    need(1);
    return Field::from_function(g, [&](double x, double) { return 2.0 * args[0] * (1.0 - detail::unit_coord(g, 0, x)); });
  }
  if (name == "random-fourier") {
    need(3);
    return random_fourier(g, args[0], seed, static_cast<int>(args[1]), args[2]);
  }
  if (name == "step") {
    need(3);
    return Field::from_function(g, [&](double x, double) { return x < args[0] ? args[1] : args[2]; });
  }
  if (name == "gaussian") {
    need(2);
    if (!(args[1] > 0.0)) throw PresetError("gaussian: width must be positive");
    Field f = Field::from_function(g, [&](double x, double) {
      const double d = (x - args[0]) / args[1];
      return std::exp(-0.5 * d * d);
    });
    return (1.0 / integral(f)) * f;
  }
  if (name == "uniform") {
    need(0);
    return Field(g, 1.0 / g.volume());
  }
  throw PresetError("unknown preset '" + name + "'");
}

}  // namespace fishgame
