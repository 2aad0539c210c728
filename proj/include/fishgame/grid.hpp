#pragma once

// Uniform node-centred grids on intervals and rectangles, nodal fields,
// trapezoid quadrature and Neumann finite-difference operators.
//
// Node layout: boundary nodes are included. In 2D nodes are stored
// row-major with y as the slow index: index = iy * nx + ix.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fishgame {

class Grid {
 public:
  Grid() = default;

  /// Interval [lower, upper] with `nodes` points including both ends.
  static Grid interval(double lower, double upper, std::size_t nodes) {
    return Grid(1, {lower, 0.0}, {upper, 0.0}, {nodes, 1});
  }

  /// Rectangle [x0,x1] x [y0,y1].
  static Grid rectangle(double x0, double x1, double y0, double y1, std::size_t nx,
                        std::size_t ny) {
    return Grid(2, {x0, y0}, {x1, y1}, {nx, ny});
  }

  /// Unit interval (0,1) with n nodes.
  static Grid unit_interval(std::size_t nodes) { return interval(0.0, 1.0, nodes); }

  int dim() const { return dim_; }
  std::size_t nodes(int axis) const { return nodes_[axis]; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  std::size_t size() const { return nodes_[0] * nodes_[1]; }

  double volume() const {
    double v = upper_[0] - lower_[0];
    if (dim_ == 2) v *= upper_[1] - lower_[1];
    return v;
  }

  std::size_t index(std::size_t ix, std::size_t iy = 0) const { return iy * nodes_[0] + ix; }

  double coord(int axis, std::size_t i) const {
    return lower_[axis] + static_cast<double>(i) * spacing_[axis];
  }

  /// Coordinates of node `k` (second entry is 0 in 1D).
  std::array<double, 2> point(std::size_t k) const {
    const std::size_t ix = k % nodes_[0];
    const std::size_t iy = k / nodes_[0];
    return {coord(0, ix), dim_ == 2 ? coord(1, iy) : 0.0};
  }

  /// Trapezoid weight of node k (sums to volume()).
  double weight(std::size_t k) const {
    const std::size_t ix = k % nodes_[0];
    const std::size_t iy = k / nodes_[0];
    double w = axis_weight(0, ix);
    if (dim_ == 2) w *= axis_weight(1, iy);
    return w;
  }

  double axis_weight(int axis, std::size_t i) const {
    const bool end = (i == 0 || i + 1 == nodes_[axis]);
    return end ? 0.5 * spacing_[axis] : spacing_[axis];
  }

  double min_spacing() const {
    return dim_ == 2 ? std::min(spacing_[0], spacing_[1]) : spacing_[0];
  }

  bool operator==(const Grid& o) const {
    return dim_ == o.dim_ && lower_ == o.lower_ && upper_ == o.upper_ && nodes_ == o.nodes_;
  }

 private:
  Grid(int dim, std::array<double, 2> lower, std::array<double, 2> upper,
       std::array<std::size_t, 2> nodes)
      : dim_(dim), lower_(lower), upper_(upper), nodes_(nodes) {
    for (int a = 0; a < dim_; ++a) {
      if (nodes_[a] < 3) throw std::invalid_argument("grid needs at least 3 nodes per axis");
      if (!(upper_[a] > lower_[a])) throw std::invalid_argument("grid extent must be positive");
      spacing_[a] = (upper_[a] - lower_[a]) / static_cast<double>(nodes_[a] - 1);
    }
  }

  int dim_ = 1;
  std::array<double, 2> lower_{0.0, 0.0};
  std::array<double, 2> upper_{1.0, 0.0};
  std::array<std::size_t, 2> nodes_{3, 1};
  std::array<double, 2> spacing_{0.5, 1.0};
};

/// Nodal scalar function on a Grid.
struct Field {
  Grid grid;
  std::vector<double> values;

  Field() = default;
  Field(Grid g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  Field(Grid g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size()) throw std::invalid_argument("field size does not match grid");
  }

  /// Samples f(x) (1D) or f(x, y) (2D) at every node.
  static Field from_function(const Grid& g, const std::function<double(double, double)>& f) {
    Field out(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const auto p = g.point(k);
      out.values[k] = f(p[0], p[1]);
    }
    return out;
  }

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t k) { return values[k]; }
  double operator[](std::size_t k) const { return values[k]; }

  double max() const { return *std::max_element(values.begin(), values.end()); }
  double min() const { return *std::min_element(values.begin(), values.end()); }
  bool finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }
};

inline void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("fields live on different grids");
}

template <class Op>
Field zip(const Field& a, const Field& b, Op op) {
  require_same_grid(a, b);
  Field out(a.grid);
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = op(a[k], b[k]);
  return out;
}

template <class Op>
Field map(const Field& a, Op op) {
  Field out(a.grid);
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = op(a[k]);
  return out;
}

inline Field operator+(const Field& a, const Field& b) { return zip(a, b, std::plus<>{}); }
inline Field operator-(const Field& a, const Field& b) { return zip(a, b, std::minus<>{}); }
inline Field operator*(const Field& a, const Field& b) { return zip(a, b, std::multiplies<>{}); }
inline Field operator*(double s, const Field& a) {
  return map(a, [s](double v) { return s * v; });
}
inline Field operator+(const Field& a, double s) {
  return map(a, [s](double v) { return v + s; });
}
inline Field operator-(const Field& a, double s) { return a + (-s); }
inline Field operator-(const Field& a) { return -1.0 * a; }

/// Trapezoid integral over the domain.
inline double integral(const Field& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += f.grid.weight(k) * f[k];
  return s;
}

/// Average value (1/|Ω|) ∫ f.
inline double mean(const Field& f) { return integral(f) / f.grid.volume(); }

/// Mean of the pointwise product.
inline double mean_product(const Field& a, const Field& b) {
  require_same_grid(a, b);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a.grid.weight(k) * a[k] * b[k];
  return s / a.grid.volume();
}

inline double l2_norm(const Field& f) { return std::sqrt(mean_product(f, f) * f.grid.volume()); }

inline double l1_norm(const Field& f) {
  return integral(map(f, [](double v) { return std::abs(v); }));
}

inline double sup_norm(const Field& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

inline double l2_distance(const Field& a, const Field& b) { return l2_norm(a - b); }

/// Five-point (three-point in 1D) Laplacian; homogeneous Neumann through
/// mirrored ghost nodes, so the boundary row reads 2(f1 - f0)/h^2.
inline Field laplacian_apply(const Field& f) {
  const Grid& g = f.grid;
  Field out(g);
  const std::size_t nx = g.nodes(0);
  const std::size_t ny = g.dim() == 2 ? g.nodes(1) : 1;
  const double ihx2 = 1.0 / (g.spacing(0) * g.spacing(0));
  const double ihy2 = g.dim() == 2 ? 1.0 / (g.spacing(1) * g.spacing(1)) : 0.0;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const std::size_t k = g.index(ix, iy);
      const double c = f[k];
      const double left = ix > 0 ? f[k - 1] : f[k + 1];
      const double right = ix + 1 < nx ? f[k + 1] : f[k - 1];
      double v = (left - 2.0 * c + right) * ihx2;
      if (g.dim() == 2) {
        const double down = iy > 0 ? f[k - nx] : f[k + nx];
        const double up = iy + 1 < ny ? f[k + nx] : f[k - nx];
        v += (down - 2.0 * c + up) * ihy2;
      }
      out[k] = v;
    }
  }
  return out;
}

/// Central differences inside, first-order one-sided on the boundary.
/// Returns one Field per axis.
inline std::vector<Field> gradient(const Field& f) {
  const Grid& g = f.grid;
  const std::size_t nx = g.nodes(0);
  const std::size_t ny = g.dim() == 2 ? g.nodes(1) : 1;
  std::vector<Field> out(g.dim(), Field(g));
  for (int axis = 0; axis < g.dim(); ++axis) {
    const double h = g.spacing(axis);
    const std::size_t stride = axis == 0 ? 1 : nx;
    const std::size_t n = g.nodes(axis);
    for (std::size_t iy = 0; iy < ny; ++iy) {
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const std::size_t k = g.index(ix, iy);
        const std::size_t i = axis == 0 ? ix : iy;
        double d;
        if (i == 0) {
          d = (f[k + stride] - f[k]) / h;
        } else if (i + 1 == n) {
          d = (f[k] - f[k - stride]) / h;
        } else {
          d = (f[k + stride] - f[k - stride]) / (2.0 * h);
        }
        out[axis][k] = d;
      }
    }
  }
  return out;
}

inline Field gradient_norm_squared(const Field& f) {
  auto grad = gradient(f);
  Field out(f.grid);
  for (const auto& c : grad)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += c[k] * c[k];
  return out;
}

/// Linear interpolation of f at a point (bilinear in 2D); the point is
/// clamped into the domain.
inline double interpolate(const Field& f, std::array<double, 2> p) {
  const Grid& g = f.grid;
  std::array<std::size_t, 2> i0{0, 0};
  std::array<double, 2> t{0.0, 0.0};
  for (int a = 0; a < g.dim(); ++a) {
    const double s = std::clamp((p[a] - g.lower(a)) / g.spacing(a), 0.0,
                                static_cast<double>(g.nodes(a) - 1));
    std::size_t i = static_cast<std::size_t>(std::floor(s));
    if (i + 1 >= g.nodes(a)) i = g.nodes(a) - 2;
    i0[a] = i;
    t[a] = s - static_cast<double>(i);
  }
  if (g.dim() == 1) {
    return (1.0 - t[0]) * f[i0[0]] + t[0] * f[i0[0] + 1];
  }
  const double f00 = f[g.index(i0[0], i0[1])];
  const double f10 = f[g.index(i0[0] + 1, i0[1])];
  const double f01 = f[g.index(i0[0], i0[1] + 1)];
  const double f11 = f[g.index(i0[0] + 1, i0[1] + 1)];
  return (1 - t[0]) * (1 - t[1]) * f00 + t[0] * (1 - t[1]) * f10 + (1 - t[0]) * t[1] * f01 +
         t[0] * t[1] * f11;
}

inline std::string format_number(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// CSV dump: header `x[,y],value`, one node per line in storage order.
inline void write_field_csv(std::ostream& os, const Field& f, const std::string& column = "value") {
  const Grid& g = f.grid;
  os << (g.dim() == 2 ? "x,y," : "x,") << column << '\n';
  for (std::size_t k = 0; k < f.size(); ++k) {
    const auto p = g.point(k);
    os << format_number(p[0]) << ',';
    if (g.dim() == 2) os << format_number(p[1]) << ',';
    os << format_number(f[k]) << '\n';
  }
}

/// Several fields side by side, one column each.
inline void write_fields_csv(std::ostream& os, std::span<const Field> fields,
                             std::span<const std::string> names) {
  if (fields.empty() || fields.size() != names.size())
    throw std::invalid_argument("write_fields_csv: column/name mismatch");
  const Grid& g = fields.front().grid;
  os << (g.dim() == 2 ? "x,y" : "x");
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (std::size_t k = 0; k < g.size(); ++k) {
    const auto p = g.point(k);
    os << format_number(p[0]);
    if (g.dim() == 2) os << ',' << format_number(p[1]);
    for (const auto& f : fields) os << ',' << format_number(f[k]);
    os << '\n';
  }
}

}  // namespace fishgame
