#pragma once

#include "nld/detail/fft.hpp"
#include "nld/kernels.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

namespace nld {

/// Periodic uniform grid over [-L, L]^N; nodes x_k = -L + k h, h = 2L/M.
/// M must be even so the origin is a node; powers of two keep transforms fast.
struct Grid {
    int dim = 1;
    double half_width = 1.0;     // L
    int points_per_axis = 16;    // M

    static constexpr std::size_t max_total_points = std::size_t{1} << 24;

    Grid() = default;
    Grid(int dim_, double L, int M) : dim(dim_), half_width(L), points_per_axis(M) {
        if (dim != 1 && dim != 2) throw std::invalid_argument("grid: dim must be 1 or 2");
        if (!(L > 0)) throw std::invalid_argument("grid: half-width must be positive");
        if (M < 4 || M % 2 != 0) throw std::invalid_argument("grid: M must be even and >= 4");
        if (total() > max_total_points) throw std::invalid_argument("grid: memory cap exceeded");
    }

    double spacing() const { return 2.0 * half_width / points_per_axis; }
    std::size_t total() const {
        std::size_t t = points_per_axis;
        if (dim == 2) t *= points_per_axis;
        return t;
    }
    double coord(int k) const { return -half_width + k * spacing(); }
    int origin_index() const { return points_per_axis / 2; }

    /// |x| of the node with flat index idx.
    double node_radius(std::size_t idx) const {
        if (dim == 1) return std::abs(coord(static_cast<int>(idx)));
        const int i = static_cast<int>(idx / points_per_axis);
        const int j = static_cast<int>(idx % points_per_axis);
        return std::hypot(coord(i), coord(j));
    }

    /// Distance from the node to the periodic seam at +-L (minimum over axes).
    double node_boundary_distance(std::size_t idx) const {
        if (dim == 1) return half_width - std::abs(coord(static_cast<int>(idx)));
        const int i = static_cast<int>(idx / points_per_axis);
        const int j = static_cast<int>(idx % points_per_axis);
        return std::min(half_width - std::abs(coord(i)), half_width - std::abs(coord(j)));
    }

    /// Signed integer frequency for axis index k (k - M for the upper half).
    int signed_freq(int k) const { return k <= points_per_axis / 2 ? k : k - points_per_axis; }
    /// Continuum frequency xi_k = pi * signed_freq / L.
    double frequency(int k) const {
        return std::numbers::pi * signed_freq(k) / half_width;
    }
    /// |xi| of the flat spectral index.
    double freq_radius(std::size_t idx) const {
        if (dim == 1) return std::abs(frequency(static_cast<int>(idx)));
        const int i = static_cast<int>(idx / points_per_axis);
        const int j = static_cast<int>(idx % points_per_axis);
        return std::hypot(frequency(i), frequency(j));
    }
    /// Frequency-lattice cell measure (pi/L)^N.
    double freq_cell() const {
        return std::pow(std::numbers::pi / half_width, dim);
    }

    bool operator==(const Grid&) const = default;
};

/// Real scalar field sampled on a Grid, row-major.
struct Field {
    Grid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const Grid& g, double fill = 0.0) : grid(g), values(g.total(), fill) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    double& at(int i) { return values[static_cast<std::size_t>(i)]; }
    double& at(int i, int j) {
        return values[static_cast<std::size_t>(i) * grid.points_per_axis + j];
    }
    double at(int i) const { return values[static_cast<std::size_t>(i)]; }
    double at(int i, int j) const {
        return values[static_cast<std::size_t>(i) * grid.points_per_axis + j];
    }

    /// Value at the origin node.
    double origin_value() const {
        const int o = grid.origin_index();
        return grid.dim == 1 ? at(o) : at(o, o);
    }
};

/// Pointwise evaluation of f at the grid nodes. f may take (double), (double,double)
/// or std::array<double,2>. Non-finite samples are construction errors.
template <class F>
Field sample(const Grid& g, F&& f) {
    Field out(g);
    auto eval = [&](double x, double y) -> double {
        if constexpr (std::is_invocable_r_v<double, F, double, double>) {
            return f(x, y);
        } else if constexpr (std::is_invocable_r_v<double, F, std::array<double, 2>>) {
            return f(std::array<double, 2>{x, y});
        } else {
            static_assert(std::is_invocable_r_v<double, F, double>,
                          "sample: callable must accept (double), (double,double) or array");
            (void)y;
            return f(x);
        }
    };
    if (g.dim == 1) {
        for (int i = 0; i < g.points_per_axis; ++i) {
            const double v = eval(g.coord(i), 0.0);
            if (!std::isfinite(v)) throw std::invalid_argument("sample: non-finite value");
            out.at(i) = v;
        }
    } else {
        for (int i = 0; i < g.points_per_axis; ++i)
            for (int j = 0; j < g.points_per_axis; ++j) {
                const double v = eval(g.coord(i), g.coord(j));
                if (!std::isfinite(v)) throw std::invalid_argument("sample: non-finite value");
                out.at(i, j) = v;
            }
    }
    return out;
}

struct Norms {
    double l1 = 0.0;
    double linf = 0.0;
};

inline Norms norms(const Field& u) {
    Norms n;
    const double cell = std::pow(u.grid.spacing(), u.grid.dim);
    for (double v : u.values) {
        n.l1 += std::abs(v);
        n.linf = std::max(n.linf, std::abs(v));
    }
    n.l1 *= cell;
    return n;
}

inline double linf_norm(const Field& u) { return norms(u).linf; }
inline double l1_norm(const Field& u) { return norms(u).l1; }

/// Signed total mass h^N sum u.
inline double total_mass(const Field& u) {
    double s = 0.0;
    for (double v : u.values) s += v;
    return s * std::pow(u.grid.spacing(), u.grid.dim);
}

/// h^N sum_{|x_k| <= R} u(x_k). Requires R < L.
inline double localized_mass(const Field& u, double R) {
    if (!(R < u.grid.half_width))
        throw std::domain_error("localized_mass: R must be smaller than the grid half-width");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (u.grid.node_radius(i) <= R) s += u.values[i];
    return s * std::pow(u.grid.spacing(), u.grid.dim);
}

/// Mass within `layers` cells of the periodic seam; wrap-contamination monitor.
inline double boundary_mass(const Field& u, int layers = 5) {
    const double band = layers * u.grid.spacing();
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (u.grid.node_boundary_distance(i) <= band) s += std::abs(u.values[i]);
    return s * std::pow(u.grid.spacing(), u.grid.dim);
}

/// min of u over the ball |x| <= R.
inline double ball_min(const Field& u, double R) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.size(); ++i)
        if (u.grid.node_radius(i) <= R) m = std::min(m, u.values[i]);
    return m;
}

namespace detail {

inline std::vector<std::complex<double>> raw_spectrum(const Field& u) {
    std::vector<std::complex<double>> data(u.values.begin(), u.values.end());
    dft_forward(data, u.grid.dim, u.grid.points_per_axis);
    return data;
}

/// (-1)^{k0+k1+...}: the phase aligning grid-sampled functions (origin at
/// index M/2) with displacement-indexed convolution.
inline double center_phase(const Grid& g, std::size_t idx) {
    int s;
    if (g.dim == 1) {
        s = static_cast<int>(idx);
    } else {
        s = static_cast<int>(idx / g.points_per_axis) + static_cast<int>(idx % g.points_per_axis);
    }
    return (s & 1) ? -1.0 : 1.0;
}

} // namespace detail

/// Samples of the continuum transform, hat u(xi_k) = h^N sum_j u_j e^{-i xi_k x_j}.
inline std::vector<std::complex<double>> continuum_spectrum(const Field& u) {
    auto data = detail::raw_spectrum(u);
    const double cell = std::pow(u.grid.spacing(), u.grid.dim);
    for (std::size_t k = 0; k < data.size(); ++k)
        data[k] *= cell * detail::center_phase(u.grid, k);
    return data;
}

/// (pi/L)^N sum_k |hat u(xi_k)|: lattice estimate of the transform's L1 norm.
inline double spectrum_l1(const Field& u) {
    const auto sp = continuum_spectrum(u);
    double s = 0.0;
    for (const auto& c : sp) s += std::abs(c);
    return s * u.grid.freq_cell();
}

/// Periodic convolution (a * b)(x_j) = h^N sum_m a(x_j - x_m) b(x_m) via FFT.
///
/// Both arguments are grid-sampled functions centered at the origin; the
/// operation is symmetric. The inverse transform's imaginary residue is a
/// numerical-integrity check.
inline Field convolve(const Field& a, const Field& b) {
    if (!(a.grid == b.grid)) throw std::invalid_argument("convolve: grids differ");
    const Grid& g = a.grid;
    auto fa = detail::raw_spectrum(a);
    const auto fb = detail::raw_spectrum(b);
    const double scale =
        std::pow(g.spacing(), g.dim) / static_cast<double>(g.total());
    for (std::size_t k = 0; k < fa.size(); ++k)
        fa[k] *= fb[k] * (scale * detail::center_phase(g, k));
    detail::dft_backward(fa, g.dim, g.points_per_axis);
    Field out(g);
    double max_im = 0.0, max_re = 0.0;
    for (std::size_t k = 0; k < fa.size(); ++k) {
        out.values[k] = fa[k].real();
        if (!std::isfinite(fa[k].real()) || !std::isfinite(fa[k].imag()))
            throw numerical_error("convolve: non-finite transform output");
        max_im = std::max(max_im, std::abs(fa[k].imag()));
        max_re = std::max(max_re, std::abs(fa[k].real()));
    }
    if (!(max_im <= 1e-12 * std::max(1.0, max_re)))
        throw numerical_error("convolve: imaginary residue above tolerance");
    return out;
}

/// Kernel sampled on the grid and rescaled so h^N sum J = 1 exactly.
/// For heavy tails the analytically known truncated-out mass is kept as metadata.
struct DiscreteKernel {
    Field field;
    double renorm_factor = 1.0;   // applied multiplier
    double truncated_mass = 0.0;  // continuum mass outside the box (ball of radius L)
};

inline DiscreteKernel discretize(const KernelSpec& kernel, const Grid& g) {
    if (kernel.dim() != g.dim)
        throw std::invalid_argument("discretize: kernel/grid dimension mismatch");
    DiscreteKernel dk;
    dk.field = g.dim == 1
                   ? sample(g, [&](double x) { return kernel.radial(x); })
                   : sample(g, [&](double x, double y) { return kernel.radial(std::hypot(x, y)); });
    double s = 0.0;
    for (double v : dk.field.values) s += v;
    s *= std::pow(g.spacing(), g.dim);
    if (!(s > 0)) throw std::invalid_argument("discretize: kernel vanishes on the grid");
    dk.renorm_factor = 1.0 / s;
    for (double& v : dk.field.values) v *= dk.renorm_factor;
    dk.truncated_mass = kernel.tail_mass(g.half_width);
    return dk;
}

/// hat J_d(xi_k): real spectrum of the renormalized sampled kernel.
/// Equals 1 at k = 0 by construction; |hat J_d| <= 1 since J >= 0.
inline std::vector<double> discrete_symbol(const DiscreteKernel& dk) {
    const auto sp = continuum_spectrum(dk.field);
    std::vector<double> out(sp.size());
    for (std::size_t k = 0; k < sp.size(); ++k) out[k] = sp[k].real();
    return out;
}

} // namespace nld
