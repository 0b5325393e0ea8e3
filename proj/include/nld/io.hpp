#pragma once

#include "nld/diagnostics.hpp"
#include "nld/solver.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nld {

namespace detail {

template <class T>
void write_le(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint8_t buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    }
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
    std::uint8_t buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is) throw std::runtime_error("field snapshot: truncated file");
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    }
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

} // namespace detail

/// Flat binary snapshot: header (dim u32, M u32, L f64, time f64), then
/// M^N little-endian f64 values in row-major order.
inline void write_field_bin(const Field& u, const std::filesystem::path& path, double time) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("write_field_bin: cannot open " + path.string());
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(u.grid.dim));
    detail::write_le<std::uint32_t>(os, static_cast<std::uint32_t>(u.grid.points_per_axis));
    detail::write_le<double>(os, u.grid.half_width);
    detail::write_le<double>(os, time);
    for (double v : u.values) detail::write_le<double>(os, v);
    if (!os) throw std::runtime_error("write_field_bin: write failed for " + path.string());
}

struct FieldSnapshot {
    Field field;
    double time = 0.0;
};

inline FieldSnapshot read_field_bin(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_field_bin: cannot open " + path.string());
    const auto dim = detail::read_le<std::uint32_t>(is);
    const auto m = detail::read_le<std::uint32_t>(is);
    const double L = detail::read_le<double>(is);
    const double time = detail::read_le<double>(is);
    FieldSnapshot snap;
    snap.time = time;
    snap.field = Field(Grid(static_cast<int>(dim), L, static_cast<int>(m)));
    for (double& v : snap.field.values) v = detail::read_le<double>(is);
    return snap;
}

/// CSV form for small grids: coordinates then value, one node per row.
inline void write_field_csv(const Field& u, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_field_csv: cannot open " + path.string());
    if (u.grid.dim == 1) {
        os << "x,value\n";
        for (int i = 0; i < u.grid.points_per_axis; ++i)
            os << detail::format_full(u.grid.coord(i)) << ',' << detail::format_full(u.at(i))
               << '\n';
    } else {
        os << "x,y,value\n";
        for (int i = 0; i < u.grid.points_per_axis; ++i)
            for (int j = 0; j < u.grid.points_per_axis; ++j)
                os << detail::format_full(u.grid.coord(i)) << ','
                   << detail::format_full(u.grid.coord(j)) << ','
                   << detail::format_full(u.at(i, j)) << '\n';
    }
}

/// Diagnostics time series; the leading columns are fixed (t, Linf, L1,
/// localized_mass, dt), extras follow.
inline void write_diagnostics_csv(const std::vector<DiagRow>& rows,
                                  const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_diagnostics_csv: cannot open " + path.string());
    os << "t,linf,l1,localized_mass,dt,mass,boundary_mass,reaction_integral\n";
    for (const auto& r : rows) {
        os << detail::format_full(r.t) << ',' << detail::format_full(r.linf) << ','
           << detail::format_full(r.l1) << ',' << detail::format_full(r.localized) << ','
           << detail::format_full(r.dt) << ',' << detail::format_full(r.mass) << ','
           << detail::format_full(r.boundary) << ',' << detail::format_full(r.reaction_integral)
           << '\n';
    }
}

inline void write_kaplan_csv(const KaplanReport& rep, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_kaplan_csv: cannot open " + path.string());
    os << "t,f,f_dual,lower_bound,upper_bound\n";
    for (std::size_t i = 0; i < rep.t.size(); ++i) {
        os << detail::format_full(rep.t[i]) << ',' << detail::format_full(rep.f[i]) << ','
           << detail::format_full(rep.f_dual[i]) << ',' << detail::format_full(rep.lower[i])
           << ',' << detail::format_full(rep.upper[i]) << '\n';
    }
}

} // namespace nld
