#pragma once

#include "nld/detail/stats.hpp"
#include "nld/grid.hpp"
#include "nld/kernels.hpp"
#include "nld/solver.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nld {

class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Sectioned key-value configuration (INI syntax: [section], key = value,
/// ';'/'#' comments). The hash is canonical: independent of key order.
struct Config {
    std::map<std::string, std::map<std::string, std::string>> sections;

    static Config load(const std::filesystem::path& path) {
        std::ifstream is(path);
        if (!is) throw config_error("config: cannot open " + path.string());
        return parse(is);
    }

    static Config parse(std::istream& is) {
        boost::property_tree::ptree pt;
        try {
            boost::property_tree::read_ini(is, pt);
        } catch (const std::exception& e) {
            throw config_error(std::string("config: parse error: ") + e.what());
        }
        Config c;
        for (const auto& [sec, child] : pt) {
            if (child.empty()) continue;
            for (const auto& [key, val] : child)
                c.sections[sec][key] = val.get_value<std::string>();
        }
        return c;
    }

    static Config parse_string(const std::string& text) {
        std::istringstream is(text);
        return parse(is);
    }

    bool has(const std::string& sec) const { return sections.count(sec) > 0; }
    bool has(const std::string& sec, const std::string& key) const {
        auto it = sections.find(sec);
        return it != sections.end() && it->second.count(key) > 0;
    }

    const std::string& get(const std::string& sec, const std::string& key) const {
        auto it = sections.find(sec);
        if (it == sections.end()) throw config_error("config: missing section [" + sec + "]");
        auto jt = it->second.find(key);
        if (jt == it->second.end())
            throw config_error("config: missing key '" + key + "' in [" + sec + "]");
        return jt->second;
    }

    std::string get_or(const std::string& sec, const std::string& key,
                       const std::string& fallback) const {
        return has(sec, key) ? get(sec, key) : fallback;
    }

    double get_double(const std::string& sec, const std::string& key) const {
        return to_double(get(sec, key), sec, key);
    }
    double get_double_or(const std::string& sec, const std::string& key, double fallback) const {
        return has(sec, key) ? get_double(sec, key) : fallback;
    }
    int get_int(const std::string& sec, const std::string& key) const {
        const double v = get_double(sec, key);
        if (v != std::floor(v)) throw config_error("config: expected integer for " + key);
        return static_cast<int>(v);
    }
    int get_int_or(const std::string& sec, const std::string& key, int fallback) const {
        return has(sec, key) ? get_int(sec, key) : fallback;
    }

    /// Canonical serialization: sections and keys sorted, values verbatim.
    std::string canonical() const {
        std::string out;
        for (const auto& [sec, kv] : sections)
            for (const auto& [k, v] : kv) out += sec + "." + k + "=" + v + "\n";
        return out;
    }

    /// Deterministic 64-bit hash of the logical content (key order independent).
    std::string hash() const {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(detail::fnv1a64(canonical())));
        return buf;
    }

private:
    static double to_double(const std::string& s, const std::string& sec,
                            const std::string& key) {
        try {
            std::size_t pos = 0;
            const double v = std::stod(s, &pos);
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
            if (pos != s.size()) throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception&) {
            throw config_error("config: bad numeric value '" + s + "' for " + sec + "." + key);
        }
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(s.front())) s.erase(s.begin());
    while (!s.empty() && issp(s.back())) s.pop_back();
    return s;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

} // namespace detail

/// Builds a kernel from a flat parameter map: family, dim, family parameters.
inline KernelSpec kernel_from_params(const std::map<std::string, std::string>& params) {
    auto need = [&](const std::string& key) -> double {
        auto it = params.find(key);
        if (it == params.end()) throw config_error("kernel config: missing parameter " + key);
        try {
            return std::stod(it->second);
        } catch (const std::exception&) {
            throw config_error("kernel config: bad value for " + key);
        }
    };
    auto it = params.find("family");
    if (it == params.end()) throw config_error("kernel config: missing family");
    const std::string fam = it->second;
    const int dim = params.count("dim") ? static_cast<int>(need("dim")) : 1;
    try {
        if (fam == "gaussian") return KernelSpec::gaussian(need("sigma"), dim);
        if (fam == "laplace") return KernelSpec::laplace(need("lambda"), dim);
        if (fam == "compact_bump") return KernelSpec::compact_bump(need("radius"), dim);
        if (fam == "algebraic_tail")
            return KernelSpec::algebraic_tail(
                need("alpha"), params.count("core_radius") ? need("core_radius") : 1.0, dim);
        if (fam == "cauchy") {
            if (dim != 1) throw config_error("kernel config: cauchy is one-dimensional only");
            return KernelSpec::cauchy();
        }
        if (fam == "tabulated") {
            auto jt = params.find("file");
            if (jt == params.end()) throw config_error("kernel config: tabulated needs file=");
            std::ifstream is(jt->second);
            if (!is) throw config_error("kernel config: cannot open " + jt->second);
            std::vector<std::pair<double, double>> samples;
            std::string line;
            while (std::getline(is, line)) {
                const auto hash_pos = line.find('#');
                if (hash_pos != std::string::npos) line.erase(hash_pos);
                std::istringstream ls(line);
                double r, v;
                if (ls >> r >> v) samples.emplace_back(r, v);
            }
            return KernelSpec::tabulated(std::move(samples), dim);
        }
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("kernel config: ") + e.what());
    }
    throw config_error("kernel config: unknown family '" + fam + "'");
}

inline KernelSpec kernel_from_config(const Config& cfg, const std::string& section = "kernel") {
    auto it = cfg.sections.find(section);
    if (it == cfg.sections.end()) throw config_error("config: missing section [" + section + "]");
    return kernel_from_params(it->second);
}

/// Compact one-line kernel spec, e.g. "gaussian(sigma=1)" or
/// "algebraic_tail(alpha=2.5,core_radius=1)". Used in sweep kernel lists.
inline KernelSpec kernel_from_string(const std::string& text, int default_dim = 1) {
    const std::string s = detail::trim(text);
    const auto open = s.find('(');
    std::map<std::string, std::string> params;
    std::string fam = s;
    if (open != std::string::npos) {
        if (s.back() != ')') throw config_error("kernel string: missing ')': " + s);
        fam = detail::trim(s.substr(0, open));
        const std::string inner = s.substr(open + 1, s.size() - open - 2);
        if (!detail::trim(inner).empty()) {
            for (const auto& part : detail::split(inner, ',')) {
                const auto eq = part.find('=');
                if (eq == std::string::npos)
                    throw config_error("kernel string: expected key=value in " + s);
                params[detail::trim(part.substr(0, eq))] = detail::trim(part.substr(eq + 1));
            }
        }
    }
    params["family"] = fam;
    if (!params.count("dim")) params["dim"] = std::to_string(default_dim);
    return kernel_from_params(params);
}

inline std::string kernel_to_string(const KernelSpec& k) {
    auto params = k.to_params();
    std::string out = params.at("family") + "(";
    params.erase("family");
    bool first = true;
    for (const auto& [key, val] : params) {
        if (!first) out += ",";
        out += key + "=" + val;
        first = false;
    }
    return out + ")";
}

inline Grid grid_from_config(const Config& cfg, int dim, const std::string& section = "grid") {
    try {
        return Grid(dim, cfg.get_double(section, "L"), cfg.get_int(section, "M"));
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("grid config: ") + e.what());
    }
}

/// Initial-data descriptor: gaussian_bump / indicator / constant / zero.
struct InitialSpec {
    std::string type = "zero";
    double amplitude = 0.0;
    double sigma = 1.0;   // gaussian_bump width
    double radius = 1.0;  // indicator radius
};

inline InitialSpec initial_from_config(const Config& cfg, const std::string& section = "initial") {
    InitialSpec spec;
    spec.type = cfg.get_or(section, "type", "zero");
    spec.amplitude = cfg.get_double_or(section, "amplitude", 0.0);
    spec.sigma = cfg.get_double_or(section, "sigma", 1.0);
    spec.radius = cfg.get_double_or(section, "radius", 1.0);
    if (spec.type != "zero" && spec.type != "constant" && spec.type != "gaussian_bump" &&
        spec.type != "indicator")
        throw config_error("initial config: unknown type '" + spec.type + "'");
    return spec;
}

inline Field make_initial(const InitialSpec& spec, const Grid& g) {
    if (spec.type == "zero") return Field(g);
    if (spec.type == "constant") return Field(g, spec.amplitude);
    if (spec.type == "gaussian_bump") {
        const double s2 = 2.0 * spec.sigma * spec.sigma;
        if (g.dim == 1)
            return sample(g, [&](double x) { return spec.amplitude * std::exp(-x * x / s2); });
        return sample(g, [&](double x, double y) {
            return spec.amplitude * std::exp(-(x * x + y * y) / s2);
        });
    }
    // indicator
    if (g.dim == 1)
        return sample(g,
                      [&](double x) { return std::abs(x) <= spec.radius ? spec.amplitude : 0.0; });
    return sample(g, [&](double x, double y) {
        return std::hypot(x, y) <= spec.radius ? spec.amplitude : 0.0;
    });
}

inline Reaction reaction_from_config(const Config& cfg, const std::string& section = "reaction") {
    const std::string type = cfg.get_or(section, "type", "pure_growth");
    const double p = cfg.get_double(section, "p");
    try {
        if (type == "pure_growth") return Reaction::pure_growth(p);
        if (type == "allee_logistic") return Reaction::allee_logistic(p);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("reaction config: ") + e.what());
    }
    throw config_error("reaction config: unknown type '" + type + "' (custom reactions are "
                       "library-only)");
}

inline SolverConfig solver_from_config(const Config& cfg, const std::string& section = "solver") {
    SolverConfig sc;
    sc.dt_init = cfg.get_double_or(section, "dt_init", sc.dt_init);
    sc.dt_min = cfg.get_double_or(section, "dt_min", sc.dt_min);
    sc.safety = cfg.get_double_or(section, "safety", sc.safety);
    sc.u_max = cfg.get_double_or(section, "u_max", sc.u_max);
    sc.t_max = cfg.get_double_or(section, "t_max", sc.t_max);
    sc.snapshot_stride = cfg.get_int_or(section, "snapshot_stride", sc.snapshot_stride);
    sc.localized_radius = cfg.get_double_or(section, "localized_radius", sc.localized_radius);
    sc.boundary_layers = cfg.get_int_or(section, "boundary_layers", sc.boundary_layers);
    sc.boundary_frac = cfg.get_double_or(section, "boundary_frac", sc.boundary_frac);
    sc.cto_radius = cfg.get_double_or(section, "cto_radius", sc.cto_radius);
    sc.cto_eps = cfg.get_double_or(section, "cto_eps", sc.cto_eps);
    sc.decay_threshold = cfg.get_double_or(section, "decay_threshold", sc.decay_threshold);
    sc.decay_confirm_ratio =
        cfg.get_double_or(section, "decay_confirm_ratio", sc.decay_confirm_ratio);
    sc.decay_fit_min_r2 = cfg.get_double_or(section, "decay_fit_min_r2", sc.decay_fit_min_r2);
    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("solver config: ") + e.what());
    }
    return sc;
}

} // namespace nld
