// Run configuration: dotted-key text format, validation that reports every
// problem at once, and a round-trippable serializer.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bfmix/methods.hpp"

namespace bfmix {

struct RunConfig {
    // grid
    int grid_n = 32;
    double grid_dx = 0.25;
    // particles
    double n_bosons = 100.0;
    int n_fermions = 4;
    double w = 1.0;
    // trap
    double omega_B = 1.0;
    double omega_F = 1.0;
    // interaction
    std::string g_B_units = "4pi";
    double g_BF_over_gB = 0.0;
    // method
    MethodKind kind = MethodKind::itp_itp_gs;
    double dt = 0.0;  // 0 = per-method default (0.05 ITP/A-RTP, 0.01 IEV)
    double t_f = 2e4;
    int n_shell = 7;
    std::string strategy;  // "", "cached3d", "onthefly1d"
    // convergence
    ConvergenceCriteria convergence;
    // runtime
    int threads = 1;
    std::size_t memory_cap = 0;  // bytes, 0 = unlimited
    std::string output_dir = "out";
    long checkpoint_every = 0;  // steps, 0 = off
    // release
    bool release_enabled = false;
    double release_duration = 0.0;

    double effective_dt() const {
        if (dt > 0.0) return dt;
        return (kind == MethodKind::itp_iev_1d || kind == MethodKind::itp_iev_3d) ? 0.01
                                                                                  : 0.05;
    }

    MixtureParams physics() const {
        return MixtureParams::make(n_bosons, n_fermions, w, omega_B, omega_F,
                                   g_BF_over_gB);
    }

    Grid3D grid() const { return make_grid(grid_n, grid_n, grid_n, grid_dx); }
};

struct ConfigError : std::runtime_error {
    std::vector<std::string> errors;
    explicit ConfigError(std::vector<std::string> errs)
        : std::runtime_error(join(errs)), errors(std::move(errs)) {}

  private:
    static std::string join(const std::vector<std::string>& errs) {
        std::string out = "invalid configuration:";
        for (const auto& e : errs) out += "\n  " + e;
        return out;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::optional<MethodKind> method_from_string(const std::string& s) {
    if (s == "itp_itp_gs") return MethodKind::itp_itp_gs;
    if (s == "a_rtp") return MethodKind::a_rtp;
    if (s == "itp_iev_1d") return MethodKind::itp_iev_1d;
    if (s == "itp_iev_3d") return MethodKind::itp_iev_3d;
    return std::nullopt;
}

inline const char* method_key(MethodKind k) {
    switch (k) {
        case MethodKind::itp_itp_gs: return "itp_itp_gs";
        case MethodKind::a_rtp: return "a_rtp";
        case MethodKind::itp_iev_1d: return "itp_iev_1d";
        case MethodKind::itp_iev_3d: return "itp_iev_3d";
    }
    return "?";
}

// Collects key = value pairs and typed-lookup errors.
class KeyValueReader {
  public:
    explicit KeyValueReader(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                errors.push_back("line " + std::to_string(lineno) +
                                 ": expected 'key = value', got '" + t + "'");
                continue;
            }
            const std::string key = trim(t.substr(0, eq));
            const std::string val = trim(t.substr(eq + 1));
            if (key.empty() || val.empty()) {
                errors.push_back("line " + std::to_string(lineno) + ": empty key or value");
                continue;
            }
            if (pairs_.count(key))
                errors.push_back("duplicate key '" + key + "'");
            pairs_[key] = val;
        }
    }

    template <class F>
    void take(const std::string& key, F&& assign) {
        auto it = pairs_.find(key);
        if (it == pairs_.end()) return;
        assign(it->second);
        pairs_.erase(it);
    }

    void get_double(const std::string& key, double& out) {
        take(key, [&](const std::string& v) {
            try {
                std::size_t pos = 0;
                const double x = std::stod(v, &pos);
                if (pos != v.size()) throw std::invalid_argument(v);
                out = x;
            } catch (const std::exception&) {
                errors.push_back(key + ": expected a number, got '" + v + "'");
            }
        });
    }

    void get_int(const std::string& key, int& out) { get_integral(key, out); }
    void get_long(const std::string& key, long& out) { get_integral(key, out); }
    void get_size(const std::string& key, std::size_t& out) { get_integral(key, out); }

    void get_string(const std::string& key, std::string& out) {
        take(key, [&](const std::string& v) { out = v; });
    }

    void get_bool(const std::string& key, bool& out) {
        take(key, [&](const std::string& v) {
            if (v == "true")
                out = true;
            else if (v == "false")
                out = false;
            else
                errors.push_back(key + ": expected true or false, got '" + v + "'");
        });
    }

    void finish_unknown() {
        for (const auto& [k, v] : pairs_) errors.push_back("unknown key '" + k + "'");
    }

    std::vector<std::string> errors;

  private:
    template <class T>
    void get_integral(const std::string& key, T& out) {
        take(key, [&](const std::string& v) {
            try {
                std::size_t pos = 0;
                const long long x = std::stoll(v, &pos);
                if (pos != v.size()) throw std::invalid_argument(v);
                out = static_cast<T>(x);
            } catch (const std::exception&) {
                errors.push_back(key + ": expected an integer, got '" + v + "'");
            }
        });
    }

    std::map<std::string, std::string> pairs_;
};

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    detail::KeyValueReader r(text);
    RunConfig c;
    r.get_int("grid.n", c.grid_n);
    r.get_double("grid.dx", c.grid_dx);
    r.get_double("particles.N_B", c.n_bosons);
    r.get_int("particles.N_F", c.n_fermions);
    r.get_double("particles.w", c.w);
    r.get_double("trap.omega_B", c.omega_B);
    r.get_double("trap.omega_F", c.omega_F);
    r.get_string("interaction.g_B_units", c.g_B_units);
    r.get_double("interaction.g_BF_over_gB", c.g_BF_over_gB);
    std::string kind_s = detail::method_key(c.kind);
    r.get_string("method.kind", kind_s);
    r.get_double("method.dt", c.dt);
    r.get_double("method.t_f", c.t_f);
    r.get_int("method.N_shell", c.n_shell);
    r.get_string("method.strategy", c.strategy);
    r.get_double("convergence.energy_tol", c.convergence.energy_tol);
    r.get_double("convergence.density_tol", c.convergence.density_tol);
    r.get_long("convergence.window", c.convergence.window);
    r.get_int("runtime.threads", c.threads);
    r.get_size("runtime.memory_cap", c.memory_cap);
    r.get_string("runtime.output_dir", c.output_dir);
    r.get_long("runtime.checkpoint_every", c.checkpoint_every);
    r.get_bool("release.enabled", c.release_enabled);
    r.get_double("release.duration", c.release_duration);
    r.finish_unknown();

    std::vector<std::string>& errs = r.errors;
    if (auto k = detail::method_from_string(kind_s))
        c.kind = *k;
    else
        errs.push_back("method.kind: unknown method '" + kind_s + "'");
    if (c.grid_n < 4 || c.grid_n % 2 != 0)
        errs.push_back("grid.n: must be even and >= 4");
    if (!(c.grid_dx > 0.0)) errs.push_back("grid.dx: must be positive");
    if (!(c.n_bosons > 0.0)) errs.push_back("particles.N_B: must be positive");
    if (c.n_fermions < 1) errs.push_back("particles.N_F: must be >= 1");
    if (!(c.w > 0.0)) errs.push_back("particles.w: must be positive");
    if (!(c.omega_B > 0.0)) errs.push_back("trap.omega_B: must be positive");
    if (!(c.omega_F > 0.0)) errs.push_back("trap.omega_F: must be positive");
    if (c.g_B_units != "4pi")
        errs.push_back("interaction.g_B_units: only '4pi' is supported");
    if (c.dt < 0.0) errs.push_back("method.dt: must be positive");
    if (!(c.t_f > 0.0)) errs.push_back("method.t_f: must be positive");
    if (c.n_shell < 0) errs.push_back("method.N_shell: must be >= 0");
    if (!c.strategy.empty() && c.strategy != "cached3d" && c.strategy != "onthefly1d")
        errs.push_back("method.strategy: must be 'cached3d' or 'onthefly1d'");
    if (c.strategy == "cached3d" && c.kind == MethodKind::itp_iev_1d)
        errs.push_back("method.strategy: conflicts with method.kind itp_iev_1d");
    if (c.strategy == "onthefly1d" && c.kind == MethodKind::itp_iev_3d)
        errs.push_back("method.strategy: conflicts with method.kind itp_iev_3d");
    if (!(c.convergence.energy_tol > 0.0))
        errs.push_back("convergence.energy_tol: must be positive");
    if (!(c.convergence.density_tol > 0.0))
        errs.push_back("convergence.density_tol: must be positive");
    if (c.convergence.window < 1) errs.push_back("convergence.window: must be >= 1");
    if (c.threads < 1) errs.push_back("runtime.threads: must be >= 1");
    if (c.checkpoint_every < 0) errs.push_back("runtime.checkpoint_every: must be >= 0");
    if (c.output_dir.empty()) errs.push_back("runtime.output_dir: must be non-empty");
    if (c.release_enabled && !(c.release_duration > 0.0))
        errs.push_back("release.duration: must be positive when release.enabled");
    if (c.release_duration < 0.0) errs.push_back("release.duration: must be >= 0");

    if (!errs.empty()) throw ConfigError(std::move(errs));
    return c;
}

inline std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    out.imbue(std::locale::classic());
    out.precision(17);
    out << "grid.n = " << c.grid_n << "\n"
        << "grid.dx = " << c.grid_dx << "\n"
        << "particles.N_B = " << c.n_bosons << "\n"
        << "particles.N_F = " << c.n_fermions << "\n"
        << "particles.w = " << c.w << "\n"
        << "trap.omega_B = " << c.omega_B << "\n"
        << "trap.omega_F = " << c.omega_F << "\n"
        << "interaction.g_B_units = " << c.g_B_units << "\n"
        << "interaction.g_BF_over_gB = " << c.g_BF_over_gB << "\n"
        << "method.kind = " << detail::method_key(c.kind) << "\n";
    if (c.dt > 0.0) out << "method.dt = " << c.dt << "\n";
    out << "method.t_f = " << c.t_f << "\n"
        << "method.N_shell = " << c.n_shell << "\n";
    if (!c.strategy.empty()) out << "method.strategy = " << c.strategy << "\n";
    out << "convergence.energy_tol = " << c.convergence.energy_tol << "\n"
        << "convergence.density_tol = " << c.convergence.density_tol << "\n"
        << "convergence.window = " << c.convergence.window << "\n"
        << "runtime.threads = " << c.threads << "\n"
        << "runtime.memory_cap = " << c.memory_cap << "\n"
        << "runtime.output_dir = " << c.output_dir << "\n"
        << "runtime.checkpoint_every = " << c.checkpoint_every << "\n"
        << "release.enabled = " << (c.release_enabled ? "true" : "false") << "\n"
        << "release.duration = " << c.release_duration << "\n";
    return out.str();
}

inline bool operator==(const RunConfig& a, const RunConfig& b) {
    return serialize_config(a) == serialize_config(b);
}

// FNV-1a over the canonical serialization; identifies a checkpoint's config.
inline std::uint64_t config_hash(const RunConfig& c) {
    const std::string s = serialize_config(c);
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace bfmix
