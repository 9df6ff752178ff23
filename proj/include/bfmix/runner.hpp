// Run orchestration: artifact emission (energy-trace CSV, density dumps,
// radial profiles, report), checkpoint/resume, thread-scaling benchmark, and
// the method-comparison table.
#pragma once

#include <filesystem>
#include <iomanip>
#include <map>
#include <mutex>

#include "bfmix/config.hpp"
#include "bfmix/field_io.hpp"

namespace bfmix {

inline constexpr const char* kTraceHeader =
    "step,time,E_total,E_kin_B,E_kin_F,E_trap_B,E_trap_F,E_BB,E_LHY,E_BF_mf,E_BF_ho";

inline std::string trace_row(const TracePoint& p) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  p.step, p.time, p.energy.total, p.energy.kinetic_B, p.energy.kinetic_F,
                  p.energy.trap_B, p.energy.trap_F, p.energy.mean_field_BB, p.energy.lhy,
                  p.energy.mean_field_BF, p.energy.higher_order_BF);
    return buf;
}

// A-table cache shared by every run with the same mass ratio.
inline std::string table_cache_path(const std::string& dir, double w) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "afun_w%.17g.tbl", w);
    return (std::filesystem::path(dir) / buf).string();
}

inline AFunctionTable load_or_build_table(const std::string& dir, double w) {
    // building a table is expensive, so reuse one per mass ratio within the
    // process on top of the per-directory disk cache
    static std::map<double, AFunctionTable> memo;
    static std::mutex mutex;
    {
        std::lock_guard<std::mutex> lock(mutex);
        const auto it = memo.find(w);
        if (it != memo.end()) {
            std::filesystem::create_directories(dir);
            const std::string path = table_cache_path(dir, w);
            if (!std::filesystem::exists(path)) it->second.save(path);
            return it->second;
        }
    }
    std::filesystem::create_directories(dir);
    AFunctionTable tab = AFunctionTable::cached(table_cache_path(dir, w), w);
    std::lock_guard<std::mutex> lock(mutex);
    return memo.emplace(w, std::move(tab)).first->second;
}

// --- checkpoint format ----------------------------------------------------
//
// magic "BFCK", u64 config hash, u32 config text length + text, u64 step
// index, u32 orbital count, then the condensate and each orbital as a BFX1
// blob, then u64 trace length + the accumulated trace CSV rows.

struct Checkpoint {
    RunConfig config;
    long step = 0;
    OrbitalSet state;
    std::string trace_rows;
};

inline void save_checkpoint(const std::string& path, const RunConfig& cfg, long step,
                            const OrbitalSet& state, const std::string& trace_rows) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open for writing: " + tmp);
        os.write("BFCK", 4);
        const std::uint64_t hash = config_hash(cfg);
        os.write(reinterpret_cast<const char*>(&hash), sizeof(hash));
        const std::string text = serialize_config(cfg);
        const std::uint32_t tlen = static_cast<std::uint32_t>(text.size());
        os.write(reinterpret_cast<const char*>(&tlen), sizeof(tlen));
        os.write(text.data(), tlen);
        const std::uint64_t step_u = static_cast<std::uint64_t>(step);
        os.write(reinterpret_cast<const char*>(&step_u), sizeof(step_u));
        const std::uint32_t norb = static_cast<std::uint32_t>(state.fermions.size());
        os.write(reinterpret_cast<const char*>(&norb), sizeof(norb));
        write_field(os, state.psi_b);
        for (const auto& orb : state.fermions) write_field(os, orb);
        const std::uint64_t rlen = trace_rows.size();
        os.write(reinterpret_cast<const char*>(&rlen), sizeof(rlen));
        os.write(trace_rows.data(), static_cast<std::streamsize>(rlen));
        if (!os) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

// The returned state references the grid owned by the caller-held config;
// load_checkpoint therefore returns the config first and synthesizes the
// grid internally, keeping it alive in a shared holder.
class CheckpointFile {
  public:
    explicit CheckpointFile(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
        char magic[4];
        is.read(magic, 4);
        if (!is || std::memcmp(magic, "BFCK", 4) != 0)
            throw std::runtime_error("not a BFCK checkpoint: " + path);
        std::uint64_t hash;
        is.read(reinterpret_cast<char*>(&hash), sizeof(hash));
        std::uint32_t tlen;
        is.read(reinterpret_cast<char*>(&tlen), sizeof(tlen));
        std::string text(tlen, '\0');
        is.read(text.data(), tlen);
        if (!is) throw std::runtime_error("truncated checkpoint header: " + path);
        cp_.config = parse_config(text);
        if (config_hash(cp_.config) != hash)
            throw std::runtime_error("checkpoint config hash mismatch: " + path);
        grid_ = cp_.config.grid();
        std::uint64_t step_u;
        is.read(reinterpret_cast<char*>(&step_u), sizeof(step_u));
        cp_.step = static_cast<long>(step_u);
        std::uint32_t norb;
        is.read(reinterpret_cast<char*>(&norb), sizeof(norb));
        if (!is) throw std::runtime_error("truncated checkpoint header: " + path);
        cp_.state.psi_b = read_complex_field(is, grid_, path);
        cp_.state.fermions.reserve(norb);
        for (std::uint32_t j = 0; j < norb; ++j)
            cp_.state.fermions.push_back(read_complex_field(is, grid_, path));
        std::uint64_t rlen;
        is.read(reinterpret_cast<char*>(&rlen), sizeof(rlen));
        cp_.trace_rows.resize(rlen);
        is.read(cp_.trace_rows.data(), static_cast<std::streamsize>(rlen));
        if (!is) throw std::runtime_error("truncated checkpoint payload: " + path);
    }

    const Grid3D& grid() const { return grid_; }
    const Checkpoint& checkpoint() const { return cp_; }
    Checkpoint& checkpoint() { return cp_; }

  private:
    Grid3D grid_;
    Checkpoint cp_;
};

// --- run orchestration ------------------------------------------------------

inline void write_radial_profile(const std::string& path, const RadialProfile& prof) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    char buf[96];
    for (std::size_t b = 0; b < prof.r.size(); ++b) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", prof.r[b], prof.value[b]);
        os << buf;
    }
}

// Runs the configured method and writes every artifact under
// config.output_dir. When `from` is non-null the run resumes from that
// checkpoint state.
inline RunReport run(const RunConfig& cfg, const Checkpoint* from = nullptr) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.output_dir);
    set_threads(cfg.threads);

    const auto grid_holder = std::make_shared<const Grid3D>(cfg.grid());
    const Grid3D& g = *grid_holder;
    const MixtureParams params = cfg.physics();
    const AFunctionTable table = load_or_build_table(cfg.output_dir, params.w);

    const std::string report_path = (fs::path(cfg.output_dir) / "report.txt").string();
    std::ofstream report(report_path);
    if (!report) throw std::runtime_error("cannot open for writing: " + report_path);
    report << "method = " << method_name(cfg.kind) << "\n" << serialize_config(cfg);
    report.flush();

    std::string trace_rows = from ? from->trace_rows : std::string();
    long last_cp = from ? from->step : 0;
    const std::string cp_path = (fs::path(cfg.output_dir) / "checkpoint.bfck").string();

    RunOptions opts;
    opts.dt = cfg.effective_dt();
    opts.t_f = cfg.t_f;
    opts.n_shell = cfg.n_shell;
    opts.memory_cap_bytes = cfg.memory_cap;
    OrbitalSet resumed_state;
    if (from) {
        resumed_state = rebind_state(from->state, g);
        opts.initial_state = &resumed_state;
        opts.start_step = from->step;
    }
    opts.on_checkpoint = [&](long step, const OrbitalSet& state, const EnergyBreakdown& e) {
        trace_rows += trace_row({step, step * opts.dt, e});
        trace_rows += '\n';
        if (cfg.checkpoint_every > 0 && step - last_cp >= cfg.checkpoint_every) {
            save_checkpoint(cp_path, cfg, step, state, trace_rows);
            last_cp = step;
        }
    };

    RunReport rep = run_method(cfg.kind, g, params, table, cfg.convergence, opts);
    rep.grid_holder = grid_holder;

    {
        std::ofstream os((fs::path(cfg.output_dir) / "trace.csv").string());
        os << kTraceHeader << "\n" << trace_rows;
    }
    RealField3D n_b = density(rep.state.psi_b, params.n_bosons);
    RealField3D n_f(g);
    for (const auto& orb : rep.state.fermions) add_density(n_f, orb, 1.0);
    save_field((fs::path(cfg.output_dir) / "n_B.bfx").string(), n_b);
    save_field((fs::path(cfg.output_dir) / "n_F.bfx").string(), n_f);
    save_field((fs::path(cfg.output_dir) / "psi_B.bfx").string(), rep.state.psi_b);
    for (std::size_t j = 0; j < rep.state.fermions.size(); ++j) {
        char name[32];
        std::snprintf(name, sizeof(name), "orbital_%02zu.bfx", j + 1);
        save_field((fs::path(cfg.output_dir) / name).string(), rep.state.fermions[j]);
    }
    const Observables obs = observables(rep.state, params);
    write_radial_profile((fs::path(cfg.output_dir) / "profile_B.txt").string(),
                         obs.profile_B);
    write_radial_profile((fs::path(cfg.output_dir) / "profile_F.txt").string(),
                         obs.profile_F);

    if (cfg.release_enabled) {
        std::ofstream rel((fs::path(cfg.output_dir) / "release.csv").string());
        rel << "step,time,rms_B,rms_F,peak_nB,peak_nF\n";
        release_trap_and_evolve(
            rep.state, params, table, cfg.release_duration, opts.dt, 200,
            [&](const ReleaseSnapshot& s, const OrbitalSet&) {
                char buf[256];
                std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                              s.step, s.time, s.obs.rms_radius_B, s.obs.rms_radius_F,
                              s.obs.peak_density_B, s.obs.peak_density_F);
                rel << buf;
            });
    }

    report << "E_total = " << std::setprecision(17) << rep.final_energy.total << "\n"
           << "steps = " << rep.steps << "\n"
           << "wall_seconds = " << rep.wall_seconds << "\n"
           << "peak_memory_bytes = " << rep.peak_memory_bytes << "\n"
           << "DONE\n";
    return rep;
}

inline RunReport resume(const std::string& checkpoint_path) {
    CheckpointFile file(checkpoint_path);
    return run(file.checkpoint().config, &file.checkpoint());
}

// --- benchmark harness ------------------------------------------------------

struct ScalingRow {
    int threads = 1;
    double seconds = 0.0;
    double speedup = 1.0;
};

// Fixed workload (10^3 imaginary-time mixture steps on the configured grid)
// timed per thread count.
inline std::vector<ScalingRow> bench_scaling(const RunConfig& cfg,
                                             const std::vector<int>& thread_list,
                                             long workload_steps = 1000) {
    if (thread_list.empty()) throw std::invalid_argument("bench: empty thread list");
    const Grid3D g = cfg.grid();
    const MixtureParams params = cfg.physics();
    const AFunctionTable table = load_or_build_table(cfg.output_dir, params.w);
    OrbitalSet seed;
    seed.psi_b = gaussian_seed(g, 1.0 / std::sqrt(params.omega_B));
    seed.fermions = oscillator_shell_orbitals(g, params);

    std::vector<ScalingRow> rows;
    double base_seconds = 0.0;
    for (int t : thread_list) {
        if (t < 1) throw std::invalid_argument("bench: thread count must be >= 1");
        set_threads(t);
        OrbitalSet state = seed;
        detail::StopWatch watch;
        for (long s = 0; s < workload_steps; ++s)
            evolve_mixture_step(state, params, table, cfg.effective_dt(),
                                TimeMode::imaginary);
        ScalingRow row;
        row.threads = t;
        row.seconds = watch.seconds();
        if (rows.empty()) base_seconds = row.seconds;
        row.speedup = base_seconds / row.seconds;
        rows.push_back(row);
    }
    return rows;
}

inline void write_scaling_csv(std::ostream& os, const std::vector<ScalingRow>& rows) {
    os << "threads,seconds,speedup\n";
    for (const auto& r : rows) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%d,%.6g,%.6g\n", r.threads, r.seconds, r.speedup);
        os << buf;
    }
}

// --- method comparison --------------------------------------------------------

struct ComparisonRow {
    MethodKind method = MethodKind::itp_itp_gs;
    bool ok = false;
    std::string error;
    double energy = 0.0;
    long steps = 0;
    double wall_seconds = 0.0;
    std::size_t peak_memory_bytes = 0;
};

// One run per method on identical physics; failures are recorded per row and
// the remaining rows still run. Rows execute sequentially to keep timing
// honest.
inline std::vector<ComparisonRow> compare_methods(const RunConfig& base,
                                                  const std::vector<MethodKind>& methods) {
    if (methods.empty()) throw std::invalid_argument("compare: empty method list");
    std::vector<ComparisonRow> rows;
    for (MethodKind kind : methods) {
        RunConfig cfg = base;
        cfg.kind = kind;
        cfg.strategy.clear();
        cfg.output_dir = (std::filesystem::path(base.output_dir) /
                          detail::method_key(kind)).string();
        ComparisonRow row;
        row.method = kind;
        try {
            const RunReport rep = run(cfg);
            row.ok = true;
            row.energy = rep.final_energy.total;
            row.steps = rep.steps;
            row.wall_seconds = rep.wall_seconds;
            row.peak_memory_bytes = rep.peak_memory_bytes;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_comparison_table(std::ostream& os, const std::vector<ComparisonRow>& rows) {
    os << "method,E_total,steps,wall_seconds,peak_memory_bytes,error\n";
    for (const auto& r : rows) {
        char buf[256];
        if (r.ok)
            std::snprintf(buf, sizeof(buf), "%s,%.17g,%ld,%.6g,%zu,\n",
                          method_name(r.method), r.energy, r.steps, r.wall_seconds,
                          r.peak_memory_bytes);
        else
            std::snprintf(buf, sizeof(buf), "%s,,,,,%s\n", method_name(r.method),
                          r.error.c_str());
        os << buf;
    }
}

}  // namespace bfmix
