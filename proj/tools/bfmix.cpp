// Command-line front end.
//
// Subcommands: run <config>, bench <config> --threads, compare <config>
// --methods, resume <checkpoint>, afun-table --w --out.
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "bfmix/bfmix.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw bfmix::ConfigError({"cannot open config file: " + path});
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// BFMIX_THREADS beats the config file.
void apply_thread_override(bfmix::RunConfig& cfg) {
    const char* env = std::getenv("BFMIX_THREADS");
    if (!env || !*env) return;
    char* end = nullptr;
    const long t = std::strtol(env, &end, 10);
    if (*end != '\0' || t < 1)
        throw bfmix::ConfigError({"BFMIX_THREADS: expected a positive integer, got '" +
                                  std::string(env) + "'"});
    cfg.threads = static_cast<int>(t);
}

bfmix::MethodKind method_arg(const std::string& s) {
    const auto k = bfmix::detail::method_from_string(s);
    if (!k)
        throw bfmix::ConfigError({"unknown method '" + s +
                                  "' (expected itp_itp_gs, a_rtp, itp_iev_1d or itp_iev_3d)"});
    return *k;
}

int cmd_run(const std::string& config_path) {
    bfmix::RunConfig cfg = bfmix::parse_config(slurp(config_path));
    apply_thread_override(cfg);
    const bfmix::RunReport rep = bfmix::run(cfg);
    std::cout << bfmix::method_name(rep.method) << " E_total = " << std::setprecision(17)
              << rep.final_energy.total << " after " << rep.steps << " steps ("
              << rep.wall_seconds << " s)\n";
    return 0;
}

int cmd_resume(const std::string& checkpoint_path) {
    bfmix::CheckpointFile file(checkpoint_path);
    apply_thread_override(file.checkpoint().config);
    const bfmix::RunReport rep = bfmix::run(file.checkpoint().config, &file.checkpoint());
    std::cout << bfmix::method_name(rep.method) << " E_total = " << std::setprecision(17)
              << rep.final_energy.total << " after " << rep.steps << " steps (resumed)\n";
    return 0;
}

int cmd_bench(const std::string& config_path, const std::vector<int>& threads) {
    bfmix::RunConfig cfg = bfmix::parse_config(slurp(config_path));
    const auto rows = bfmix::bench_scaling(cfg, threads);
    std::filesystem::create_directories(cfg.output_dir);
    const std::string out =
        (std::filesystem::path(cfg.output_dir) / "scaling.csv").string();
    std::ofstream os(out);
    bfmix::write_scaling_csv(os, rows);
    bfmix::write_scaling_csv(std::cout, rows);
    return 0;
}

int cmd_compare(const std::string& config_path, const std::vector<std::string>& methods) {
    bfmix::RunConfig cfg = bfmix::parse_config(slurp(config_path));
    apply_thread_override(cfg);
    std::vector<bfmix::MethodKind> kinds;
    kinds.reserve(methods.size());
    for (const auto& m : methods) kinds.push_back(method_arg(m));
    const auto rows = bfmix::compare_methods(cfg, kinds);
    std::filesystem::create_directories(cfg.output_dir);
    const std::string out =
        (std::filesystem::path(cfg.output_dir) / "comparison.csv").string();
    std::ofstream os(out);
    bfmix::write_comparison_table(os, rows);
    bfmix::write_comparison_table(std::cout, rows);
    for (const auto& r : rows)
        if (!r.ok) return kExitNumerical;
    return 0;
}

int cmd_afun_table(double w, const std::string& out) {
    if (!(w > 0.0)) throw bfmix::ConfigError({"--w: mass ratio must be positive"});
    const bfmix::AFunctionTable tab = bfmix::AFunctionTable::build(w);
    tab.save(out);
    std::cout << "wrote A(w=" << w << ", alpha) table (" << tab.nodes() << " nodes, alpha in ["
              << tab.alpha_min() << ", " << tab.alpha_max() << "]) to " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bfmix: ground states and droplet dynamics of trapped Bose-Fermi mixtures"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, table_out;
    std::vector<int> threads{1};
    std::vector<std::string> methods;
    double w = 1.0;

    auto* run_cmd = app.add_subcommand("run", "run a configured ground-state computation");
    run_cmd->add_option("config", config_path, "configuration file")->required();

    auto* bench_cmd = app.add_subcommand("bench", "thread-scaling benchmark");
    bench_cmd->add_option("config", config_path, "configuration file")->required();
    bench_cmd->add_option("--threads", threads, "thread counts to time")->required();

    auto* compare_cmd = app.add_subcommand("compare", "run several methods on one physics");
    compare_cmd->add_option("config", config_path, "configuration file")->required();
    compare_cmd->add_option("--methods", methods, "methods to compare")->required();

    auto* resume_cmd = app.add_subcommand("resume", "resume from a checkpoint");
    resume_cmd->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();

    auto* table_cmd = app.add_subcommand("afun-table", "precompute an A(w, alpha) table");
    table_cmd->add_option("--w", w, "fermion/boson mass ratio")->required();
    table_cmd->add_option("--out", table_out, "output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(config_path);
        if (bench_cmd->parsed()) return cmd_bench(config_path, threads);
        if (compare_cmd->parsed()) return cmd_compare(config_path, methods);
        if (resume_cmd->parsed()) return cmd_resume(checkpoint_path);
        if (table_cmd->parsed()) return cmd_afun_table(w, table_out);
    } catch (const bfmix::ConfigError& e) {
        std::cerr << "bfmix: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "bfmix: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitConfig;
}
