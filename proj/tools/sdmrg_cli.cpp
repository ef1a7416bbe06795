#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdmrg/bench/bench.hpp"
#include "sdmrg/dmrg/checkpoint.hpp"
#include "sdmrg/model/integrals.hpp"

namespace {

using namespace sdmrg;
using Settings = std::map<std::string, std::string>;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kConfigError = 2;
constexpr int kNotConverged = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flags are registered as strings and merged over the config file, so both
// sources go through the same parsing and validation.
class Options {
public:
    explicit Options(CLI::App* cmd) : cmd_(cmd) {
        cmd_->add_option("--config", config_path_, "key = value file; flags override it");
    }

    void add(const std::string& key, const std::string& help) {
        opts_[key] = cmd_->add_option("--" + key, values_[key], help);
    }
    void add_flag(const std::string& key, const std::string& help) {
        opts_[key] = cmd_->add_flag("--" + key, help);
    }

    Settings merged() const {
        Settings s;
        if (!config_path_.empty()) {
            try {
                s = bench::load_config(config_path_);
            } catch (const bench::BenchError& e) {
                throw ConfigError(e.what());
            }
            for (const auto& [k, v] : s)
                if (!opts_.contains(k)) throw ConfigError("unknown config key '" + k + "'");
        }
        for (const auto& [k, opt] : opts_) {
            if (opt->count() == 0) continue;
            s[k] = values_.contains(k) ? values_.at(k) : "true";
        }
        return s;
    }

private:
    CLI::App* cmd_;
    std::string config_path_;
    std::map<std::string, std::string> values_;
    std::map<std::string, CLI::Option*> opts_;
};

template <class T>
T number(const Settings& s, const std::string& key, T fallback) {
    const auto it = s.find(key);
    if (it == s.end()) return fallback;
    const std::string& v = it->second;
    T out{};
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("invalid value for " + key + ": '" + v + "'");
    return out;
}

template <class T>
std::vector<T> number_list(const Settings& s, const std::string& key, std::vector<T> fallback) {
    const auto it = s.find(key);
    if (it == s.end()) return fallback;
    std::vector<T> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(number<T>({{key, item}}, key, T{}));
    if (out.empty()) throw ConfigError("empty list for " + key);
    return out;
}

bool boolean(const Settings& s, const std::string& key) {
    const auto it = s.find(key);
    if (it == s.end()) return false;
    if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
    if (it->second == "false" || it->second == "0" || it->second == "no") return false;
    throw ConfigError("invalid boolean for " + key + ": '" + it->second + "'");
}

std::size_t workers(const Settings& s) {
    if (s.contains("workers")) return number<std::size_t>(s, "workers", 1);
    if (const char* env = std::getenv("SECTOR_DMRG_WORKERS"); env && *env)
        return number<std::size_t>({{"SECTOR_DMRG_WORKERS", env}}, "SECTOR_DMRG_WORKERS", 1);
    return 1;
}

void add_model_options(Options& o) {
    o.add("model", "heisenberg | hubbard | file");
    o.add("n", "number of sites");
    o.add("j", "Heisenberg coupling");
    o.add("t", "Hubbard hopping");
    o.add("u", "Hubbard interaction");
    o.add("integrals", "integral file for --model file");
}

Model model_from(const Settings& s) {
    const std::string kind = s.contains("model") ? s.at("model") : "heisenberg";
    ModelParams p;
    if (kind == "heisenberg")
        p.kind = ModelKind::heisenberg_chain;
    else if (kind == "hubbard")
        p.kind = ModelKind::hubbard_chain;
    else if (kind == "file")
        p.kind = ModelKind::integral_file;
    else
        throw ConfigError("unknown model '" + kind + "'");
    p.n = number<int>(s, "n", 0);
    p.j = number<double>(s, "j", 1.0);
    p.t = number<double>(s, "t", 1.0);
    p.u = number<double>(s, "u", 0.0);
    if (s.contains("integrals")) p.path = s.at("integrals");
    return build_model(p);
}

std::ostream* open_out(const Settings& s, std::ofstream& file) {
    if (!s.contains("out") || s.at("out") == "-") return &std::cout;
    file.open(s.at("out"), std::ios::binary | std::ios::trunc);
    if (!file) throw ConfigError("cannot open " + s.at("out") + " for writing");
    return &file;
}

int run_solve(const Settings& s) {
    const Model model = model_from(s);
    DmrgConfig c;
    c.bond_dims = number_list<std::size_t>(s, "d", {64});
    c.sweeps = number<int>(s, "sweeps", 3);
    c.workers = workers(s);
    c.arena_bytes = number<std::size_t>(s, "arena-bytes", 0);
    c.seed = number<std::uint64_t>(s, "seed", 42);
    if (s.contains("particles") || s.contains("twosz")) {
        const QuantumNumber def = model.default_target();
        c.target = QuantumNumber(number<int>(s, "particles", def.c[0]), number<int>(s, "twosz", def.c[1]));
    }
    if (s.contains("checkpoint")) {
        c.checkpoint_path = s.at("checkpoint");
        c.checkpoint_each_sweep = true;
    }
    try {
        c.validate();
    } catch (const DmrgError& e) {
        throw ConfigError(e.what());
    }

    const bool resume = boolean(s, "resume");
    if (resume && c.checkpoint_path.empty()) throw ConfigError("--resume needs --checkpoint");
    std::optional<DmrgEngine> engine;
    try {
        if (resume)
            engine.emplace(DmrgEngine::resume(model, c, c.checkpoint_path));
        else
            engine.emplace(model, c);
    } catch (const CheckpointError& e) {
        throw ConfigError(e.what());
    }
    engine->run();

    if (s.contains("out")) {
        std::ofstream file;
        bench::write_sweep_csv(engine->records(), *open_out(s, file));
    }
    const auto sweeps = engine->sweep_energies();
    for (std::size_t k = 0; k < sweeps.size(); ++k)
        std::cout << "sweep " << k << " energy " << bench::format_double(sweeps[k]) << '\n';
    std::cout << "energy = " << bench::format_double(engine->energy()) << '\n';

    bool converged = !engine->records().empty();
    const int last = engine->records().empty() ? 0 : engine->records().back().sweep;
    for (const auto& r : engine->records())
        if (r.sweep == last && !r.converged) converged = false;
    if (!converged) {
        std::cerr << "error: Lanczos did not converge in the final sweep\n";
        return kNotConverged;
    }
    return kOk;
}

int run_bench_kernel(const Settings& s) {
    const auto sizes = number_list<Index>(s, "sizes", {8, 16, 32, 64});
    const auto batch = number_list<Index>(s, "batch", {16});
    const auto recs = bench::bench_kernel(sizes, batch, number<int>(s, "reps", 5), number<std::uint64_t>(s, "seed", 42));
    std::ofstream file;
    bench::write_csv(recs, *open_out(s, file));
    return kOk;
}

int run_bench_sweep(const Settings& s) {
    const Model model = model_from(s);
    const auto d = number_list<std::size_t>(s, "d", {32, 64, 128, 256});
    const auto recs = bench::bench_sweep(model, d, number<int>(s, "sweeps", 2), workers(s), number<int>(s, "reps", 5),
                                         number<std::uint64_t>(s, "seed", 42));
    std::ofstream file;
    bench::write_csv(recs, *open_out(s, file));
    return kOk;
}

int run_fit(const std::string& csv, const Settings& s) {
    std::vector<bench::BenchRecord> recs;
    try {
        recs = bench::read_csv(std::filesystem::path(csv));
    } catch (const bench::BenchError& e) {
        throw ConfigError(e.what());
    }
    const std::string prefix = s.contains("label") ? s.at("label") : "";
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : recs)
        if (r.label.starts_with(prefix)) pts.emplace_back(r.size, r.seconds);
    bench::PowerLawFit f;
    try {
        f = bench::fit_power_law(pts);
    } catch (const bench::BenchError& e) {
        throw ConfigError(e.what());
    }
    std::cout << std::fixed << std::setprecision(6) << "exponent " << f.exponent << '\n'
              << std::scientific << "prefactor " << f.prefactor << '\n'
              << std::fixed << "r2 " << f.r2 << '\n';
    return kOk;
}

int run_check(const Settings& s) {
    const auto results = bench::run_checks(workers(s), number<std::uint64_t>(s, "seed", 42));
    bool all = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
        all = all && r.passed;
    }
    return all ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sector-sparse DMRG driver"};
    app.require_subcommand(1);

    auto* solve = app.add_subcommand("solve", "run DMRG, write sweep CSV and the final energy");
    Options solve_o(solve);
    add_model_options(solve_o);
    for (const auto& [k, h] : std::vector<std::pair<std::string, std::string>>{
             {"d", "bond dimension or comma-separated per-sweep schedule"},
             {"sweeps", "number of sweeps"},
             {"workers", "worker threads (fallback: SECTOR_DMRG_WORKERS)"},
             {"arena-bytes", "ttcache arena capacity per worker, 0 = auto"},
             {"seed", "random seed"},
             {"particles", "target particle number"},
             {"twosz", "target 2*Sz"},
             {"out", "sweep CSV path"},
             {"checkpoint", "checkpoint file, written after every sweep"}})
        solve_o.add(k, h);
    solve_o.add_flag("resume", "continue from --checkpoint");

    auto* kernel = app.add_subcommand("bench-kernel", "time fused sbmm4s over problem sizes");
    Options kernel_o(kernel);
    for (const auto& [k, h] : std::vector<std::pair<std::string, std::string>>{
             {"sizes", "comma-separated m = n = q = r"},
             {"batch", "comma-separated member counts p"},
             {"reps", "repetitions per point"},
             {"seed", "random seed"},
             {"out", "CSV path (default stdout)"}})
        kernel_o.add(k, h);

    auto* sweep = app.add_subcommand("bench-sweep", "time DMRG sweeps over bond dimensions");
    Options sweep_o(sweep);
    add_model_options(sweep_o);
    for (const auto& [k, h] : std::vector<std::pair<std::string, std::string>>{
             {"d", "comma-separated bond dimensions"},
             {"sweeps", "sweeps per run"},
             {"workers", "worker threads (fallback: SECTOR_DMRG_WORKERS)"},
             {"reps", "repetitions per point"},
             {"seed", "random seed"},
             {"out", "CSV path (default stdout)"}})
        sweep_o.add(k, h);

    auto* fit = app.add_subcommand("fit", "fit seconds = c * size^k to a benchmark CSV");
    std::string fit_csv;
    fit->add_option("csv", fit_csv, "benchmark CSV")->required();
    Options fit_o(fit);
    fit_o.add("label", "only rows whose label starts with this prefix");

    auto* check = app.add_subcommand("check", "run the oracle suites on small instances");
    Options check_o(check);
    check_o.add("workers", "worker threads (fallback: SECTOR_DMRG_WORKERS)");
    check_o.add("seed", "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return kConfigError;
    }

    try {
        if (*solve) return run_solve(solve_o.merged());
        if (*kernel) return run_bench_kernel(kernel_o.merged());
        if (*sweep) return run_bench_sweep(sweep_o.merged());
        if (*fit) return run_fit(fit_csv, fit_o.merged());
        if (*check) return run_check(check_o.merged());
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const IntegralsError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailed;
    }
    return kConfigError;
}
