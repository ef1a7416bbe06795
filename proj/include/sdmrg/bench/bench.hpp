#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdmrg/dmrg/dmrg.hpp"

namespace sdmrg::bench {

class BenchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BenchRecord {
    std::string label;
    double size = 0.0;  // D, p or N
    double seconds = 0.0;
    std::uint64_t flops = 0;

    double gflops() const { return seconds > 0.0 ? static_cast<double>(flops) / seconds / 1e9 : 0.0; }
    bool operator==(const BenchRecord&) const = default;
};

/// Shortest form that reads back to the same double, at most 17 digits.
std::string format_double(double v);

/// Header `label,size,seconds,flops,gflops`, LF line endings; labels are
/// quoted when they contain a comma, quote or newline.
void write_csv(std::span<const BenchRecord> records, std::ostream& out);
void write_csv(std::span<const BenchRecord> records, const std::filesystem::path& path);
std::vector<BenchRecord> read_csv(std::istream& in);
std::vector<BenchRecord> read_csv(const std::filesystem::path& path);

/// One line per DMRG iteration.
void write_sweep_csv(std::span<const SweepRecord> records, std::ostream& out);

struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double r2 = 0.0;  // 1.0 when the data has no variance to explain
};

/// Least squares of log t against log x. Needs >= 3 points, all positive.
PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points);

/// Median wall time of `reps` calls on a monotonic clock.
double median_seconds(const std::function<void()>& fn, int reps = 5);

/// `key = value` lines, `#` starts a comment. Throws BenchError with the line
/// number on malformed lines or repeated keys.
std::map<std::string, std::string> parse_config(std::istream& in);
std::map<std::string, std::string> load_config(const std::filesystem::path& path);

/// Fused sbmm4s on random problems with m = n = q = r = size and `p` members.
std::vector<BenchRecord> bench_kernel(std::span<const Index> sizes, std::span<const Index> batch, int reps = 5,
                                      std::uint64_t seed = 42);

/// Sweep time (warmup excluded) of `sweeps` sweeps for every D; flops are
/// the summed iteration estimates of one run.
std::vector<BenchRecord> bench_sweep(const Model& model, std::span<const std::size_t> bond_dims, int sweeps,
                                     std::size_t workers, int reps = 5, std::uint64_t seed = 42);

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Small oracle suites: sector, sbmm4s, ttcache, mazerunner, dmrg-small.
std::vector<CheckResult> run_checks(std::size_t workers = 1, std::uint64_t seed = 42);

}  // namespace sdmrg::bench
