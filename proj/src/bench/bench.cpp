#include "sdmrg/bench/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "sdmrg/core/sector_ops.hpp"
#include "sdmrg/model/dense.hpp"
#include "sdmrg/sbmm4s/sbmm4s.hpp"
#include "sdmrg/ttcache/ttcache.hpp"

namespace sdmrg::bench {
namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw BenchError("csv line " + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(std::move(cur));
    return fields;
}

template <class T>
T parse_number(const std::string& s, std::size_t line_no) {
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw BenchError("csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
    return v;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

void fill(std::vector<double>& v, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& x : v) x = u(rng);
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    if (ec != std::errc()) throw BenchError("format_double: conversion failed");
    return {buf, p};
}

void write_csv(std::span<const BenchRecord> records, std::ostream& out) {
    out << "label,size,seconds,flops,gflops\n";
    for (const auto& r : records)
        out << csv_field(r.label) << ',' << format_double(r.size) << ',' << format_double(r.seconds) << ','
            << r.flops << ',' << format_double(r.gflops()) << '\n';
}

void write_csv(std::span<const BenchRecord> records, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw BenchError("cannot open " + path.string() + " for writing");
    write_csv(records, f);
    if (!f) throw BenchError("write failed for " + path.string());
}

std::vector<BenchRecord> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw BenchError("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "label,size,seconds,flops,gflops") throw BenchError("csv: unexpected header '" + line + "'");
    std::vector<BenchRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_csv_line(line, line_no);
        if (f.size() != 5) throw BenchError("csv line " + std::to_string(line_no) + ": expected 5 fields");
        BenchRecord r;
        r.label = f[0];
        r.size = parse_number<double>(f[1], line_no);
        r.seconds = parse_number<double>(f[2], line_no);
        r.flops = parse_number<std::uint64_t>(f[3], line_no);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<BenchRecord> read_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw BenchError("cannot open " + path.string());
    return read_csv(f);
}

void write_sweep_csv(std::span<const SweepRecord> records, std::ostream& out) {
    out << "sweep,direction,position,energy,truncation_error,lanczos_iterations,converged,seconds,flops\n";
    for (const auto& r : records)
        out << r.sweep << ',' << (r.direction == Direction::left_to_right ? "lr" : "rl") << ',' << r.position << ','
            << format_double(r.energy) << ',' << format_double(r.truncation_error) << ',' << r.lanczos_iterations
            << ',' << (r.converged ? 1 : 0) << ',' << format_double(r.seconds) << ',' << r.flops << '\n';
}

PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points) {
    if (points.size() < 3) throw BenchError("fit_power_law: at least three points are required");
    std::vector<double> lx, lt;
    for (const auto& [x, t] : points) {
        if (!(x > 0.0) || !(t > 0.0) || !std::isfinite(x) || !std::isfinite(t))
            throw BenchError("fit_power_law: values must be positive and finite");
        lx.push_back(std::log(x));
        lt.push_back(std::log(t));
    }
    const double n = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double mt = std::accumulate(lt.begin(), lt.end(), 0.0) / n;
    double sxx = 0.0, sxt = 0.0, stt = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxt += (lx[i] - mx) * (lt[i] - mt);
        stt += (lt[i] - mt) * (lt[i] - mt);
    }
    if (!(sxx > 0.0)) throw BenchError("fit_power_law: all x values are equal");
    PowerLawFit f;
    f.exponent = sxt / sxx;
    f.prefactor = std::exp(mt - f.exponent * mx);
    double sse = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double e = lt[i] - (mt + f.exponent * (lx[i] - mx));
        sse += e * e;
    }
    // zero variance in log t: a flat line explains everything
    f.r2 = stt > 1e-300 ? 1.0 - sse / stt : 1.0;
    return f;
}

double median_seconds(const std::function<void()>& fn, int reps) {
    if (reps < 1) throw BenchError("median_seconds: reps must be >= 1");
    std::vector<double> t;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    std::sort(t.begin(), t.end());
    const auto k = t.size() / 2;
    return t.size() % 2 ? t[k] : 0.5 * (t[k - 1] + t[k]);
}

std::map<std::string, std::string> parse_config(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw BenchError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty()) throw BenchError("config line " + std::to_string(line_no) + ": empty key");
        if (!out.emplace(key, value).second)
            throw BenchError("config line " + std::to_string(line_no) + ": repeated key '" + key + "'");
    }
    return out;
}

std::map<std::string, std::string> load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw BenchError("cannot open config file " + path.string());
    return parse_config(f);
}

std::vector<BenchRecord> bench_kernel(std::span<const Index> sizes, std::span<const Index> batch, int reps,
                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<BenchRecord> out;
    for (Index s : sizes)
        for (Index p : batch) {
            if (s < 1 || p < 1) throw BenchError("bench_kernel: sizes must be positive");
            std::vector<double> a(static_cast<std::size_t>(s * s)), l(static_cast<std::size_t>(s * s * p)),
                r(static_cast<std::size_t>(s * s * p)), b(static_cast<std::size_t>(s * s)),
                ws(static_cast<std::size_t>(s * p * s));
            fill(a, rng);
            fill(l, rng);
            fill(r, rng);
            sbmm4s::AccumulationProblem pr;
            pr.a = {a.data(), s, s, s};
            pr.b = {b.data(), s, s, s};
            pr.left = sbmm4s::StridedStack::contiguous(l.data(), s, s, p);
            pr.right = sbmm4s::StridedStack::contiguous(r.data(), s, s, p);
            const double t = median_seconds([&] { sbmm4s::sbmm4s(pr, ws); }, reps);
            out.push_back({"sbmm4s_m" + std::to_string(s) + "_p" + std::to_string(p), static_cast<double>(s), t,
                           sbmm4s::flop_count(s, s, s, s, p)});
        }
    return out;
}

std::vector<BenchRecord> bench_sweep(const Model& model, std::span<const std::size_t> bond_dims, int sweeps,
                                     std::size_t workers, int reps, std::uint64_t seed) {
    std::vector<BenchRecord> out;
    for (std::size_t d : bond_dims) {
        DmrgConfig c;
        c.bond_dims = {d};
        c.sweeps = sweeps;
        c.workers = workers;
        c.seed = seed;
        std::uint64_t flops = 0;
        std::vector<double> times;
        for (int k = 0; k < reps; ++k) {
            DmrgEngine eng(model, c);
            eng.warmup();
            const auto t0 = std::chrono::steady_clock::now();
            const auto recs = eng.run();
            times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
            flops = 0;
            for (const auto& r : recs) flops += r.flops;
        }
        std::sort(times.begin(), times.end());
        const auto m = times.size() / 2;
        const double t = times.size() % 2 ? times[m] : 0.5 * (times[m - 1] + times[m]);
        out.push_back({"sweep_n" + std::to_string(model.n_sites) + "_d" + std::to_string(d), static_cast<double>(d),
                       t, flops});
    }
    return out;
}

// ------------------------------------------------------------------ checks

namespace {

SectorBasis random_basis(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> ns(1, 4), q(-1, 1);
    std::uniform_int_distribution<Index> dim(1, 4);
    std::map<QuantumNumber, Index> m;
    const int want = ns(rng);
    while (static_cast<int>(m.size()) < want) m.emplace(QuantumNumber(q(rng), q(rng)), dim(rng));
    return SectorBasis({m.begin(), m.end()});
}

SectorMatrix random_operator(const SectorBasis& rows, const SectorBasis& cols, QuantumNumber delta,
                             std::mt19937_64& rng) {
    SectorMatrix m(rows, cols, delta);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto& e : cols.entries())
        if (rows.contains(e.qn + delta))
            for (double& x : m.block_for_col(e.qn).values()) x = u(rng);
    return m;
}

QuantumNumber connecting_shift(const SectorBasis& rows, const SectorBasis& cols, std::mt19937_64& rng) {
    const auto r = rows.entries(), c = cols.entries();
    return r[std::uniform_int_distribution<std::size_t>(0, r.size() - 1)(rng)].qn -
           c[std::uniform_int_distribution<std::size_t>(0, c.size() - 1)(rng)].qn;
}

Matrix plain_product(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (Index k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

double rel_frobenius(const Matrix& a, const Matrix& b) {
    double num = 0.0, den = 0.0;
    for (Index k = 0; k < a.size(); ++k) {
        num += (a.data()[k] - b.data()[k]) * (a.data()[k] - b.data()[k]);
        den += b.data()[k] * b.data()[k];
    }
    return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

CheckResult check_sector(std::mt19937_64& rng) {
    CheckResult r{"sector", true, ""};
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const SectorBasis x = random_basis(rng), y = random_basis(rng), z = random_basis(rng);
        const SectorMatrix a = random_operator(x, y, connecting_shift(x, y, rng), rng);
        const SectorMatrix b = random_operator(y, z, connecting_shift(y, z, rng), rng);
        const Matrix ref = plain_product(densify(a), densify(b));
        worst = std::max(worst, rel_frobenius(densify(multiply(a, b)), ref));
        const SectorMatrix kr = kron(a, b);
        const Matrix da = densify(a), db = densify(b), dk = densify(kr);
        const auto pr = kron_permutation(x, y), pc = kron_permutation(y, z);
        Matrix plain(dk.rows(), dk.cols());
        for (Index i = 0; i < dk.rows(); ++i)
            for (Index j = 0; j < dk.cols(); ++j) plain(i, j) = dk(pr[static_cast<std::size_t>(i)], pc[static_cast<std::size_t>(j)]);
        worst = std::max(worst, rel_frobenius(plain, dense::kron(da, db)));
    }
    r.passed = worst <= 1e-12;
    r.detail = "max relative deviation " + format_double(worst);
    return r;
}

CheckResult check_sbmm4s(std::mt19937_64& rng) {
    CheckResult r{"sbmm4s", true, ""};
    std::uniform_int_distribution<Index> dim(1, 12), pp(1, 8);
    double worst = 0.0;
    bool calls_ok = true;
    for (int k = 0; k < 200; ++k) {
        const Index m = dim(rng), n = dim(rng), q = dim(rng), rr = dim(rng), p = pp(rng);
        std::vector<double> a(static_cast<std::size_t>(m * n)), l(static_cast<std::size_t>(q * m * p)),
            rt(static_cast<std::size_t>(rr * n * p)), b(static_cast<std::size_t>(q * rr));
        fill(a, rng);
        fill(l, rng);
        fill(rt, rng);
        fill(b, rng);
        std::vector<double> ref = b;
        const double alpha = 0.75;
        for (Index i = 0; i < p; ++i)
            for (Index x = 0; x < q; ++x)
                for (Index y = 0; y < rr; ++y) {
                    double s = 0.0;
                    for (Index u = 0; u < m; ++u)
                        for (Index v = 0; v < n; ++v)
                            s += l[static_cast<std::size_t>(i * q * m + x + u * q)] * a[static_cast<std::size_t>(u + v * m)] *
                                 rt[static_cast<std::size_t>(i * rr * n + y + v * rr)];
                    ref[static_cast<std::size_t>(x + y * q)] += alpha * s;
                }
        sbmm4s::AccumulationProblem pr;
        pr.alpha = alpha;
        pr.a = {a.data(), m, n, m};
        pr.b = {b.data(), q, rr, q};
        pr.left = sbmm4s::StridedStack::contiguous(l.data(), q, m, p);
        pr.right = sbmm4s::StridedStack::contiguous(rt.data(), rr, n, p);
        std::vector<double> ws(static_cast<std::size_t>(sbmm4s::fused_workspace(pr)));
        const auto before = kernels::kernel_snapshot();
        sbmm4s::sbmm4s(pr, ws);
        if ((kernels::kernel_snapshot() - before).kernel_calls != 2) calls_ok = false;
        double scale = 0.0, dev = 0.0;
        for (std::size_t i = 0; i < ref.size(); ++i) {
            scale = std::max(scale, std::abs(ref[i]));
            dev = std::max(dev, std::abs(ref[i] - b[i]));
        }
        worst = std::max(worst, dev / std::max(scale, 1e-300));
    }
    r.passed = worst <= 1e-12 && calls_ok;
    r.detail = "max relative deviation " + format_double(worst) + (calls_ok ? "" : ", kernel call count != 2");
    return r;
}

ttcache::DependencyNode random_tree(std::mt19937_64& rng, std::size_t& budget, std::size_t& next_id, int depth) {
    ttcache::DependencyNode n;
    n.id = next_id++;
    n.payload_size = 8 * std::uniform_int_distribution<std::size_t>(1, 16)(rng);
    const auto id = n.id;
    n.loader = [id](std::span<std::byte> dst) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<std::byte>((id * 31 + i) & 0xff);
    };
    --budget;
    const auto kids = depth > 5 ? 0 : std::uniform_int_distribution<int>(0, 3)(rng);
    for (int k = 0; k < kids && budget > 0; ++k) n.children.push_back(random_tree(rng, budget, next_id, depth + 1));
    return n;
}

CheckResult check_ttcache(std::mt19937_64& rng) {
    CheckResult r{"ttcache", true, ""};
    for (int k = 0; k < 100 && r.passed; ++k) {
        std::size_t budget = std::uniform_int_distribution<std::size_t>(1, 64)(rng), next = 0;
        const ttcache::DependencyNode root = random_tree(rng, budget, next, 0);
        const std::size_t need = ttcache::plan_check(root);
        ttcache::Arena arena(need);
        const auto st = ttcache::ttcache_run(root, arena);
        const std::size_t nodes = ttcache::node_count(root);
        const bool has_child = !root.children.empty();
        const auto naive = ttcache::naive_copy_bytes(root);
        if (st.loads != nodes || st.peak_offset != need || arena.offset() != 0 || st.bytes_copied > naive ||
            (has_child && st.bytes_copied >= naive)) {
            r.passed = false;
            r.detail = "tree " + std::to_string(k) + " violates the traversal invariants";
        }
    }
    if (r.passed) r.detail = "100 random trees";
    return r;
}

CheckResult check_mazerunner(std::size_t workers) {
    CheckResult r{"mazerunner", true, ""};
    mazerunner::RunnerPool pool(std::max<std::size_t>(workers, 2));
    mazerunner::KeyedSink<int, long> sink;
    mazerunner::RangeMaze maze(1000, [&](std::size_t i, std::vector<mazerunner::Task>& found) {
        mazerunner::Task t;
        t.run = [&sink, i](mazerunner::TaskContext&) { sink.accumulate(static_cast<int>(i % 7), static_cast<long>(i)); };
        found.push_back(std::move(t));
    });
    const auto st = pool.run_batch(maze);
    long total = 0;
    for (const auto& [k, v] : sink.snapshot()) total += v;
    r.passed = st.executed == 1000 && st.failed == 0 && total == 999L * 1000L / 2;
    r.detail = std::to_string(st.executed) + " tasks executed";
    return r;
}

CheckResult check_dmrg(std::size_t workers) {
    CheckResult r{"dmrg-small", true, ""};
    std::ostringstream msg;
    auto run = [&](const Model& m, std::size_t d, const char* name) {
        DmrgConfig c;
        c.bond_dims = {d};
        c.sweeps = 2;
        c.workers = workers;
        DmrgEngine eng(m, c);
        eng.run();
        const auto states = dense::sector_states(m, m.default_target());
        const double e0 = dense::eigenvalues(dense::hamiltonian(m, states)).front();
        const double rel = std::abs(eng.energy() - e0) / std::abs(e0);
        msg << (msg.tellp() > 0 ? "; " : "") << name << " rel.err " << format_double(rel);
        if (!(rel <= 1e-9)) r.passed = false;
    };
    run(heisenberg_chain(8, 1.0), 16, "heisenberg N=8");
    ModelParams p;
    p.kind = ModelKind::hubbard_chain;
    p.n = 4;
    p.u = 4.0;
    run(build_model(p), 64, "hubbard N=4");
    r.detail = msg.str();
    return r;
}

}  // namespace

std::vector<CheckResult> run_checks(std::size_t workers, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<CheckResult> out;
    auto guarded = [&](const char* name, const std::function<CheckResult()>& fn) {
        try {
            out.push_back(fn());
        } catch (const std::exception& e) {
            out.push_back({name, false, e.what()});
        }
    };
    guarded("sector", [&] { return check_sector(rng); });
    guarded("sbmm4s", [&] { return check_sbmm4s(rng); });
    guarded("ttcache", [&] { return check_ttcache(rng); });
    guarded("mazerunner", [&] { return check_mazerunner(workers); });
    guarded("dmrg-small", [&] { return check_dmrg(workers); });
    return out;
}

}  // namespace sdmrg::bench
