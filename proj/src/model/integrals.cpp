#include "sdmrg/model/integrals.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace sdmrg {
namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line.substr(0, line.find('#')));
    for (std::string tok; ss >> tok;) out.push_back(tok);
    return out;
}

double to_double(const std::string& s, int line) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw IntegralsError("malformed number '" + s + "'", line);
    if (!std::isfinite(v)) throw IntegralsError("non-finite value '" + s + "'", line);
    return v;
}

int to_int(const std::string& s, int line) {
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw IntegralsError("malformed index '" + s + "'", line);
    return v;
}

bool is_integer(const std::string& s) {
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

}  // namespace

void Integrals::add_two_body(int i, int j, int k, int l, double v) {
    two_body.push_back({{i, j, k, l}, v});
}

void Integrals::normalize() {
    std::map<std::array<int, 4>, double> merged;
    for (const auto& e : two_body) merged[e.idx] += e.value;
    two_body.clear();
    for (const auto& [idx, v] : merged)
        if (v != 0.0) two_body.push_back({idx, v});
}

void Integrals::validate() const {
    if (n_modes < 1) throw IntegralsError("integrals: mode count must be positive");
    if (one_body.rows() != n_modes || one_body.cols() != n_modes)
        throw IntegralsError("integrals: one-body matrix has wrong shape");
    for (int i = 0; i < n_modes; ++i)
        for (int j = 0; j < n_modes; ++j) {
            if (!std::isfinite(one_body(i, j))) throw IntegralsError("integrals: non-finite T entry");
            if (std::abs(one_body(i, j) - one_body(j, i)) > 1e-12)
                throw IntegralsError("integrals: T is not symmetric at (" + std::to_string(i + 1) +
                                     "," + std::to_string(j + 1) + ")");
        }
    for (const auto& e : two_body) {
        for (int x : e.idx)
            if (x < 0 || x >= n_modes) throw IntegralsError("integrals: V index out of range");
        if (!std::isfinite(e.value)) throw IntegralsError("integrals: non-finite V entry");
    }
}

Integrals parse_integrals(std::istream& in) {
    std::string raw;
    int lineno = 0;
    int n = -1;
    std::map<std::pair<int, int>, double> t_given;
    std::vector<std::pair<TwoBodyEntry, int>> v_given;
    double e0 = 0.0;

    auto index = [&](const std::string& s, int line) {
        const int v = to_int(s, line);
        if (v < 1 || v > n)
            throw IntegralsError("index " + s + " out of range 1.." + std::to_string(n), line);
        return v - 1;
    };

    while (std::getline(in, raw)) {
        ++lineno;
        auto tok = tokenize(raw);
        if (tok.empty()) continue;
        if (n < 0) {
            if (tok.size() == 2 && tok[0] == "N")
                n = to_int(tok[1], lineno);
            else if (tok.size() == 1 && is_integer(tok[0]))
                n = to_int(tok[0], lineno);
            else
                throw IntegralsError("expected header 'N <modes>'", lineno);
            if (n < 1) throw IntegralsError("mode count must be positive", lineno);
            continue;
        }
        std::string label = tok[0];
        if (label == "1") label = "T";
        else if (label == "2") label = "V";
        else if (label == "0") label = "E0";

        if (label == "T" && tok.size() == 4) {
            t_given[{index(tok[1], lineno), index(tok[2], lineno)}] += to_double(tok[3], lineno);
        } else if (label == "V" && tok.size() == 6) {
            TwoBodyEntry e{{index(tok[1], lineno), index(tok[2], lineno), index(tok[3], lineno),
                            index(tok[4], lineno)},
                           to_double(tok[5], lineno)};
            v_given.emplace_back(e, lineno);
        } else if (label == "E0" && tok.size() == 2) {
            e0 += to_double(tok[1], lineno);
        } else {
            throw IntegralsError("malformed line '" + raw + "'", lineno);
        }
    }
    if (n < 0) throw IntegralsError("missing header 'N <modes>'");

    Integrals ints(n);
    ints.core_energy = e0;
    for (const auto& [ij, v] : t_given) {
        const auto [i, j] = ij;
        if (auto it = t_given.find({j, i}); it != t_given.end() && i != j) {
            if (std::abs(it->second - v) > 1e-12)
                throw IntegralsError("T(" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                     ") and its transpose differ");
        }
        ints.one_body(i, j) = v;
        if (!t_given.contains({j, i})) ints.one_body(j, i) = v;
    }
    // keep exact symmetry: the lower-index entry wins when both were given
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) ints.one_body(j, i) = ints.one_body(i, j);
    for (const auto& [e, line] : v_given) {
        (void)line;
        ints.two_body.push_back(e);
    }
    ints.normalize();
    ints.validate();
    return ints;
}

Integrals load_integrals(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IntegralsError("cannot open integral file '" + path + "'");
    return parse_integrals(f);
}

void write_integrals(const Integrals& ints, std::ostream& out) {
    char buf[64];
    auto num = [&](double v) {
        const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
        return std::string(buf, r.ptr);
    };
    out << "N " << ints.n_modes << '\n';
    for (int i = 0; i < ints.n_modes; ++i)
        for (int j = i; j < ints.n_modes; ++j)
            if (ints.one_body(i, j) != 0.0)
                out << "T " << i + 1 << ' ' << j + 1 << ' ' << num(ints.one_body(i, j)) << '\n';
    for (const auto& e : ints.two_body)
        out << "V " << e.idx[0] + 1 << ' ' << e.idx[1] + 1 << ' ' << e.idx[2] + 1 << ' '
            << e.idx[3] + 1 << ' ' << num(e.value) << '\n';
    if (ints.core_energy != 0.0) out << "E0 " << num(ints.core_energy) << '\n';
}

void save_integrals(const Integrals& ints, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IntegralsError("cannot write integral file '" + path + "'");
    write_integrals(ints, f);
    if (!f) throw IntegralsError("write failed for '" + path + "'");
}

}  // namespace sdmrg
