#include "sdmrg/dmrg/dmrg.hpp"

#include <algorithm>
#include <chrono>

#include "sdmrg/dmrg/checkpoint.hpp"

namespace sdmrg {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

bool same_layout(const WaveLayout& a, const WaveLayout& b) {
    return a.left() == b.left() && a.right() == b.right() && a.target() == b.target();
}

}  // namespace

void DmrgConfig::validate() const {
    if (bond_dims.empty()) throw DmrgError("config: no bond dimension given");
    for (auto d : bond_dims)
        if (d < 1) throw DmrgError("config: bond dimension must be >= 1");
    if (sweeps < 0) throw DmrgError("config: negative sweep count");
    if (!(lanczos.tol > 0.0)) throw DmrgError("config: Lanczos tolerance must be > 0");
    if (lanczos.max_iter < 1) throw DmrgError("config: Lanczos max_iter must be >= 1");
    if (workers < 1) throw DmrgError("config: at least one worker is required");
}

std::size_t DmrgConfig::bond_dim(int sweep) const {
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::max(sweep, 0)), bond_dims.size() - 1);
    return bond_dims[k];
}

bool EngineState::operator==(const EngineState& o) const {
    if (guess.has_value() != o.guess.has_value()) return false;
    if (guess && (!same_layout(*guess->layout, *o.guess->layout) || guess->data != o.guess->data)) return false;
    return mpo_fingerprint == o.mpo_fingerprint && n_sites == o.n_sites && seed == o.seed && target == o.target &&
           warmed_up == o.warmed_up && cursor == o.cursor && warmup_energy == o.warmup_energy &&
           warmup_energies == o.warmup_energies && left == o.left && right == o.right && records == o.records;
}

DmrgEngine::DmrgEngine(const Model& model, DmrgConfig config)
    : model_(model), config_(std::move(config)), mpo_(build_mpo(model_)) {
    config_.validate();
    if (model_.n_sites < 2) throw DmrgError("dmrg: at least two sites are required");
    pool_ = std::make_unique<mazerunner::RunnerPool>(config_.workers);
    tables_.resize(static_cast<std::size_t>(model_.n_sites - 1));
    const auto n = static_cast<std::size_t>(model_.n_sites);
    state_.mpo_fingerprint = mpo_.fingerprint();
    state_.n_sites = model_.n_sites;
    state_.seed = config_.seed;
    state_.target = config_.target.value_or(model_.default_target());
    state_.left.resize(n + 1);
    state_.right.resize(n + 1);
}

DmrgEngine::~DmrgEngine() = default;
DmrgEngine::DmrgEngine(DmrgEngine&&) noexcept = default;
DmrgEngine& DmrgEngine::operator=(DmrgEngine&&) noexcept = default;

const OperatorTable& DmrgEngine::table(int position) const {
    auto& slot = tables_.at(static_cast<std::size_t>(position));
    if (!slot) slot = factorize(mpo_, Partition{position, model_.n_sites - position - 2});
    return *slot;
}

std::uint64_t DmrgEngine::derived_seed(int sweep, Direction d, int position) const {
    std::uint64_t h = splitmix(state_.seed);
    h = splitmix(h ^ static_cast<std::uint64_t>(sweep + 1));
    h = splitmix(h ^ static_cast<std::uint64_t>(d));
    return splitmix(h ^ static_cast<std::uint64_t>(position));
}

HamiltonianPlan DmrgEngine::plan_at(int position) const {
    const auto& l = state_.left.at(static_cast<std::size_t>(position));
    const auto& r = state_.right.at(static_cast<std::size_t>(position + 2));
    if (!l || !r) throw DmrgError("dmrg: blocks for the partition are not built");
    auto layout = std::make_shared<const WaveLayout>(l->basis, mpo_.site, r->basis, state_.target);
    return build_plan(table(position), *l, *r, layout);
}

double DmrgEngine::warmup() {
    const int n = model_.n_sites;
    const std::size_t d = config_.bond_dim(0);
    auto& left = state_.left;
    auto& right = state_.right;
    left[0] = vacuum_left(mpo_);
    right[static_cast<std::size_t>(n)] = vacuum_right(mpo_);
    state_.warmup_energies.clear();

    for (int b = n - 1; b >= 2; --b) {
        EnlargedBlock enl = enlarge(*right[static_cast<std::size_t>(b + 1)], mpo_);
        const auto& states = mpo_.bonds[static_cast<std::size_t>(b)];
        SectorMatrix h(enl.fused.basis, enl.fused.basis, QuantumNumber{});
        for (std::size_t a = 0; a < states.size(); ++a)
            if (!states[a].right_keyed && states[a].empty_key) h = enl.ops[a];
        const auto eig = sector_eigen(h, false);
        const auto reach = reachable(mpo_.site, b);

        struct Candidate {
            double e;
            std::size_t sector;
            Index rank;
        };
        auto less = [](const Candidate& x, const Candidate& y) {
            if (x.e != y.e) return x.e < y.e;
            if (x.sector != y.sector) return x.sector < y.sector;
            return x.rank < y.rank;
        };
        std::vector<Candidate> lowest, rest;
        for (std::size_t s = 0; s < eig.size(); ++s) {
            if (!reach.contains(state_.target - eig[s].qn)) continue;
            for (std::size_t k = 0; k < eig[s].values.size(); ++k)
                (k == 0 ? lowest : rest).push_back({eig[s].values[k], s, static_cast<Index>(k)});
        }
        if (lowest.empty()) throw DmrgError("warmup: target sector is unreachable");
        std::sort(lowest.begin(), lowest.end(), less);
        std::vector<Index> kept(eig.size(), 0);
        std::size_t total = 0;
        for (const auto& c : lowest) {
            if (total == d) {
                rest.push_back(c);
                continue;
            }
            ++kept[c.sector];
            ++total;
        }
        std::sort(rest.begin(), rest.end(), less);
        // only a prefix of every sector may be kept
        for (const auto& c : rest) {
            if (total == d) break;
            if (kept[c.sector] != c.rank) continue;
            ++kept[c.sector];
            ++total;
        }
        state_.warmup_energies.push_back(lowest.front().e);

        const Truncation t = truncate(enl.fused.basis, eig, kept);
        BlockState blk;
        blk.side = Side::right;
        blk.bond = b;
        blk.basis = t.basis;
        blk.ops = transform_operators(enl.ops, t, pool_.get(), config_.arena_bytes);
        blk.transform = t.transform;
        blk.has_transform = true;
        right[static_cast<std::size_t>(b)] = std::move(blk);
    }

    const HamiltonianPlan plan = plan_at(0);
    if (plan.layout->size() == 0) throw DmrgError("warmup: empty two-site space for the target");
    EffectiveHamiltonian h(plan, pool_.get());
    const Wavefunction guess = random_wavefunction(plan.layout, derived_seed(-1, Direction::left_to_right, 0));
    LanczosOptions lo = config_.lanczos;
    lo.seed = derived_seed(-1, Direction::right_to_left, 0);
    const auto res = lanczos_ground([&](auto x, auto y) { h.apply(x, y); }, guess.data, lo);
    Wavefunction psi(plan.layout);
    psi.data = res.vector;
    state_.guess = std::move(psi);
    state_.warmup_energy = res.energy;
    state_.warmed_up = true;
    state_.cursor = Cursor{};
    return res.energy;
}

SweepRecord DmrgEngine::step() {
    if (!state_.warmed_up) warmup();
    try {
        return step_impl();
    } catch (...) {
        if (!config_.checkpoint_path.empty()) save_checkpoint(config_.checkpoint_path);
        throw;
    }
}

SweepRecord DmrgEngine::step_impl() {
    const auto t0 = std::chrono::steady_clock::now();
    const int n = model_.n_sites;
    const Cursor cur = state_.cursor;
    const int s = cur.position;
    const std::size_t d = config_.bond_dim(cur.sweep);
    const auto us = static_cast<std::size_t>(s);

    const HamiltonianPlan plan = plan_at(s);
    if (plan.layout->size() == 0) throw DmrgError("dmrg: empty two-site space at partition " + std::to_string(s));
    std::vector<double> guess;
    if (state_.guess && same_layout(*state_.guess->layout, *plan.layout) && state_.guess->norm() > 0.0)
        guess = state_.guess->data;
    else
        guess = random_wavefunction(plan.layout, derived_seed(cur.sweep, cur.direction, s)).data;

    EffectiveHamiltonian h(plan, pool_.get());
    LanczosOptions lo = config_.lanczos;
    lo.seed = derived_seed(cur.sweep, cur.direction, s) ^ 0x5bd1e995ull;
    const auto res = lanczos_ground([&](auto x, auto y) { h.apply(x, y); }, guess, lo);

    SweepRecord rec;
    rec.sweep = cur.sweep;
    rec.direction = cur.direction;
    rec.position = s;
    rec.energy = res.energy;
    rec.lanczos_iterations = res.iterations;
    rec.converged = res.converged;
    rec.flops = plan.flop_estimate() * h.applies();

    Wavefunction psi(plan.layout);
    psi.data = res.vector;
    Cursor next = cur;
    std::optional<Wavefunction> next_guess;
    if (cur.direction == Direction::left_to_right) {
        if (s < n - 2) {
            auto rr = renormalize(psi, Side::left, *state_.left[us], mpo_, d, pool_.get(), config_.arena_bytes);
            rec.truncation_error = rr.selection.truncation_error;
            rec.flops += rr.flops;
            const auto& r_old = *state_.right[us + 2];
            if (config_.predict && r_old.has_transform) {
                Wavefunction g = predict_after_left(psi, rr.block, r_old, *state_.right[us + 3], &rec.flops);
                if (g.norm() > 0.0) next_guess = std::move(g);
            }
            state_.left[us + 1] = std::move(rr.block);
            next.position = s + 1;
        } else {
            next_guess = psi;
            next.direction = Direction::right_to_left;
        }
    } else {
        if (s > 0) {
            auto rr =
                renormalize(psi, Side::right, *state_.right[us + 2], mpo_, d, pool_.get(), config_.arena_bytes);
            rec.truncation_error = rr.selection.truncation_error;
            rec.flops += rr.flops;
            const auto& l_old = *state_.left[us];
            if (config_.predict && l_old.has_transform) {
                Wavefunction g = predict_after_right(psi, rr.block, l_old, *state_.left[us - 1], &rec.flops);
                if (g.norm() > 0.0) next_guess = std::move(g);
            }
            state_.right[us + 1] = std::move(rr.block);
            next.position = s - 1;
        } else {
            next_guess = psi;
            next.direction = Direction::left_to_right;
            next.sweep = cur.sweep + 1;
        }
    }
    if (next_guess) next_guess->normalize();
    state_.guess = std::move(next_guess);
    state_.cursor = next;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    state_.records.push_back(rec);
    return rec;
}

std::vector<SweepRecord> DmrgEngine::sweep() {
    if (!state_.warmed_up) warmup();
    const int k = state_.cursor.sweep;
    std::vector<SweepRecord> out;
    while (state_.cursor.sweep == k) out.push_back(step());
    if (config_.checkpoint_each_sweep && !config_.checkpoint_path.empty()) save_checkpoint(config_.checkpoint_path);
    return out;
}

std::vector<SweepRecord> DmrgEngine::run() {
    if (!state_.warmed_up) warmup();
    std::vector<SweepRecord> out;
    while (state_.cursor.sweep < config_.sweeps) {
        auto part = sweep();
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

std::vector<double> DmrgEngine::sweep_energies() const {
    std::vector<double> out;
    for (const auto& r : state_.records)
        if (r.direction == Direction::right_to_left && r.position == 0) out.push_back(r.energy);
    return out;
}

double DmrgEngine::energy() const {
    if (!state_.records.empty()) return state_.records.back().energy;
    if (state_.warmed_up) return state_.warmup_energy;
    throw DmrgError("dmrg: no energy computed yet");
}

void DmrgEngine::save_checkpoint(const std::filesystem::path& path) const { write_checkpoint(state_, path); }

DmrgEngine DmrgEngine::resume(const Model& model, DmrgConfig config, const std::filesystem::path& path) {
    DmrgEngine e(model, std::move(config));
    EngineState st = read_checkpoint(path, e.mpo_.site);
    if (st.mpo_fingerprint != e.state_.mpo_fingerprint || st.n_sites != model.n_sites)
        throw CheckpointError("checkpoint: saved for a different Hamiltonian");
    if (st.left.size() != e.state_.left.size() || st.right.size() != e.state_.right.size())
        throw CheckpointCorrupt("checkpoint: block count does not match the chain length");
    e.config_.seed = st.seed;
    e.config_.target = st.target;
    e.state_ = std::move(st);
    return e;
}

}  // namespace sdmrg
