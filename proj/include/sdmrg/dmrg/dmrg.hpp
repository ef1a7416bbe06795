#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdmrg/dmrg/block.hpp"
#include "sdmrg/dmrg/effective_hamiltonian.hpp"
#include "sdmrg/dmrg/lanczos.hpp"
#include "sdmrg/dmrg/renormalize.hpp"
#include "sdmrg/dmrg/wavefunction.hpp"
#include "sdmrg/model/mpo.hpp"

namespace sdmrg {

class DmrgError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct DmrgConfig {
    std::vector<std::size_t> bond_dims{64};  // D of sweep k is bond_dims[min(k, size - 1)]
    int sweeps = 3;
    LanczosOptions lanczos;
    std::size_t workers = 1;
    std::size_t arena_bytes = 0;  // 0: size the ttcache arenas from the plan
    std::uint64_t seed = 42;
    std::optional<QuantumNumber> target;  // default: Model::default_target()
    bool predict = true;                  // carry the wavefunction between steps
    std::string checkpoint_path;          // written when an iteration fails
    bool checkpoint_each_sweep = false;   // and after every completed sweep

    void validate() const;
    std::size_t bond_dim(int sweep) const;
};

enum class Direction : std::uint8_t { left_to_right = 0, right_to_left = 1 };

struct SweepRecord {
    int sweep = 0;
    Direction direction = Direction::left_to_right;
    int position = 0;  // n_left of the two-site partition
    double energy = 0.0;
    double truncation_error = 0.0;
    int lanczos_iterations = 0;
    bool converged = false;
    double seconds = 0.0;
    std::uint64_t flops = 0;

    bool operator==(const SweepRecord&) const = default;
};

struct Cursor {
    int sweep = 0;
    Direction direction = Direction::left_to_right;
    int position = 0;
    bool operator==(const Cursor&) const = default;
};

/// Everything a resumed run needs; what the checkpoint file holds.
struct EngineState {
    std::uint64_t mpo_fingerprint = 0;
    int n_sites = 0;
    std::uint64_t seed = 0;
    QuantumNumber target;
    bool warmed_up = false;
    Cursor cursor;
    double warmup_energy = 0.0;
    std::vector<double> warmup_energies;        // lowest right-block level per warmup step
    std::vector<std::optional<BlockState>> left;   // bond 0..N
    std::vector<std::optional<BlockState>> right;  // bond 0..N
    std::optional<Wavefunction> guess;           // start vector of the next step
    std::vector<SweepRecord> records;

    bool operator==(const EngineState&) const;
};

class DmrgEngine {
public:
    DmrgEngine(const Model& model, DmrgConfig config);
    ~DmrgEngine();
    DmrgEngine(DmrgEngine&&) noexcept;
    DmrgEngine& operator=(DmrgEngine&&) noexcept;

    /// Infinite-style growth of the right blocks R_N .. R_2 from the lowest
    /// levels of the block Hamiltonians, then a Lanczos solve at partition 0.
    double warmup();
    /// One two-site iteration at the cursor; advances the cursor.
    SweepRecord step();
    /// Steps until the current sweep (left-to-right and back) is complete.
    std::vector<SweepRecord> sweep();
    /// Warmup if needed, then sweeps until `config.sweeps` are done.
    std::vector<SweepRecord> run();

    const Model& model() const { return model_; }
    const Mpo& mpo() const { return mpo_; }
    const DmrgConfig& config() const { return config_; }
    const EngineState& state() const { return state_; }
    const std::vector<SweepRecord>& records() const { return state_.records; }
    /// Energy of the last step of every completed sweep.
    std::vector<double> sweep_energies() const;
    double energy() const;

    /// Plan for the partition at the cursor (for inspection and FLOP checks).
    HamiltonianPlan plan_at(int position) const;
    const OperatorTable& table(int position) const;
    mazerunner::RunnerPool* pool() const { return pool_.get(); }

    void save_checkpoint(const std::filesystem::path& path) const;
    /// Restores a saved state; the model must produce the same MPO. The seed
    /// stored in the file replaces config.seed.
    static DmrgEngine resume(const Model& model, DmrgConfig config, const std::filesystem::path& path);

private:
    SweepRecord step_impl();
    std::uint64_t derived_seed(int sweep, Direction d, int position) const;

    Model model_;
    DmrgConfig config_;
    Mpo mpo_;
    std::unique_ptr<mazerunner::RunnerPool> pool_;
    mutable std::vector<std::optional<OperatorTable>> tables_;
    EngineState state_;
};

}  // namespace sdmrg
