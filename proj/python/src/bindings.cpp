#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "sdmrg/bench/bench.hpp"
#include "sdmrg/core/hilbert.hpp"
#include "sdmrg/dmrg/checkpoint.hpp"
#include "sdmrg/model/dense.hpp"
#include "sdmrg/model/integrals.hpp"
#include "sdmrg/sbmm4s/sbmm4s.hpp"

namespace py = pybind11;
using namespace sdmrg;

namespace {

DmrgConfig make_config(std::vector<std::size_t> bond_dims, int sweeps, std::size_t workers, std::uint64_t seed,
                       std::size_t arena_bytes, std::optional<int> particles, std::optional<int> twosz,
                       double lanczos_tol, const std::string& checkpoint_path, const Model& model) {
    DmrgConfig c;
    c.bond_dims = std::move(bond_dims);
    c.sweeps = sweeps;
    c.workers = workers;
    c.seed = seed;
    c.arena_bytes = arena_bytes;
    c.lanczos.tol = lanczos_tol;
    c.checkpoint_path = checkpoint_path;
    c.checkpoint_each_sweep = !checkpoint_path.empty();
    if (particles || twosz) {
        const QuantumNumber def = model.default_target();
        c.target = QuantumNumber(particles.value_or(def.c[0]), twosz.value_or(def.c[1]));
    }
    c.validate();
    return c;
}

#define SDMRG_CONFIG_ARGS                                                                                     \
    py::arg("bond_dims") = std::vector<std::size_t>{64}, py::arg("sweeps") = 3, py::arg("workers") = 1,      \
    py::arg("seed") = 42, py::arg("arena_bytes") = 0, py::arg("particles") = py::none(),                      \
    py::arg("twosz") = py::none(), py::arg("lanczos_tol") = 1e-10, py::arg("checkpoint_path") = ""

double dense_ground_energy(const Model& m, std::optional<int> particles, std::optional<int> twosz) {
    const QuantumNumber def = m.default_target();
    const QuantumNumber target(particles.value_or(def.c[0]), twosz.value_or(def.c[1]));
    const auto states = dense::sector_states(m, target);
    if (states.empty()) throw ModelError("dense_ground_energy: target sector is empty");
    if (states.size() > 4096) throw ModelError("dense_ground_energy: sector larger than 4096 states");
    return dense::eigenvalues(dense::hamiltonian(m, states)).front();
}

// B + alpha * sum_i L[i] @ A @ R[i].T with numpy arrays in their natural shapes
py::array_t<double> accumulate(py::array_t<double, py::array::c_style | py::array::forcecast> a,
                               py::array_t<double, py::array::c_style | py::array::forcecast> left,
                               py::array_t<double, py::array::c_style | py::array::forcecast> right,
                               py::array_t<double, py::array::c_style | py::array::forcecast> b, double alpha) {
    if (a.ndim() != 2 || left.ndim() != 3 || right.ndim() != 3 || b.ndim() != 2)
        throw sbmm4s::DimensionError("expected a (m,n), left (p,q,m), right (p,r,n), b (q,r)");
    const Index m = a.shape(0), n = a.shape(1), p = left.shape(0), q = left.shape(1), r = right.shape(1);
    if (left.shape(2) != m || right.shape(0) != p || right.shape(2) != n || b.shape(0) != q || b.shape(1) != r)
        throw sbmm4s::DimensionError("inconsistent operand shapes");
    // column-major copies; stack members back to back
    std::vector<double> ac(static_cast<std::size_t>(m * n)), lc(static_cast<std::size_t>(p * q * m)),
        rc(static_cast<std::size_t>(p * r * n)), bc(static_cast<std::size_t>(q * r));
    auto A = a.unchecked<2>();
    auto L = left.unchecked<3>();
    auto R = right.unchecked<3>();
    auto B = b.unchecked<2>();
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < m; ++i) ac[static_cast<std::size_t>(i + j * m)] = A(i, j);
    for (Index k = 0; k < p; ++k) {
        for (Index j = 0; j < m; ++j)
            for (Index i = 0; i < q; ++i) lc[static_cast<std::size_t>(k * q * m + i + j * q)] = L(k, i, j);
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < r; ++i) rc[static_cast<std::size_t>(k * r * n + i + j * r)] = R(k, i, j);
    }
    for (Index j = 0; j < r; ++j)
        for (Index i = 0; i < q; ++i) bc[static_cast<std::size_t>(i + j * q)] = B(i, j);

    sbmm4s::AccumulationProblem pr;
    pr.alpha = alpha;
    pr.a = {ac.data(), m, n, std::max<Index>(m, 1)};
    pr.b = {bc.data(), q, r, std::max<Index>(q, 1)};
    pr.left = sbmm4s::StridedStack::contiguous(lc.data(), q, m, p);
    pr.right = sbmm4s::StridedStack::contiguous(rc.data(), r, n, p);
    std::vector<double> ws(static_cast<std::size_t>(sbmm4s::fused_workspace(pr)));
    {
        py::gil_scoped_release release;
        sbmm4s::sbmm4s(pr, ws);
    }
    py::array_t<double> out({q, r});
    auto O = out.mutable_unchecked<2>();
    for (Index j = 0; j < r; ++j)
        for (Index i = 0; i < q; ++i) O(i, j) = bc[static_cast<std::size_t>(i + j * q)];
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Sector-sparse DMRG: models, sweeps, kernels and scaling fits";

    py::register_exception<ModelError>(mod, "ModelError", PyExc_ValueError);
    py::register_exception<IntegralsError>(mod, "IntegralsError", PyExc_ValueError);
    py::register_exception<DmrgError>(mod, "DmrgError", PyExc_RuntimeError);
    py::register_exception<CheckpointError>(mod, "CheckpointError", PyExc_RuntimeError);
    py::register_exception<bench::BenchError>(mod, "BenchError", PyExc_ValueError);
    py::register_exception<sbmm4s::DimensionError>(mod, "DimensionError", PyExc_ValueError);

    mod.def(
        "hilbert_dimension",
        [](int modes, int particles) {
            return py::module_::import("builtins").attr("int")(hilbert_dimension(modes, particles).str());
        },
        py::arg("modes"), py::arg("particles"));

    py::class_<Model>(mod, "Model")
        .def_readonly("n_sites", &Model::n_sites)
        .def_property_readonly("hilbert_size", &Model::hilbert_size)
        .def_property_readonly("default_target",
                               [](const Model& m) {
                                   const auto q = m.default_target();
                                   return std::pair{q.c[0], q.c[1]};
                               })
        .def("__repr__", [](const Model& m) {
            const char* kind = m.kind == ModelKind::heisenberg_chain ? "heisenberg"
                               : m.kind == ModelKind::hubbard_chain  ? "hubbard"
                                                                     : "integrals";
            return "<Model " + std::string(kind) + " n_sites=" + std::to_string(m.n_sites) + ">";
        });

    mod.def("heisenberg_chain", &heisenberg_chain, py::arg("n"), py::arg("j") = 1.0);
    mod.def(
        "hubbard_chain",
        [](int n, double t, double u) { return fermion_model(hubbard_integrals(n, t, u), ModelKind::hubbard_chain); },
        py::arg("n"), py::arg("t") = 1.0, py::arg("u") = 0.0);
    mod.def(
        "integral_model", [](const std::string& path) { return build_model({ModelKind::integral_file, 0, 1.0, 1.0, 0.0, path}); },
        py::arg("path"));
    mod.def("dense_ground_energy", &dense_ground_energy, py::arg("model"), py::arg("particles") = py::none(),
            py::arg("twosz") = py::none());

    py::class_<SweepRecord>(mod, "SweepRecord")
        .def_readonly("sweep", &SweepRecord::sweep)
        .def_property_readonly("direction",
                               [](const SweepRecord& r) { return r.direction == Direction::left_to_right ? "lr" : "rl"; })
        .def_readonly("position", &SweepRecord::position)
        .def_readonly("energy", &SweepRecord::energy)
        .def_readonly("truncation_error", &SweepRecord::truncation_error)
        .def_readonly("lanczos_iterations", &SweepRecord::lanczos_iterations)
        .def_readonly("converged", &SweepRecord::converged)
        .def_readonly("seconds", &SweepRecord::seconds)
        .def_readonly("flops", &SweepRecord::flops);

    py::class_<DmrgEngine>(mod, "DmrgEngine")
        .def(py::init([](const Model& m, std::vector<std::size_t> bond_dims, int sweeps, std::size_t workers,
                         std::uint64_t seed, std::size_t arena_bytes, std::optional<int> particles,
                         std::optional<int> twosz, double tol, const std::string& ckpt) {
                 return DmrgEngine(m, make_config(std::move(bond_dims), sweeps, workers, seed, arena_bytes, particles,
                                                  twosz, tol, ckpt, m));
             }),
             py::arg("model"), SDMRG_CONFIG_ARGS)
        .def_static(
            "resume",
            [](const Model& m, const std::filesystem::path& path, std::vector<std::size_t> bond_dims, int sweeps,
               std::size_t workers, std::uint64_t seed, std::size_t arena_bytes, std::optional<int> particles,
               std::optional<int> twosz, double tol, const std::string& ckpt) {
                return DmrgEngine::resume(
                    m, make_config(std::move(bond_dims), sweeps, workers, seed, arena_bytes, particles, twosz, tol, ckpt, m),
                    path);
            },
            py::arg("model"), py::arg("path"), SDMRG_CONFIG_ARGS)
        .def("warmup", &DmrgEngine::warmup, py::call_guard<py::gil_scoped_release>())
        .def("step", &DmrgEngine::step, py::call_guard<py::gil_scoped_release>())
        .def("sweep", &DmrgEngine::sweep, py::call_guard<py::gil_scoped_release>())
        .def("run", &DmrgEngine::run, py::call_guard<py::gil_scoped_release>())
        .def_property_readonly("energy", &DmrgEngine::energy)
        .def_property_readonly("sweep_energies", &DmrgEngine::sweep_energies)
        .def_property_readonly("records", &DmrgEngine::records)
        .def("save_checkpoint", &DmrgEngine::save_checkpoint, py::arg("path"));

    mod.def(
        "solve",
        [](const Model& m, std::vector<std::size_t> bond_dims, int sweeps, std::size_t workers, std::uint64_t seed,
           std::size_t arena_bytes, std::optional<int> particles, std::optional<int> twosz, double tol,
           const std::string& ckpt) {
            DmrgEngine eng(m, make_config(std::move(bond_dims), sweeps, workers, seed, arena_bytes, particles, twosz,
                                          tol, ckpt, m));
            {
                py::gil_scoped_release release;
                eng.run();
            }
            return std::pair{eng.energy(), eng.sweep_energies()};
        },
        py::arg("model"), SDMRG_CONFIG_ARGS, "Runs DMRG; returns (energy, per-sweep energies).");

    py::class_<bench::PowerLawFit>(mod, "PowerLawFit")
        .def_readonly("exponent", &bench::PowerLawFit::exponent)
        .def_readonly("prefactor", &bench::PowerLawFit::prefactor)
        .def_readonly("r2", &bench::PowerLawFit::r2)
        .def("__repr__", [](const bench::PowerLawFit& f) {
            return "PowerLawFit(exponent=" + bench::format_double(f.exponent) + ", prefactor=" +
                   bench::format_double(f.prefactor) + ", r2=" + bench::format_double(f.r2) + ")";
        });
    mod.def(
        "fit_power_law",
        [](const std::vector<std::pair<double, double>>& pts) { return bench::fit_power_law(pts); },
        py::arg("points"));

    mod.def(
        "run_checks",
        [](std::size_t workers, std::uint64_t seed) {
            std::vector<std::tuple<std::string, bool, std::string>> out;
            std::vector<bench::CheckResult> res;
            {
                py::gil_scoped_release release;
                res = bench::run_checks(workers, seed);
            }
            for (auto& r : res) out.emplace_back(r.name, r.passed, r.detail);
            return out;
        },
        py::arg("workers") = 1, py::arg("seed") = 42);

    mod.def("sbmm4s_accumulate", &accumulate, py::arg("a"), py::arg("left"), py::arg("right"), py::arg("b"),
            py::arg("alpha") = 1.0, "Returns b + alpha * sum_i left[i] @ a @ right[i].T via the fused kernel.");
}
