#include "sdmrg/dmrg/lanczos.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace sdmrg {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void scale(std::span<double> x, double s) {
    for (double& v : x) v *= s;
}

}  // namespace

LanczosResult lanczos_ground(const ApplyFn& apply, std::span<const double> guess,
                             const LanczosOptions& opts) {
    const std::size_t n = guess.size();
    if (n == 0) throw LanczosError("lanczos: empty vector space");
    const double gnorm = std::sqrt(dot(guess, guess));
    if (!(gnorm > 0.0) || !std::isfinite(gnorm)) throw LanczosError("lanczos: zero or non-finite guess");

    std::vector<double> start(guess.begin(), guess.end());
    scale(start, 1.0 / gnorm);
    if (opts.mix > 0.0 && n > 1) {
        std::mt19937_64 rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> r(n);
        for (double& v : r) v = u(rng);
        const double rn = std::sqrt(dot(r, r));
        axpy(opts.mix / rn, r, start);
        scale(start, 1.0 / std::sqrt(dot(start, start)));
    }

    LanczosResult res;
    std::vector<double> w(n), hx(n);
    const auto kmax = static_cast<std::size_t>(std::max(2, opts.krylov_max));

    while (true) {
        std::vector<std::vector<double>> basis;
        std::vector<double> alpha, beta;
        basis.push_back(start);
        Eigen::VectorXd ritz;
        double theta = 0.0;
        while (true) {
            const std::size_t j = basis.size() - 1;
            apply(basis[j], w);
            ++res.applies;
            ++res.iterations;
            alpha.push_back(dot(basis[j], w));
            // two passes of classical Gram-Schmidt against the whole basis
            for (int pass = 0; pass < 2; ++pass)
                for (const auto& v : basis) axpy(-dot(v, w), v, w);
            const double b = std::sqrt(dot(w, w));

            const auto k = static_cast<Eigen::Index>(alpha.size());
            Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), k);
            Eigen::VectorXd sub = k > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), k - 1))
                                        : Eigen::VectorXd();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
            es.computeFromTridiagonal(diag, sub);
            theta = es.eigenvalues()(0);
            ritz = es.eigenvectors().col(0);
            const double estimate = b * std::abs(ritz(k - 1));

            const double scale_h = std::abs(theta) + std::abs(alpha.back()) + 1.0;
            const bool invariant = b <= 1e-14 * scale_h;
            if (estimate <= 0.5 * opts.tol * (1.0 + std::abs(theta)) || invariant || basis.size() >= n ||
                basis.size() >= kmax || res.iterations >= opts.max_iter)
                break;
            beta.push_back(b);
            basis.emplace_back(w);
            scale(basis.back(), 1.0 / b);
        }

        std::vector<double> x(n, 0.0);
        for (std::size_t i = 0; i < basis.size(); ++i) axpy(ritz(static_cast<Eigen::Index>(i)), basis[i], x);
        scale(x, 1.0 / std::sqrt(dot(x, x)));
        apply(x, hx);
        ++res.applies;
        const double e = dot(x, hx);
        axpy(-e, x, hx);
        res.residual = std::sqrt(dot(hx, hx));
        res.energy = e;
        res.vector = std::move(x);
        res.converged = res.residual <= opts.tol * (1.0 + std::abs(e));
        if (res.converged || res.iterations >= opts.max_iter) return res;
        start = res.vector;
    }
}

}  // namespace sdmrg
