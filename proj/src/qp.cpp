#include "koop/qp.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace koop {

namespace {

constexpr double kBoundEps = 1e-12;

Vector clamp_box(Vector u, const Vector& lo, const Vector& hi) {
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        u(i) = std::clamp(u(i), lo(i), hi(i));
    }
    return u;
}

double objective(const QpProblem& qp, const Vector& u) {
    return 0.5 * u.dot(qp.H * u) + qp.f.dot(u);
}

} // namespace

double box_kkt_residual(const QpProblem& qp, const Vector& u) {
    const Vector g = qp.H * u + qp.f;
    double res = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        double v;
        if (u(i) <= qp.lo(i) + kBoundEps) {
            v = std::max(0.0, -g(i)); // at lower bound the gradient must be >= 0
        } else if (u(i) >= qp.hi(i) - kBoundEps) {
            v = std::max(0.0, g(i)); // at upper bound the gradient must be <= 0
        } else {
            v = std::abs(g(i));
        }
        res = std::max(res, v);
    }
    return res;
}

QpResult solve_box_qp(const QpProblem& qp, double tol, int max_iters, const Vector* warm) {
    const Eigen::Index n = qp.f.size();
    if (qp.H.rows() != n || qp.H.cols() != n || qp.lo.size() != n || qp.hi.size() != n) {
        throw std::invalid_argument("solve_box_qp: inconsistent problem dimensions");
    }

    QpResult result;
    result.u = warm ? clamp_box(*warm, qp.lo, qp.hi)
                    : clamp_box(Vector::Zero(n), qp.lo, qp.hi);

    for (int iter = 1; iter <= max_iters; ++iter) {
        result.iters = iter;
        const Vector g = qp.H * result.u + qp.f;

        result.kkt_residual = box_kkt_residual(qp, result.u);
        if (result.kkt_residual <= tol) {
            result.converged = true;
            return result;
        }

        // Projected gradient step with exact line search.
        Vector dir = -g;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (result.u(i) <= qp.lo(i) + kBoundEps && dir(i) < 0.0) dir(i) = 0.0;
            if (result.u(i) >= qp.hi(i) - kBoundEps && dir(i) > 0.0) dir(i) = 0.0;
        }
        const double curvature = dir.dot(qp.H * dir);
        if (curvature > 0.0) {
            const double alpha = dir.squaredNorm() / curvature;
            Vector candidate = clamp_box(result.u + alpha * dir, qp.lo, qp.hi);
            if (objective(qp, candidate) < objective(qp, result.u)) {
                result.u = std::move(candidate);
            }
        }

        // Active-set polish: fix bound-hugging coordinates whose gradient
        // points outward, solve the free block exactly.
        const Vector g2 = qp.H * result.u + qp.f;
        std::vector<Eigen::Index> free_idx;
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool at_lo = result.u(i) <= qp.lo(i) + kBoundEps && g2(i) >= 0.0;
            const bool at_hi = result.u(i) >= qp.hi(i) - kBoundEps && g2(i) <= 0.0;
            if (!at_lo && !at_hi) free_idx.push_back(i);
        }
        if (!free_idx.empty()) {
            const Eigen::Index nf = static_cast<Eigen::Index>(free_idx.size());
            std::vector<bool> is_free(n, false);
            for (Eigen::Index i : free_idx) is_free[i] = true;
            Matrix hff(nf, nf);
            Vector rhs(nf);
            for (Eigen::Index a = 0; a < nf; ++a) {
                rhs(a) = -qp.f(free_idx[a]);
                for (Eigen::Index b = 0; b < nf; ++b) {
                    hff(a, b) = qp.H(free_idx[a], free_idx[b]);
                }
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (!is_free[i]) rhs(a) -= qp.H(free_idx[a], i) * result.u(i);
                }
            }
            const Vector uf = hff.ldlt().solve(rhs);
            Vector candidate = result.u;
            for (Eigen::Index a = 0; a < nf; ++a) candidate(free_idx[a]) = uf(a);
            candidate = clamp_box(std::move(candidate), qp.lo, qp.hi);
            if (objective(qp, candidate) <= objective(qp, result.u)) {
                result.u = std::move(candidate);
            }
        }
    }

    result.kkt_residual = box_kkt_residual(qp, result.u);
    if (result.kkt_residual <= tol) {
        result.converged = true;
        return result;
    }
    std::ostringstream msg;
    msg << "solve_box_qp: no convergence in " << max_iters
        << " iterations, KKT residual " << result.kkt_residual;
    throw std::runtime_error(msg.str());
}

} // namespace koop
