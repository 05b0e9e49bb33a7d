#pragma once

#include "koop/types.hpp"

namespace koop {

/// Box-constrained convex quadratic program
///   min 1/2 u' H u + f' u   s.t.  lo <= u <= hi
/// with H symmetric positive definite.
struct QpProblem {
    Matrix H;
    Vector f;
    Vector lo, hi;
};

struct QpResult {
    Vector u;
    int iters = 0;
    double kkt_residual = 0.0;
    bool converged = false;
};

/// Stationarity residual of a feasible point: |g_i| on free coordinates,
/// max(0, -g_i) at the lower bound, max(0, g_i) at the upper bound,
/// where g = H u + f.
double box_kkt_residual(const QpProblem& qp, const Vector& u);

/// Projected gradient with exact line search plus active-set polishing.
/// Returns once the KKT residual is <= tol. `warm` seeds the iteration.
/// Throws std::runtime_error carrying the residual if the iteration cap
/// is reached without convergence.
QpResult solve_box_qp(const QpProblem& qp, double tol = 1e-6, int max_iters = 200,
                      const Vector* warm = nullptr);

} // namespace koop
