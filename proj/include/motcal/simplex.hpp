#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "motcal/common.hpp"

namespace motcal {

/// Dense LP in computational form: minimize c.x subject to A x = b (rows
/// tagged EQ) or A x <= b (rows tagged LE), x >= 0.
struct LpProblem {
    std::size_t n = 0;  // variables
    enum RowType { EQ, LE };
    std::vector<RowType> row_type;
    std::vector<std::vector<double>> rows;  // one coefficient row per constraint
    std::vector<double> rhs;
    std::vector<double> cost;

    void add_row(RowType t, std::vector<double> coeffs, double b);
};

struct LpResult {
    enum Status { OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT } status = ITERATION_LIMIT;
    std::vector<double> x;
    double objective = 0.0;
    std::vector<double> reduced_costs;       // certificate: >= -tol at optimum
    std::vector<std::size_t> basis;          // final basic columns (debug dump)
    std::vector<std::size_t> infeasible_rows;  // rows with positive artificials
    double phase1_objective = 0.0;
    std::size_t iterations = 0;
};

/// Two-phase dense simplex with Bland's rule (anti-cycling).
LpResult solve_lp(const LpProblem& p, double tol = 1e-9, std::size_t max_iters = 200000);

}  // namespace motcal
