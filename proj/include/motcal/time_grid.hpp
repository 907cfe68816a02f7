#pragma once

#include <cstddef>
#include <vector>

#include "motcal/common.hpp"

namespace motcal {

/// Time discretization of [t0, T2] with T1 pinned as a node. steps_pre
/// subdivides [t0, T1], steps_post subdivides [T1, T2]. When t0 >= T1 the
/// pre segment is empty and the grid covers [t0, T2] with steps_post.
class TimeGrid {
public:
    TimeGrid(double t0, double T1, double T2, std::size_t steps_pre, std::size_t steps_post);

    double t0() const { return t0_; }
    double T1() const { return T1_; }
    double T2() const { return T2_; }
    bool has_pre() const { return steps_pre_ > 0; }
    std::size_t steps_pre() const { return steps_pre_; }
    std::size_t steps_post() const { return steps_post_; }
    double dt_pre() const { return steps_pre_ ? (T1_ - t0_) / static_cast<double>(steps_pre_) : 0.0; }
    double dt_post() const { return (T2_ - start_post()) / static_cast<double>(steps_post_); }
    /// Left end of the post segment: T1 when t0 < T1, else t0.
    double start_post() const { return has_pre() ? T1_ : t0_; }
    std::size_t total_steps() const { return steps_pre_ + steps_post_; }

    /// Step sizes laid out forward in time (pre steps first).
    std::vector<double> step_sizes() const;
    /// Time at forward node k (0 = t0, total_steps() = T2).
    double node(std::size_t k) const;

private:
    double t0_, T1_, T2_;
    std::size_t steps_pre_, steps_post_;
};

}  // namespace motcal
