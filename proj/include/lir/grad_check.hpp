#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lir/rng.hpp"
#include "lir/tape.hpp"
#include "lir/tensor.hpp"

namespace lir {

// Central finite-difference check of reverse-mode gradients, 64-bit only.
// fn must rebuild the same scalar loss from the current parameter values each
// call; it receives a tape for the analytic pass and nullptr for the
// forward-only evaluations. Returns the max over checked coordinates of
//   |analytic - fd| / max(|analytic|, |fd|, 1e-12).
// When max_coords_per_tensor > 0, a deterministic subsample of coordinates is
// checked per tensor; scalars are always checked.
struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::int64_t worst_index = -1;
};

inline GradCheckReport grad_check(
    const std::function<Tensor<double>(Tape<double>*)>& fn,
    const std::vector<std::pair<std::string, Tensor<double>>>& params, double step,
    std::int64_t max_coords_per_tensor = -1, std::uint64_t seed = 0x5eedULL) {
    for (auto& [name, p] : params) {
        (void)name;
        const_cast<Tensor<double>&>(p).zero_grad();
    }

    std::vector<std::vector<double>> analytic;
    {
        Tape<double> tape;
        Tensor<double> loss = fn(&tape);
        tape.backward(loss);
        for (auto& [name, p] : params) {
            (void)name;
            auto& t = const_cast<Tensor<double>&>(p);
            analytic.emplace_back(t.grad_accum(), t.grad_accum() + t.numel());
        }
    }

    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& t = const_cast<Tensor<double>&>(params[pi].second);
        const std::int64_t n = t.numel();
        std::vector<std::int64_t> coords;
        if (max_coords_per_tensor <= 0 || n <= max_coords_per_tensor) {
            coords.resize(static_cast<std::size_t>(n));
            for (std::int64_t i = 0; i < n; ++i) coords[static_cast<std::size_t>(i)] = i;
        } else {
            Rng rng(Rng::mix(seed, pi));
            for (std::int64_t i = 0; i < max_coords_per_tensor; ++i) {
                coords.push_back(rng.uniform_int(n));
            }
        }
        for (const std::int64_t idx : coords) {
            double* v = t.data() + idx;
            const double keep = *v;
            *v = keep + step;
            const double up = fn(nullptr).item();
            *v = keep - step;
            const double down = fn(nullptr).item();
            *v = keep;
            const double fd = (up - down) / (2.0 * step);
            const double a = analytic[pi][static_cast<std::size_t>(idx)];
            const double rel =
                std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-12});
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = params[pi].first;
                report.worst_index = idx;
            }
        }
    }
    return report;
}

}  // namespace lir
