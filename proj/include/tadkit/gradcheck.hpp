#ifndef TADKIT_GRADCHECK_HPP
#define TADKIT_GRADCHECK_HPP

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tadkit/prng.hpp"
#include "tadkit/tape.hpp"

namespace tadkit {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    size_t worst_coord = 0;
    size_t coords_checked = 0;
};

// Central finite differences against a supplied analytic gradient; 64-bit
// only. Checks every coordinate, or a random subsample of at least
// min_coords when the parameter space is larger. The error metric is
// |analytic - numeric| / max(1, |numeric|).
template <typename F>
GradCheckReport grad_check(const std::vector<Param<double>*>& params,
                           const std::vector<Tensor<double>>& analytic, F&& eval,
                           uint64_t seed, size_t min_coords = 200, double step = 1e-3) {
    size_t total = 0;
    for (const auto* p : params) total += p->value.size();

    std::vector<std::pair<size_t, size_t>> coords;  // (param idx, flat offset)
    if (total <= min_coords) {
        for (size_t pi = 0; pi < params.size(); ++pi) {
            for (size_t i = 0; i < params[pi]->value.size(); ++i) coords.emplace_back(pi, i);
        }
    } else {
        Prng rng(mix_seed(seed, 0x67726164));
        std::set<std::pair<size_t, size_t>> picked;
        while (picked.size() < min_coords) {
            size_t pi = rng.next_below(params.size());
            size_t i = rng.next_below(params[pi]->value.size());
            picked.emplace(pi, i);
        }
        coords.assign(picked.begin(), picked.end());
    }

    GradCheckReport rep;
    rep.coords_checked = coords.size();
    for (const auto& [pi, i] : coords) {
        double& w = params[pi]->value.v[i];
        const double orig = w;
        auto numeric_at = [&](double h) {
            w = orig + h;
            const double f_plus = eval();
            w = orig - h;
            const double f_minus = eval();
            w = orig;
            return (f_plus - f_minus) / (2.0 * h);
        };
        double numeric = numeric_at(step);
        const double a = (pi < analytic.size() && !analytic[pi].v.empty()) ? analytic[pi].v[i] : 0.0;
        double rel = std::abs(a - numeric) / std::max(1.0, std::abs(numeric));
        if (rel > 1e-6) {
            // The loss is piecewise smooth (relu / argmax / interval-order
            // kinks); a bracket that straddles a kink poisons the estimate.
            // Accept the refined value only when it has converged in h.
            const double n1 = numeric_at(step * 0.1);
            const double n2 = numeric_at(step * 0.01);
            if (std::abs(n1 - n2) <= 1e-6 * std::max(1.0, std::abs(n1))) {
                numeric = n1;
                rel = std::abs(a - numeric) / std::max(1.0, std::abs(numeric));
            }
        }
        if (rel > rep.max_rel_err) {
            rep.max_rel_err = rel;
            rep.worst_param = params[pi]->name;
            rep.worst_coord = i;
        }
    }
    return rep;
}

}  // namespace tadkit

#endif
