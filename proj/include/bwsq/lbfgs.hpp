#pragma once

#include <cmath>
#include <algorithm>
#include <deque>
#include <vector>

#include <Eigen/Dense>

namespace bwsq {

struct LbfgsOptions {
    int max_iterations = 1000;
    double gradient_tolerance = 1e-6;  // stop when ||grad||_2 < tolerance
    int history = 10;
    int max_line_search = 40;
};

template <typename Scalar>
struct LbfgsResult {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
    Scalar value{};
    Scalar gradient_norm{};
    int iterations = 0;
    bool converged = false;
};

// Limited-memory BFGS with a backtracking Armijo line search. `objective`
// is called as objective(x, grad) and returns f(x), writing the gradient
// into grad. Fully deterministic for a deterministic objective.
template <typename Scalar, typename Objective>
LbfgsResult<Scalar> minimize_lbfgs(Objective&& objective, Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x,
                                   const LbfgsOptions& options = {}) {
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    struct Pair {
        Vec s, y;
        Scalar rho;
    };

    Vec grad(x.size());
    Scalar value = objective(x, grad);
    std::deque<Pair> memory;

    LbfgsResult<Scalar> result;
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        const Scalar gnorm = grad.norm();
        if (gnorm < options.gradient_tolerance) {
            result.converged = true;
            break;
        }

        // Two-loop recursion for the search direction.
        Vec q = grad;
        std::vector<Scalar> alpha(memory.size());
        for (std::size_t i = memory.size(); i-- > 0;) {
            alpha[i] = memory[i].rho * memory[i].s.dot(q);
            q -= alpha[i] * memory[i].y;
        }
        if (!memory.empty()) {
            const auto& last = memory.back();
            q *= last.s.dot(last.y) / last.y.squaredNorm();
        } else {
            q /= std::max(Scalar(1), gnorm);
        }
        for (std::size_t i = 0; i < memory.size(); ++i) {
            const Scalar beta = memory[i].rho * memory[i].y.dot(q);
            q += (alpha[i] - beta) * memory[i].s;
        }
        Vec direction = -q;
        Scalar slope = grad.dot(direction);
        if (!(slope < 0)) {
            // Lost descent: restart from steepest descent.
            memory.clear();
            direction = -grad / std::max(Scalar(1), gnorm);
            slope = grad.dot(direction);
        }

        Scalar step = 1;
        Vec next_grad(x.size());
        Vec candidate;
        Scalar next_value{};
        bool accepted = false;
        for (int ls = 0; ls < options.max_line_search; ++ls) {
            candidate = x + step * direction;
            next_value = objective(candidate, next_grad);
            if (std::isfinite(static_cast<double>(next_value)) && next_value <= value + Scalar(1e-4) * step * slope) {
                accepted = true;
                break;
            }
            step *= Scalar(0.5);
        }
        if (!accepted) break;

        Vec s = candidate - x;
        Vec y = next_grad - grad;
        const Scalar sy = s.dot(y);
        if (sy > Scalar(1e-12) * s.norm() * y.norm()) {
            memory.push_back({std::move(s), std::move(y), Scalar(1) / sy});
            if (static_cast<int>(memory.size()) > options.history) memory.pop_front();
        }
        x = std::move(candidate);
        grad = std::move(next_grad);
        value = next_value;
    }
    if (!result.converged && grad.norm() < options.gradient_tolerance) result.converged = true;

    result.x = std::move(x);
    result.value = value;
    result.gradient_norm = grad.norm();
    result.iterations = iter;
    return result;
}

}  // namespace bwsq
