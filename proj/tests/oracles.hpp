#pragma once

// Independent reference computations used by the unit and acceptance suites.
// Nothing here calls into the library routine it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

// Plain-loop negative log-likelihood of a logistic model with intercept and
// one covariate.
inline double nll_1d(const std::vector<double>& x, const std::vector<int>& y, double b0, double b1) {
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double eta = b0 + b1 * x[i];
        const double log1pexp = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
        total += log1pexp - (y[i] == 1 ? eta : 0.0);
    }
    return total;
}

// Coarse-to-fine grid minimization of nll_1d over [-2, 2]^2. Each stage
// re-centres a 21x21 grid on the previous best point with a ten-fold finer
// step, ending at step 1e-4. Valid because the objective is convex.
inline std::pair<double, double> grid_search_logistic(const std::vector<double>& x,
                                                      const std::vector<int>& y) {
    double best0 = 0.0;
    double best1 = 0.0;
    double best = std::numeric_limits<double>::infinity();
    // Stage 0 covers the whole box at step 0.1.
    for (int i = -20; i <= 20; ++i) {
        for (int j = -20; j <= 20; ++j) {
            const double v = nll_1d(x, y, 0.1 * i, 0.1 * j);
            if (v < best) {
                best = v;
                best0 = 0.1 * i;
                best1 = 0.1 * j;
            }
        }
    }
    for (double step : {0.01, 0.001, 0.0001}) {
        const double c0 = best0;
        const double c1 = best1;
        for (int i = -10; i <= 10; ++i) {
            for (int j = -10; j <= 10; ++j) {
                const double b0 = c0 + step * i;
                const double b1 = c1 + step * j;
                const double v = nll_1d(x, y, b0, b1);
                if (v < best) {
                    best = v;
                    best0 = b0;
                    best1 = b1;
                }
            }
        }
    }
    return {best0, best1};
}

// Central finite differences of f at x.
inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h = 1e-6) {
    std::vector<double> grad(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double saved = x[j];
        x[j] = saved + h;
        const double up = f(x);
        x[j] = saved - h;
        const double down = f(x);
        x[j] = saved;
        grad[j] = (up - down) / (2.0 * h);
    }
    return grad;
}

inline double clipped_game_loss(double p, int y) {
    const double q = std::min(std::max(p, 1e-15), 1.0 - 1e-15);
    return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

// Scores every weight on the 0.01 grid with its own loop and returns the
// first strict minimum (ties are not expected on random inputs).
struct BlendCase {
    std::vector<double> a;
    std::vector<double> b;
    std::vector<std::size_t> played;
    std::vector<int> low_won;
};

inline double brute_force_blend_argmin(const std::vector<BlendCase>& seasons) {
    double best_w = -1.0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 100; ++k) {
        const double w = k / 100.0;
        double total = 0.0;
        std::size_t games = 0;
        for (const auto& s : seasons) {
            for (std::size_t g = 0; g < s.played.size(); ++g) {
                const double p = w * s.a[s.played[g]] + (1.0 - w) * s.b[s.played[g]];
                total += clipped_game_loss(p, s.low_won[g]);
                ++games;
            }
        }
        const double score = total / static_cast<double>(games);
        if (score < best) {
            best = score;
            best_w = w;
        }
    }
    return best_w;
}

// A single-elimination bracket given as team labels in slot order (a power
// of two of them, -1 for a bye) with p[i][j] = probability that i beats j.
// Enumerates every result path; a bracket with t teams has 2^(t-1).
struct Path {
    double prob = 1.0;
    int champion = -1;
    // (i, j, i won) for each game, i < j
    std::vector<std::tuple<int, int, bool>> games;
};

inline std::vector<Path> enumerate_paths(const std::vector<std::vector<double>>& p,
                                         const std::vector<int>& slots) {
    std::vector<Path> paths;
    std::function<void(std::vector<int>, std::size_t, std::vector<int>, Path)> recurse =
        [&](std::vector<int> round, std::size_t game, std::vector<int> next, Path path) {
            if (round.size() == 1) {
                path.champion = round.front();
                paths.push_back(path);
                return;
            }
            if (2 * game >= round.size()) {
                recurse(next, 0, {}, path);
                return;
            }
            const int a = round[2 * game];
            const int b = round[2 * game + 1];
            if (a < 0 || b < 0) {
                next.push_back(a < 0 ? b : a);
                recurse(round, game + 1, next, path);
                return;
            }
            for (int winner : {a, b}) {
                Path branch = path;
                const double pw = winner == a ? p[a][b] : p[b][a];
                branch.prob *= pw;
                branch.games.emplace_back(std::min(a, b), std::max(a, b), winner == std::min(a, b));
                auto advanced = next;
                advanced.push_back(winner);
                recurse(round, game + 1, advanced, branch);
            }
        };
    recurse(slots, 0, {}, Path{});
    return paths;
}

// Competition rank of each score: one plus the number strictly lower.
inline std::vector<int> plain_ranks(const std::vector<double>& scores) {
    std::vector<int> ranks(scores.size(), 1);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        for (double other : scores) {
            if (other < scores[i]) ++ranks[i];
        }
    }
    return ranks;
}

}  // namespace oracle
