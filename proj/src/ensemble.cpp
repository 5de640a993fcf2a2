#include "madness/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "madness/error.hpp"
#include "madness/scoring.hpp"

namespace madness::ensemble {

double blend_value(double a, double b, double w) {
    // The heavier side's weight is formed first so that its complement is an
    // exact subtraction; swapping (a, b, w) -> (b, a, 1-w) then yields the
    // same pair of weights.
    double wa = 0.0;
    double wb = 0.0;
    if (w >= 0.5) {
        wa = w;
        wb = 1.0 - w;
    } else {
        wb = 1.0 - w;
        wa = 1.0 - wb;
    }
    return std::clamp(wa * a + wb * b, std::min(a, b), std::max(a, b));
}

ProbabilityMap blend(const ProbabilityMap& a, const ProbabilityMap& b, double w) {
    if (!(w >= 0.0 && w <= 1.0)) {
        throw ValidationError("blend weight must lie in [0,1]");
    }
    if (!same_universe(a.universe_ptr(), b.universe_ptr())) {
        throw ValidationError("cannot blend submissions over different matchup universes");
    }
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = blend_value(a[i], b[i], w);
    return ProbabilityMap(a.universe_ptr(), std::move(out));
}

Submission blend(const Submission& a, const Submission& b, double w, std::string entrant,
                 std::string team) {
    if (team.empty()) team = entrant;
    return Submission{std::move(entrant), std::move(team), blend(a.probs, b.probs, w)};
}

WeightSearch search_weight(const std::vector<SeasonHistory>& history, Pooling pooling) {
    if (history.empty()) throw ValidationError("weight search needs at least one season");

    std::vector<scoring::IndexedOutcomes> indexed;
    std::size_t total_games = 0;
    for (const auto& season : history) {
        if (!same_universe(season.a.universe_ptr(), season.b.universe_ptr())) {
            throw ValidationError("season submissions cover different universes");
        }
        indexed.push_back(scoring::index_outcomes(season.a.universe(), season.outcomes));
        if (indexed.back().index.empty()) throw ValidationError("season without outcomes");
        total_games += indexed.back().index.size();
    }

    WeightSearch result;
    result.curve.reserve(kGridPoints + 1);
    for (int step = 0; step <= kGridPoints; ++step) {
        const double w = static_cast<double>(step) / kGridPoints;
        double pooled = 0.0;
        double season_means = 0.0;
        for (std::size_t s = 0; s < history.size(); ++s) {
            const auto& games = indexed[s];
            double season_total = 0.0;
            for (std::size_t g = 0; g < games.index.size(); ++g) {
                const std::size_t i = games.index[g];
                const double p = blend_value(history[s].a[i], history[s].b[i], w);
                season_total += scoring::game_log_loss(p, games.low_won[g]);
            }
            pooled += season_total;
            season_means += season_total / static_cast<double>(games.index.size());
        }
        const double score = pooling == Pooling::kPooledGames
                                 ? pooled / static_cast<double>(total_games)
                                 : season_means / static_cast<double>(history.size());
        result.curve.emplace_back(w, score);
    }

    double best = std::numeric_limits<double>::infinity();
    for (const auto& [w, score] : result.curve) best = std::min(best, score);
    const double tolerance = 1e-12 * std::max(1.0, std::abs(best));
    bool found = false;
    for (const auto& [w, score] : result.curve) {
        if (score > best + tolerance) continue;
        if (!found || std::abs(w - 0.5) < std::abs(result.weight - 0.5)) {
            result.weight = w;
            result.score = score;
            found = true;
        }
    }
    return result;
}

}  // namespace madness::ensemble
