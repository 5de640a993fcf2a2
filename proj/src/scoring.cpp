#include "madness/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "madness/error.hpp"

namespace madness::scoring {

double game_log_loss(double p, int y) {
    const double q = std::clamp(p, kClip, 1.0 - kClip);
    if (y == 1) return -std::log(q);
    // 1 - (1 - kClip) is not exactly kClip in binary.
    return q == 1.0 - kClip ? -std::log(kClip) : -std::log1p(-q);
}

IndexedOutcomes index_outcomes(const Universe& universe, const OutcomeSet& outcomes) {
    IndexedOutcomes indexed;
    indexed.index.reserve(outcomes.size());
    indexed.low_won.reserve(outcomes.size());
    for (const auto& outcome : outcomes) {
        const auto index = universe.index_of(outcome.matchup);
        if (!index) {
            throw ValidationError("outcome matchup " + to_string(outcome.matchup) +
                                  " is missing from the submission");
        }
        indexed.index.push_back(*index);
        indexed.low_won.push_back(outcome.low_won);
    }
    return indexed;
}

double log_loss(std::span<const double> probs, const IndexedOutcomes& outcomes) {
    if (outcomes.index.empty()) {
        throw ValidationError("cannot score against an empty outcome set");
    }
    double total = 0.0;
    for (std::size_t g = 0; g < outcomes.index.size(); ++g) {
        total += game_log_loss(probs[outcomes.index[g]], outcomes.low_won[g]);
    }
    return total / static_cast<double>(outcomes.index.size());
}

double log_loss(const ProbabilityMap& probs, const OutcomeSet& outcomes) {
    return log_loss(probs.values(), index_outcomes(probs.universe(), outcomes));
}

std::vector<std::size_t> competition_ranks(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    std::vector<std::size_t> ranks(scores.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        if (pos > 0 && scores[order[pos]] == scores[order[pos - 1]]) {
            ranks[order[pos]] = ranks[order[pos - 1]];
        } else {
            ranks[order[pos]] = pos + 1;
        }
    }
    return ranks;
}

ScoreBoard build_scoreboard(const std::vector<Submission>& subs, const OutcomeSet& outcomes,
                            bool best_of_team) {
    if (subs.empty()) throw ValidationError("no submissions to score");

    std::vector<ScoreRow> rows;
    rows.reserve(subs.size());
    for (const auto& sub : subs) {
        rows.push_back(ScoreRow{0, sub.team, sub.entrant, log_loss(sub, outcomes)});
    }

    if (best_of_team) {
        std::map<std::string, std::size_t> best;  // team -> row index
        std::vector<ScoreRow> kept;
        for (const auto& row : rows) {
            auto [it, inserted] = best.try_emplace(row.team, kept.size());
            if (inserted) {
                kept.push_back(row);
            } else if (row.score < kept[it->second].score) {
                kept[it->second] = row;
            }
        }
        rows = std::move(kept);
    }

    std::stable_sort(rows.begin(), rows.end(),
                     [](const ScoreRow& a, const ScoreRow& b) { return a.score < b.score; });
    std::vector<double> scores;
    scores.reserve(rows.size());
    for (const auto& row : rows) scores.push_back(row.score);
    const auto ranks = competition_ranks(scores);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = ranks[i];
    return ScoreBoard{std::move(rows)};
}

}  // namespace madness::scoring
