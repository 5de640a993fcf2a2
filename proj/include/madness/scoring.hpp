#pragma once

// Contest log-loss scoring and leaderboards.

#include <span>
#include <string>
#include <vector>

#include "madness/core.hpp"

namespace madness::scoring {

inline constexpr double kClip = 1e-15;

// -[y ln p + (1-y) ln(1-p)] with p clipped to [kClip, 1 - kClip].
double game_log_loss(double p, int y);

// Mean per-game loss over the played games in `outcomes`; unplayed matchups
// contribute nothing. Throws ValidationError naming a matchup missing from
// the submission's universe, or when `outcomes` is empty.
double log_loss(const ProbabilityMap& probs, const OutcomeSet& outcomes);
inline double log_loss(const Submission& sub, const OutcomeSet& outcomes) {
    return log_loss(sub.probs, outcomes);
}

// Played games resolved to universe indices, for scoring many submissions
// over one outcome set.
struct IndexedOutcomes {
    std::vector<std::size_t> index;
    std::vector<int> low_won;
};

IndexedOutcomes index_outcomes(const Universe& universe, const OutcomeSet& outcomes);
double log_loss(std::span<const double> probs, const IndexedOutcomes& outcomes);

struct ScoreRow {
    std::size_t rank = 0;
    std::string team;
    std::string entrant;
    double score = 0.0;
};

// Sorted ascending by score; equal scores share the minimum rank ("1,2,2,4").
struct ScoreBoard {
    std::vector<ScoreRow> rows;
};

// Competition ranks for `scores` (lower is better), in input order.
std::vector<std::size_t> competition_ranks(std::span<const double> scores);

// With `best_of_team`, each team keeps only its lowest-scoring entry.
// Throws ValidationError on an empty list.
ScoreBoard build_scoreboard(const std::vector<Submission>& subs, const OutcomeSet& outcomes,
                            bool best_of_team);

}  // namespace madness::scoring
