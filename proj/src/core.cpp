#include "madness/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "madness/error.hpp"

namespace madness {

TeamId::TeamId(std::int64_t value) : value_(value) {
    if (value <= 0) {
        throw ValidationError("team id must be positive, got " + std::to_string(value));
    }
}

std::string to_string(TeamId team) { return std::to_string(team.value()); }

MatchupId::MatchupId(TeamId low, TeamId high) : low_(low), high_(high) {
    if (!(low < high)) {
        throw ValidationError("matchup (" + to_string(low) + "," + to_string(high) +
                              ") is not canonical: low must be below high");
    }
}

MatchupId MatchupId::of(TeamId a, TeamId b) {
    if (a == b) {
        throw ValidationError("a team cannot play itself (" + to_string(a) + ")");
    }
    return a < b ? MatchupId(a, b) : MatchupId(b, a);
}

std::string to_string(const MatchupId& matchup) {
    return "(" + to_string(matchup.low()) + "," + to_string(matchup.high()) + ")";
}

void validate(const GameRecord& game) {
    if (game.home == game.away) {
        throw ValidationError("home and away are the same team " + to_string(game.home));
    }
    if (game.home_score < 0 || game.away_score < 0) {
        throw ValidationError("negative score");
    }
    if (game.home_score == game.away_score) {
        throw ValidationError("tie score " + std::to_string(game.home_score) + "-" +
                              std::to_string(game.away_score) + " between " +
                              to_string(game.home) + " and " + to_string(game.away));
    }
    if (game.spread && !std::isfinite(*game.spread)) {
        throw ValidationError("non-finite spread");
    }
    if (!game.date.ok()) {
        throw ValidationError("invalid calendar date");
    }
}

std::pair<MatchupId, int> orient(const GameRecord& game) {
    validate(game);
    const auto matchup = MatchupId::of(game.home, game.away);
    const TeamId winner = game.home_won() ? game.home : game.away;
    return {matchup, winner == matchup.low() ? 1 : 0};
}

std::vector<MatchupId> build_matchup_universe(std::span<const TeamId> field) {
    std::vector<TeamId> teams(field.begin(), field.end());
    std::sort(teams.begin(), teams.end());
    const auto dup = std::adjacent_find(teams.begin(), teams.end());
    if (dup != teams.end()) {
        throw ValidationError("duplicate team id " + to_string(*dup) + " in field");
    }
    if (teams.size() < 2) {
        throw ValidationError("a field needs at least two teams");
    }

    std::vector<MatchupId> matchups;
    matchups.reserve(teams.size() * (teams.size() - 1) / 2);
    for (std::size_t i = 0; i < teams.size(); ++i) {
        for (std::size_t j = i + 1; j < teams.size(); ++j) {
            matchups.emplace_back(teams[i], teams[j]);
        }
    }
    return matchups;
}

Universe::Universe(std::span<const TeamId> field) : matchups_(build_matchup_universe(field)) {
    teams_.assign(field.begin(), field.end());
    std::sort(teams_.begin(), teams_.end());
}

bool Universe::contains(TeamId team) const { return position(team).has_value(); }

std::optional<std::size_t> Universe::position(TeamId team) const {
    const auto it = std::lower_bound(teams_.begin(), teams_.end(), team);
    if (it == teams_.end() || *it != team) return std::nullopt;
    return static_cast<std::size_t>(it - teams_.begin());
}

std::optional<std::size_t> Universe::index_of(const MatchupId& matchup) const {
    const auto i = position(matchup.low());
    const auto j = position(matchup.high());
    if (!i || !j) return std::nullopt;
    // Row-major offset into the strict upper triangle.
    const std::size_t n = teams_.size();
    return *i * n - *i * (*i + 1) / 2 + (*j - *i - 1);
}

std::size_t Universe::require_index(const MatchupId& matchup) const {
    const auto index = index_of(matchup);
    if (!index) {
        throw ValidationError("matchup " + to_string(matchup) + " is outside the universe");
    }
    return *index;
}

UniversePtr make_universe(std::span<const TeamId> field) {
    return std::make_shared<const Universe>(field);
}

bool same_universe(const UniversePtr& a, const UniversePtr& b) {
    return a == b || (a && b && *a == *b);
}

ProbabilityMap::ProbabilityMap(UniversePtr universe, std::vector<double> probs)
    : universe_(std::move(universe)), probs_(std::move(probs)) {
    if (!universe_) throw ValidationError("probability map without a universe");
    if (probs_.size() != universe_->size()) {
        throw ValidationError("expected " + std::to_string(universe_->size()) +
                              " probabilities, got " + std::to_string(probs_.size()));
    }
    for (std::size_t i = 0; i < probs_.size(); ++i) {
        const double p = probs_[i];
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
            std::ostringstream msg;
            msg << "probability " << p << " for matchup " << to_string(universe_->matchup(i))
                << " is outside [0,1]";
            throw ValidationError(msg.str());
        }
    }
}

ProbabilityMap ProbabilityMap::from_map(UniversePtr universe,
                                        const std::map<MatchupId, double>& probs) {
    std::vector<double> values(universe->size(), 0.0);
    std::vector<bool> seen(universe->size(), false);
    for (const auto& [matchup, p] : probs) {
        const auto index = universe->index_of(matchup);
        if (!index) {
            throw ValidationError("extra matchup " + to_string(matchup) + " not in universe");
        }
        values[*index] = p;
        seen[*index] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) {
            throw ValidationError("missing matchup " + to_string(universe->matchup(i)));
        }
    }
    return ProbabilityMap(std::move(universe), std::move(values));
}

double ProbabilityMap::at(const MatchupId& matchup) const {
    return probs_[universe_->require_index(matchup)];
}

double ProbabilityMap::win_prob(TeamId team, TeamId opponent) const {
    const auto matchup = MatchupId::of(team, opponent);
    const double p = at(matchup);
    return team == matchup.low() ? p : 1.0 - p;
}

OutcomeSet::OutcomeSet(std::vector<Outcome> outcomes) : outcomes_(std::move(outcomes)) {
    std::sort(outcomes_.begin(), outcomes_.end(),
              [](const Outcome& a, const Outcome& b) { return a.matchup < b.matchup; });
    for (std::size_t i = 0; i < outcomes_.size(); ++i) {
        if (outcomes_[i].low_won != 0 && outcomes_[i].low_won != 1) {
            throw ValidationError("outcome for " + to_string(outcomes_[i].matchup) +
                                  " must be 0 or 1");
        }
        if (i > 0 && outcomes_[i].matchup == outcomes_[i - 1].matchup) {
            throw ValidationError("duplicate outcome for " + to_string(outcomes_[i].matchup));
        }
    }
}

void OutcomeSet::add(const MatchupId& matchup, int low_won) {
    if (low_won != 0 && low_won != 1) {
        throw ValidationError("outcome for " + to_string(matchup) + " must be 0 or 1");
    }
    const auto it = std::lower_bound(
        outcomes_.begin(), outcomes_.end(), matchup,
        [](const Outcome& o, const MatchupId& m) { return o.matchup < m; });
    if (it != outcomes_.end() && it->matchup == matchup) {
        throw ValidationError("duplicate outcome for " + to_string(matchup));
    }
    outcomes_.insert(it, Outcome{matchup, low_won});
}

std::optional<int> OutcomeSet::find(const MatchupId& matchup) const {
    const auto it = std::lower_bound(
        outcomes_.begin(), outcomes_.end(), matchup,
        [](const Outcome& o, const MatchupId& m) { return o.matchup < m; });
    if (it == outcomes_.end() || it->matchup != matchup) return std::nullopt;
    return it->low_won;
}

void OutcomeSet::require_within(const Universe& universe) const {
    for (const auto& outcome : outcomes_) {
        universe.require_index(outcome.matchup);
    }
}

}  // namespace madness
