#pragma once

// Domain types shared by every module: teams, games, the matchup universe,
// probability submissions and realized outcomes.

#include <chrono>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace madness {

class TeamId {
public:
    constexpr TeamId() = default;
    explicit TeamId(std::int64_t value);

    constexpr std::int64_t value() const { return value_; }
    constexpr auto operator<=>(const TeamId&) const = default;

private:
    std::int64_t value_ = 1;
};

std::string to_string(TeamId team);

// Canonical unordered pair: low < high.
class MatchupId {
public:
    // Throws ValidationError unless low < high.
    MatchupId(TeamId low, TeamId high);

    // Orders the two teams; throws when they are equal.
    static MatchupId of(TeamId a, TeamId b);

    TeamId low() const { return low_; }
    TeamId high() const { return high_; }
    bool involves(TeamId team) const { return team == low_ || team == high_; }

    auto operator<=>(const MatchupId&) const = default;

private:
    TeamId low_;
    TeamId high_;
};

std::string to_string(const MatchupId& matchup);

// Seasons are labelled by the calendar year in which they end (2014 for 2013-14).
using Season = int;
using Date = std::chrono::year_month_day;

struct GameRecord {
    Season season = 0;
    Date date{};
    TeamId home;
    TeamId away;
    bool neutral = false;
    int home_score = 0;
    int away_score = 0;
    // Points; negative means the home team is favored.
    std::optional<double> spread;

    bool home_won() const { return home_score > away_score; }
};

// Throws ValidationError describing the first violated invariant.
void validate(const GameRecord& game);

// Returns the canonical matchup and 1 iff the lower-id team won.
std::pair<MatchupId, int> orient(const GameRecord& game);

// All canonical pairs of the field sorted by (low, high). Throws on a
// duplicate team or a field with fewer than two teams.
std::vector<MatchupId> build_matchup_universe(std::span<const TeamId> field);

// The matchup universe of a field with O(log n) index lookup.
class Universe {
public:
    explicit Universe(std::span<const TeamId> field);

    std::size_t size() const { return matchups_.size(); }
    std::span<const TeamId> teams() const { return teams_; }
    std::span<const MatchupId> matchups() const { return matchups_; }
    const MatchupId& matchup(std::size_t index) const { return matchups_[index]; }

    bool contains(TeamId team) const;
    std::optional<std::size_t> index_of(const MatchupId& matchup) const;
    // Throws ValidationError when the matchup is outside the universe.
    std::size_t require_index(const MatchupId& matchup) const;

    bool operator==(const Universe& other) const { return teams_ == other.teams_; }

private:
    std::optional<std::size_t> position(TeamId team) const;

    std::vector<TeamId> teams_;
    std::vector<MatchupId> matchups_;
};

using UniversePtr = std::shared_ptr<const Universe>;

UniversePtr make_universe(std::span<const TeamId> field);
bool same_universe(const UniversePtr& a, const UniversePtr& b);

// One probability per universe matchup that the lower-id team wins.
class ProbabilityMap {
public:
    // Throws ValidationError on a size mismatch or a value outside [0, 1].
    ProbabilityMap(UniversePtr universe, std::vector<double> probs);

    // Accepts the map iff its key set equals the universe exactly.
    static ProbabilityMap from_map(UniversePtr universe, const std::map<MatchupId, double>& probs);

    const Universe& universe() const { return *universe_; }
    const UniversePtr& universe_ptr() const { return universe_; }
    std::size_t size() const { return probs_.size(); }
    std::span<const double> values() const { return probs_; }

    double operator[](std::size_t index) const { return probs_[index]; }
    double at(const MatchupId& matchup) const;
    // Probability that `team` beats `opponent`, oriented from the canonical entry.
    double win_prob(TeamId team, TeamId opponent) const;

private:
    UniversePtr universe_;
    std::vector<double> probs_;
};

struct Submission {
    std::string entrant;
    std::string team;
    ProbabilityMap probs;
};

struct Outcome {
    MatchupId matchup;
    int low_won = 0;
};

// Realized results keyed by matchup, restricted to games actually played.
class OutcomeSet {
public:
    OutcomeSet() = default;
    // Throws ValidationError on duplicate matchups or outcomes other than 0/1.
    explicit OutcomeSet(std::vector<Outcome> outcomes);

    void add(const MatchupId& matchup, int low_won);

    std::size_t size() const { return outcomes_.size(); }
    bool empty() const { return outcomes_.empty(); }
    auto begin() const { return outcomes_.begin(); }
    auto end() const { return outcomes_.end(); }
    std::optional<int> find(const MatchupId& matchup) const;

    // Throws ValidationError naming the first matchup outside the universe.
    void require_within(const Universe& universe) const;

    bool operator==(const OutcomeSet&) const = default;

private:
    std::vector<Outcome> outcomes_;  // sorted by matchup
};

inline bool operator==(const Outcome& a, const Outcome& b) {
    return a.matchup == b.matchup && a.low_won == b.low_won;
}

}  // namespace madness
