#pragma once

// CSV readers/writers for every file the pipeline exchanges, plus the
// synthetic league generator used in place of proprietary game data.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "madness/bracket.hpp"
#include "madness/core.hpp"
#include "madness/features.hpp"

namespace madness::ingest {

inline constexpr const char* kGamesHeader =
    "season,date,home_id,away_id,neutral,home_score,away_score,spread";
inline constexpr const char* kEfficiencyHeader =
    "season,team_id,rating,oe,de,adj_oe,adj_de,tempo,adj_tempo";
inline constexpr const char* kSubmissionHeader = "matchup_low,matchup_high,prob";
inline constexpr const char* kOutcomesHeader = "matchup_low,matchup_high,low_won";
inline constexpr const char* kSpreadsHeader = "matchup_low,matchup_high,spread";
inline constexpr const char* kFieldHeader = "team_id";
inline constexpr const char* kBracketHeader = "slot,team_id";

struct LoadOptions {
    // Fail outright when more than this fraction of data rows is malformed.
    double max_malformed_fraction = 0.01;
};

template <typename T>
struct LoadResult {
    std::vector<T> records;
    std::vector<std::string> diagnostics;  // "line N: reason" per rejected row
};

LoadResult<GameRecord> parse_games(std::istream& in, const std::string& source,
                                   const LoadOptions& options = {});
LoadResult<GameRecord> load_games(const std::filesystem::path& path,
                                  const LoadOptions& options = {});
void write_games(std::ostream& out, const std::vector<GameRecord>& games);

LoadResult<features::TeamEfficiency> parse_efficiency(std::istream& in, const std::string& source,
                                                      const LoadOptions& options = {});
LoadResult<features::TeamEfficiency> load_efficiency(const std::filesystem::path& path,
                                                     const LoadOptions& options = {});
void write_efficiency(std::ostream& out, const std::vector<features::TeamEfficiency>& rows);

// Rejects missing, extra or duplicate matchups and probabilities outside [0,1].
Submission parse_submission(std::istream& in, const std::string& source, UniversePtr universe,
                            std::string entrant, std::string team = {});
Submission load_submission(const std::filesystem::path& path, UniversePtr universe,
                           std::string entrant = {}, std::string team = {});
void write_submission(std::ostream& out, const ProbabilityMap& probs);

OutcomeSet parse_outcomes(std::istream& in, const std::string& source);
OutcomeSet load_outcomes(const std::filesystem::path& path);
void write_outcomes(std::ostream& out, const OutcomeSet& outcomes);

std::map<MatchupId, double> load_spreads(const std::filesystem::path& path);
void write_spreads(std::ostream& out, const std::map<MatchupId, double>& spreads);

std::vector<TeamId> load_field(const std::filesystem::path& path);
void write_field(std::ostream& out, const std::vector<TeamId>& field);

bracket::BracketTemplate load_bracket(const std::filesystem::path& path);
void write_bracket(std::ostream& out, const bracket::BracketTemplate& bracket);

// Writes `text` to `path`, throwing ValidationError when the file cannot be opened.
void write_file(const std::filesystem::path& path, const std::string& text);

Date parse_date(const std::string& text);
std::string format_date(const Date& date);

enum class OutcomeModel {
    kSpread,      // logit P(home win) = b0 + b1 * spread
    kEfficiency,  // logit P(home win) linear in adjusted efficiencies and the neutral flag
};

struct EfficiencyTruth {
    double intercept = 0.25;
    double home_adj_oe = 0.1;
    double away_adj_oe = -0.1;
    double home_adj_de = -0.1;
    double away_adj_de = 0.1;
    double neutral = -0.25;
};

struct LeagueConfig {
    std::uint64_t seed = 0;
    int teams = 120;
    int seasons = 4;
    Season first_season = 2010;
    int games_per_season = 2000;
    double neutral_fraction = 0.1;
    double missing_spread_fraction = 0.0;
    // Latent strength (offense + defense) in points per 100 possessions.
    double strength_sd = 8.0;
    double season_carryover = 0.6;
    double home_advantage = 3.5;          // points
    double points_per_strength = 0.68;    // expected margin per unit of strength gap
    double spread_noise_sd = 1.5;
    double metric_noise_sd = 1.0;
    OutcomeModel outcome = OutcomeModel::kSpread;
    double spread_intercept = 0.0;
    double spread_slope = -0.16;
    EfficiencyTruth efficiency;
};

// key=value lines; '#' starts a comment. Unknown keys are rejected.
LeagueConfig parse_league_config(std::istream& in);
void apply_league_setting(LeagueConfig& config, const std::string& key, const std::string& value);

struct SyntheticLeague {
    LeagueConfig config;
    std::vector<GameRecord> games;
    std::vector<features::TeamEfficiency> efficiency;
    std::vector<double> home_win_prob;  // generating probability for each game
    std::map<std::pair<Season, TeamId>, double> strength;
};

// Deterministic in `config` (including its seed). Requires teams >= 4.
SyntheticLeague generate_synthetic_league(const LeagueConfig& config);

// Expected neutral-site margin-derived spread, from `team`'s side (no noise).
double true_neutral_spread(const SyntheticLeague& league, Season season, TeamId team,
                           TeamId opponent);
// Generating probability that `team` beats `opponent` at a neutral site.
double true_neutral_prob(const SyntheticLeague& league, Season season, TeamId team,
                         TeamId opponent);
ProbabilityMap true_probabilities(const SyntheticLeague& league, Season season,
                                  const UniversePtr& universe);

// Strongest `size` teams of `season`, ordered for BracketTemplate::standard:
// region by region, seeds 1..16, with seed lines dealt across regions in a snake.
std::vector<TeamId> seeded_field(const SyntheticLeague& league, Season season, std::size_t size);

}  // namespace madness::ingest
