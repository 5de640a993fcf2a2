#pragma once

// Feature models built on the logistic fitter: the spread model, the
// efficiency model with its declarative covariate grammar, the spread imputer
// for matchups without a posted line, and the pre/post March 1 selection harness.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "madness/core.hpp"
#include "madness/glm.hpp"

namespace madness::features {

struct TeamEfficiency {
    TeamId team;
    Season season = 0;
    double rating = 0.5;  // expected win fraction against an average team
    double oe = 100.0;    // points scored per 100 possessions
    double de = 100.0;    // points allowed per 100 possessions
    double adj_oe = 100.0;
    double adj_de = 100.0;
    double tempo = 1.7;  // possessions per minute
    double adj_tempo = 1.7;
};

void validate(const TeamEfficiency& row);

class EfficiencyTable {
public:
    EfficiencyTable() = default;
    explicit EfficiencyTable(const std::vector<TeamEfficiency>& rows);

    void add(const TeamEfficiency& row);
    const TeamEfficiency* find(Season season, TeamId team) const;
    // Throws ValidationError naming the team and season.
    const TeamEfficiency& require(Season season, TeamId team) const;
    std::size_t size() const { return rows_.size(); }

private:
    std::map<std::pair<Season, TeamId>, TeamEfficiency> rows_;
};

enum class Metric { kRating, kOe, kDe, kAdjOe, kAdjDe, kTempo, kAdjTempo };

std::string_view metric_name(Metric metric);
double metric_value(const TeamEfficiency& row, Metric metric);

// Inputs a covariate sees for one game, with "home" in the first slot.
struct GameContext {
    const TeamEfficiency& home;
    const TeamEfficiency& away;
    bool neutral;
};

// One covariate constructor. Terms form a small expression tree.
class Term {
public:
    enum class Kind { kHome, kAway, kDiff, kNeutral, kSquare, kProduct };

    static Term home(Metric metric);
    static Term away(Metric metric);
    static Term diff(Metric metric);
    static Term neutral();
    static Term square(Term inner);
    static Term product(std::vector<Term> factors);

    Kind kind() const { return kind_; }
    double evaluate(const GameContext& ctx) const;
    // Canonical text in the spec grammar, e.g. "prod(h:adj_oe,a:adj_de)".
    std::string label() const;

private:
    Term(Kind kind, Metric metric) : kind_(kind), metric_(metric) {}

    Kind kind_;
    Metric metric_ = Metric::kRating;
    std::vector<Term> children_;
};

// Declarative covariate list. Grammar (comma-separated terms):
//   h:<metric> | a:<metric> | diff:<metric> | neutral | x1 .. x15
//   sq(term) | prod(term,term[,...])
//   int2(term,...)   the terms plus all their two-way products
//   int3(term,...)   the terms plus all two- and three-way products
// Metrics: rating, oe, de, adj_oe, adj_de, tempo, adj_tempo.
struct ModelSpec {
    std::vector<Term> terms;
    bool intercept = true;

    // Throws ValidationError on a syntax error or a repeated term.
    static ModelSpec parse(std::string_view text, bool intercept = true);

    std::vector<std::string> labels() const;
    std::string to_string() const;
    std::vector<double> covariates(const GameContext& ctx) const;
};

// Fits (a)-(k) of the model-building table, by letter.
ModelSpec model_building_spec(char fit);
// The chosen efficiency model: adjusted offense/defense for both teams plus neutral.
ModelSpec default_efficiency_spec();

// Logistic fit of "home team won" on the posted spread. Throws
// ValidationError if any game lacks a spread.
glm::FittedGlm fit_m1(const std::vector<GameRecord>& games, const glm::FitOptions& options = {});

// Builds the design for `spec` over `games`; throws naming a missing team/season.
glm::DesignMatrix efficiency_design(const std::vector<GameRecord>& games,
                                    const EfficiencyTable& efficiency, const ModelSpec& spec);

glm::FittedGlm fit_m2(const std::vector<GameRecord>& games, const EfficiencyTable& efficiency,
                      const ModelSpec& spec = default_efficiency_spec(),
                      const glm::FitOptions& options = {});

// Least-squares spread predictor on adjusted-efficiency differences and the
// neutral-site flag. Replaces an unpublished proprietary line model.
struct SpreadImputer {
    // intercept, home-minus-away adj_oe, home-minus-away adj_de, neutral
    std::array<double, 4> coefficients{};
    std::array<double, 4> standard_errors{};
    double residual_sd = 0.0;
    std::size_t games = 0;

    double predict(const TeamEfficiency& home, const TeamEfficiency& away, bool neutral) const;
};

inline constexpr std::size_t kMinImputerGames = 500;

// Throws ValidationError with fewer than `min_games` usable games and
// NumericalError on a rank-deficient design.
SpreadImputer fit_spread_imputer(const std::vector<GameRecord>& games,
                                 const EfficiencyTable& efficiency,
                                 std::size_t min_games = kMinImputerGames);

struct SpreadModel {
    glm::FittedGlm fit;
};

struct EfficiencyModel {
    ModelSpec spec;
    glm::FittedGlm fit;
};

using FeatureModel = std::variant<SpreadModel, EfficiencyModel>;

struct PredictionInputs {
    UniversePtr universe;
    Season season = 0;
    const EfficiencyTable* efficiency = nullptr;
    const SpreadImputer* imputer = nullptr;
    // Posted lines keyed by matchup, from the lower-id team's side
    // (negative means the lower-id team is favored).
    std::map<MatchupId, double> observed_spreads;
};

// Neutral-site probability that `team` beats `opponent`. Averages the two
// home/away layouts so that p(A,B) + p(B,A) = 1.
double matchup_prob(const FeatureModel& model, TeamId team, TeamId opponent,
                    const PredictionInputs& inputs);

Submission predict_universe(const FeatureModel& model, const PredictionInputs& inputs,
                            std::string entrant, std::string team = {});

struct HarnessRow {
    std::string spec;
    double mean_log_loss = 0.0;
    std::size_t test_games = 0;
    std::size_t seasons = 0;
    std::vector<std::string> failures;  // seasons whose fit did not converge
};

struct HarnessReport {
    std::vector<HarnessRow> rows;
    std::vector<std::string> warnings;
};

// For each season, trains on games dated strictly before March 1 and scores
// the per-game log-loss on the rest; reports the mean over all pooled test games.
HarnessReport run_selection_harness(const std::vector<GameRecord>& games,
                                    const EfficiencyTable& efficiency,
                                    const std::vector<ModelSpec>& specs,
                                    const glm::FitOptions& options = {});

Date march_first(Season season);

}  // namespace madness::features
