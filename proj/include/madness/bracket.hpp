#pragma once

// Monte Carlo simulation of single-elimination tournaments under an assumed
// set of true game probabilities, and the rank statistics of a pool of
// entries scored against each simulated tournament.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "madness/core.hpp"

namespace madness::bracket {

// Slots in bracket order: slot 2i meets slot 2i+1 in round one and winners of
// adjacent games meet in the next round. An empty slot is a bye.
class BracketTemplate {
public:
    // Throws ValidationError unless the slot count is a power of two, teams
    // are distinct and at least two teams are present.
    explicit BracketTemplate(std::vector<std::optional<TeamId>> slots);

    // Standard NCAA layout. `seeded` lists regions in order, each as sixteen
    // teams by seed 1..16; slots pair 1v16, 8v9, 5v12, 4v13, 6v11, 3v14, 7v10, 2v15.
    static BracketTemplate standard(std::span<const TeamId> seeded);

    std::span<const std::optional<TeamId>> slots() const { return slots_; }
    std::vector<TeamId> teams() const;
    int rounds() const { return rounds_; }
    // Games actually contested (byes excluded): teams - 1.
    std::size_t games() const { return team_count_ - 1; }

private:
    std::vector<std::optional<TeamId>> slots_;
    int rounds_ = 0;
    std::size_t team_count_ = 0;
};

inline constexpr int kStandardSeedOrder[16] = {1, 16, 8, 9, 5, 12, 4, 13, 6, 11, 3, 14, 7, 10, 2, 15};

// Plays every game round by round; each winner is drawn with the truth
// probability. Throws ValidationError if a reachable matchup is missing.
OutcomeSet simulate_tournament(const BracketTemplate& bracket, const ProbabilityMap& truth,
                               std::mt19937_64& engine);
OutcomeSet simulate_tournament(const BracketTemplate& bracket, const ProbabilityMap& truth,
                               std::uint64_t seed);

// Champion of a completed tournament.
TeamId champion(const BracketTemplate& bracket, const OutcomeSet& outcomes);

struct EntryTruth {
    Submission entry;
};
struct MedianAll {
    std::vector<Submission> entries;
};
struct MedianTop {
    std::vector<Submission> entries;
    std::size_t k = 10;
    OutcomeSet ranking;  // outcomes used to pick the k best entries
};
struct CoinFlip {};

struct TruthScenario {
    std::string name;
    std::variant<EntryTruth, MedianAll, MedianTop, CoinFlip> kind;
};

// Median of an odd count is the middle value; of an even count, the midpoint
// of the two middle values.
double median(std::vector<double> values);

// Throws ValidationError when k exceeds the entry count or an entry does not
// cover the universe.
ProbabilityMap resolve_truth(const TruthScenario& scenario, const UniversePtr& universe);

struct StudyOptions {
    std::size_t sims = 10000;
    std::uint64_t seed = 0;
    bool best_of_team = false;
    unsigned threads = 1;
};

struct EntryStats {
    std::string entrant;
    std::string team;
    double median_rank = 0.0;
    double rank_p025 = 0.0;
    double rank_p975 = 0.0;
    double frac_first = 0.0;
    double frac_top10 = 0.0;
    double mean_score = 0.0;
    // This entry's score in every simulation it won outright or shared.
    std::vector<double> winning_scores;
};

struct SimulationReport {
    std::string scenario;
    std::size_t sims = 0;
    std::vector<EntryStats> entries;
    // Entries that posted the lowest score in at least one simulation.
    std::size_t unique_winners = 0;
    // The lowest score of each simulation, in simulation order.
    std::vector<double> winning_scores;
};

// Lower-interpolation percentile: sorted[floor(q * (n - 1))].
double lower_percentile(std::span<const double> sorted, double q);

// Ranks within one simulation. Without the team rule an entry's rank is one
// plus the number of entries with a strictly lower score; with it, one plus
// the number of other teams whose best entry scored strictly lower.
std::vector<std::uint32_t> simulation_ranks(std::span<const double> scores,
                                            std::span<const std::size_t> team_of,
                                            bool best_of_team);

// Entries must share one universe that covers the bracket.
SimulationReport run_scenario(const std::vector<Submission>& entries, const ProbabilityMap& truth,
                              const std::string& name, const BracketTemplate& bracket,
                              const StudyOptions& options, std::uint64_t scenario_index = 0);

std::vector<SimulationReport> run_study(const std::vector<Submission>& entries,
                                        const std::vector<TruthScenario>& scenarios,
                                        const BracketTemplate& bracket,
                                        const StudyOptions& options);

}  // namespace madness::bracket
