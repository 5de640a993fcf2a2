#include "madness/bracket.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "madness/error.hpp"
#include "madness/random.hpp"
#include "madness/scoring.hpp"

namespace madness::bracket {

BracketTemplate::BracketTemplate(std::vector<std::optional<TeamId>> slots)
    : slots_(std::move(slots)) {
    const std::size_t n = slots_.size();
    if (n < 2 || (n & (n - 1)) != 0) {
        throw ValidationError("bracket needs a power-of-two slot count, got " + std::to_string(n));
    }
    while ((std::size_t{1} << rounds_) < n) ++rounds_;

    std::set<TeamId> seen;
    for (const auto& slot : slots_) {
        if (!slot) continue;
        if (!seen.insert(*slot).second) {
            throw ValidationError("team " + to_string(*slot) + " appears twice in the bracket");
        }
    }
    team_count_ = seen.size();
    if (team_count_ < 2) throw ValidationError("bracket needs at least two teams");
}

BracketTemplate BracketTemplate::standard(std::span<const TeamId> seeded) {
    if (seeded.empty() || seeded.size() % 16 != 0) {
        throw ValidationError("standard bracket needs whole regions of 16 seeds");
    }
    std::vector<std::optional<TeamId>> slots;
    slots.reserve(seeded.size());
    for (std::size_t region = 0; region < seeded.size() / 16; ++region) {
        for (int seed : kStandardSeedOrder) {
            slots.emplace_back(seeded[region * 16 + static_cast<std::size_t>(seed - 1)]);
        }
    }
    return BracketTemplate(std::move(slots));
}

std::vector<TeamId> BracketTemplate::teams() const {
    std::vector<TeamId> out;
    for (const auto& slot : slots_) {
        if (slot) out.push_back(*slot);
    }
    return out;
}

namespace {

// Plays the bracket; `decide(low, high)` returns 1 iff the lower id wins.
template <typename Decide>
std::optional<TeamId> play(const BracketTemplate& bracket, Decide&& decide) {
    std::vector<std::optional<TeamId>> current(bracket.slots().begin(), bracket.slots().end());
    while (current.size() > 1) {
        std::vector<std::optional<TeamId>> next(current.size() / 2);
        for (std::size_t i = 0; i < next.size(); ++i) {
            const auto& x = current[2 * i];
            const auto& y = current[2 * i + 1];
            if (!x || !y) {
                next[i] = x ? x : y;
                continue;
            }
            const auto matchup = MatchupId::of(*x, *y);
            next[i] = decide(matchup) ? matchup.low() : matchup.high();
        }
        current = std::move(next);
    }
    return current.front();
}

}  // namespace

OutcomeSet simulate_tournament(const BracketTemplate& bracket, const ProbabilityMap& truth,
                               std::mt19937_64& engine) {
    for (TeamId team : bracket.teams()) {
        if (!truth.universe().contains(team)) {
            throw ValidationError("bracket team " + to_string(team) +
                                  " has no probabilities in the truth map");
        }
    }
    std::vector<Outcome> outcomes;
    outcomes.reserve(bracket.games());
    play(bracket, [&](const MatchupId& matchup) {
        const int low_won = uniform01(engine) < truth.at(matchup) ? 1 : 0;
        outcomes.push_back(Outcome{matchup, low_won});
        return low_won == 1;
    });
    return OutcomeSet(std::move(outcomes));
}

OutcomeSet simulate_tournament(const BracketTemplate& bracket, const ProbabilityMap& truth,
                               std::uint64_t seed) {
    auto engine = stream_engine(seed, 0);
    return simulate_tournament(bracket, truth, engine);
}

TeamId champion(const BracketTemplate& bracket, const OutcomeSet& outcomes) {
    const auto winner = play(bracket, [&](const MatchupId& matchup) {
        const auto result = outcomes.find(matchup);
        if (!result) throw ValidationError("no outcome for bracket game " + to_string(matchup));
        return *result == 1;
    });
    return *winner;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median of an empty list");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

ProbabilityMap median_map(const std::vector<const Submission*>& entries,
                          const UniversePtr& universe) {
    if (entries.empty()) throw ValidationError("median truth needs at least one entry");
    for (const auto* entry : entries) {
        if (!same_universe(entry->probs.universe_ptr(), universe)) {
            throw ValidationError("entry " + entry->entrant + " does not cover the universe");
        }
    }
    std::vector<double> out(universe->size());
    std::vector<double> column(entries.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t e = 0; e < entries.size(); ++e) column[e] = entries[e]->probs[i];
        out[i] = median(column);
    }
    return ProbabilityMap(universe, std::move(out));
}

}  // namespace

ProbabilityMap resolve_truth(const TruthScenario& scenario, const UniversePtr& universe) {
    if (const auto* truth = std::get_if<EntryTruth>(&scenario.kind)) {
        if (!same_universe(truth->entry.probs.universe_ptr(), universe)) {
            throw ValidationError("truth entry does not cover the universe");
        }
        return ProbabilityMap(universe, std::vector<double>(truth->entry.probs.values().begin(),
                                                            truth->entry.probs.values().end()));
    }
    if (const auto* all = std::get_if<MedianAll>(&scenario.kind)) {
        std::vector<const Submission*> entries;
        for (const auto& entry : all->entries) entries.push_back(&entry);
        return median_map(entries, universe);
    }
    if (const auto* top = std::get_if<MedianTop>(&scenario.kind)) {
        if (top->k == 0 || top->k > top->entries.size()) {
            throw ValidationError("top-k median needs 1 <= k <= " +
                                  std::to_string(top->entries.size()) + ", got k = " +
                                  std::to_string(top->k));
        }
        std::vector<double> scores;
        for (const auto& entry : top->entries) scores.push_back(scoring::log_loss(entry, top->ranking));
        std::vector<std::size_t> order(scores.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
        std::vector<const Submission*> best;
        for (std::size_t i = 0; i < top->k; ++i) best.push_back(&top->entries[order[i]]);
        return median_map(best, universe);
    }
    return ProbabilityMap(universe, std::vector<double>(universe->size(), 0.5));
}

double lower_percentile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ValidationError("percentile of an empty sample");
    const auto index =
        static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size() - 1)));
    return sorted[std::min(index, sorted.size() - 1)];
}

std::vector<std::uint32_t> simulation_ranks(std::span<const double> scores,
                                            std::span<const std::size_t> team_of,
                                            bool best_of_team) {
    std::vector<std::uint32_t> ranks(scores.size());
    if (!best_of_team) {
        std::vector<double> sorted(scores.begin(), scores.end());
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t e = 0; e < scores.size(); ++e) {
            const auto below = std::lower_bound(sorted.begin(), sorted.end(), scores[e]) - sorted.begin();
            ranks[e] = static_cast<std::uint32_t>(below + 1);
        }
        return ranks;
    }

    const std::size_t teams = team_of.empty() ? 0 : *std::max_element(team_of.begin(), team_of.end()) + 1;
    std::vector<double> best(teams, std::numeric_limits<double>::infinity());
    for (std::size_t e = 0; e < scores.size(); ++e) {
        best[team_of[e]] = std::min(best[team_of[e]], scores[e]);
    }
    std::vector<double> sorted = best;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t e = 0; e < scores.size(); ++e) {
        auto below = std::lower_bound(sorted.begin(), sorted.end(), scores[e]) - sorted.begin();
        if (best[team_of[e]] < scores[e]) --below;  // own team's better entry does not count
        ranks[e] = static_cast<std::uint32_t>(below + 1);
    }
    return ranks;
}

SimulationReport run_scenario(const std::vector<Submission>& entries, const ProbabilityMap& truth,
                              const std::string& name, const BracketTemplate& bracket,
                              const StudyOptions& options, std::uint64_t scenario_index) {
    if (entries.empty()) throw ValidationError("simulation needs at least one entry");
    if (options.sims == 0) throw ValidationError("simulation count must be positive");
    const auto& universe = entries.front().probs.universe_ptr();
    for (const auto& entry : entries) {
        if (!same_universe(entry.probs.universe_ptr(), universe)) {
            throw ValidationError("entry " + entry.entrant + " covers a different universe");
        }
    }
    for (TeamId team : bracket.teams()) {
        if (!universe->contains(team)) {
            throw ValidationError("bracket team " + to_string(team) + " is not in the entries' field");
        }
    }

    const std::size_t n_entries = entries.size();
    const std::size_t n_sims = options.sims;
    std::vector<std::size_t> team_of(n_entries);
    {
        std::map<std::string, std::size_t> team_index;
        for (std::size_t e = 0; e < n_entries; ++e) {
            team_of[e] = team_index.try_emplace(entries[e].team, team_index.size()).first->second;
        }
    }

    std::vector<double> scores(n_sims * n_entries);
    std::vector<std::uint32_t> ranks(n_sims * n_entries);

    auto run_block = [&](std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s) {
            auto engine = stream_engine(options.seed, s, scenario_index);
            const auto outcomes = simulate_tournament(bracket, truth, engine);
            const auto indexed = scoring::index_outcomes(*universe, outcomes);
            const std::span<double> sim_scores(scores.data() + s * n_entries, n_entries);
            for (std::size_t e = 0; e < n_entries; ++e) {
                sim_scores[e] = scoring::log_loss(entries[e].probs.values(), indexed);
            }
            const auto sim_ranks = simulation_ranks(sim_scores, team_of, options.best_of_team);
            std::copy(sim_ranks.begin(), sim_ranks.end(), ranks.begin() + static_cast<std::ptrdiff_t>(s * n_entries));
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(
        options.threads == 0 ? std::thread::hardware_concurrency() : options.threads,
        static_cast<unsigned>(n_sims)));
    if (threads == 1) {
        run_block(0, n_sims);
    } else {
        std::vector<std::thread> workers;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        const std::size_t chunk = (n_sims + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t begin = std::min(n_sims, t * chunk);
            const std::size_t end = std::min(n_sims, begin + chunk);
            workers.emplace_back([&, begin, end] {
                try {
                    run_block(begin, end);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
        for (auto& worker : workers) worker.join();
        if (failure) std::rethrow_exception(failure);
    }

    SimulationReport report;
    report.scenario = name;
    report.sims = n_sims;
    report.winning_scores.resize(n_sims);
    report.entries.resize(n_entries);
    std::vector<bool> ever_won(n_entries, false);

    for (std::size_t e = 0; e < n_entries; ++e) {
        report.entries[e].entrant = entries[e].entrant;
        report.entries[e].team = entries[e].team;
    }
    for (std::size_t s = 0; s < n_sims; ++s) {
        const double* row = scores.data() + s * n_entries;
        const double best = *std::min_element(row, row + n_entries);
        report.winning_scores[s] = best;
        for (std::size_t e = 0; e < n_entries; ++e) {
            if (row[e] == best) {
                ever_won[e] = true;
                report.entries[e].winning_scores.push_back(best);
            }
        }
    }
    report.unique_winners = static_cast<std::size_t>(std::count(ever_won.begin(), ever_won.end(), true));

    std::vector<double> sample(n_sims);
    for (std::size_t e = 0; e < n_entries; ++e) {
        auto& stats = report.entries[e];
        std::size_t first = 0;
        std::size_t top10 = 0;
        double total = 0.0;
        for (std::size_t s = 0; s < n_sims; ++s) {
            const auto rank = ranks[s * n_entries + e];
            sample[s] = rank;
            first += rank == 1 ? 1 : 0;
            top10 += rank <= 10 ? 1 : 0;
            total += scores[s * n_entries + e];
        }
        std::sort(sample.begin(), sample.end());
        stats.median_rank = lower_percentile(sample, 0.5);
        stats.rank_p025 = lower_percentile(sample, 0.025);
        stats.rank_p975 = lower_percentile(sample, 0.975);
        stats.frac_first = static_cast<double>(first) / static_cast<double>(n_sims);
        stats.frac_top10 = static_cast<double>(top10) / static_cast<double>(n_sims);
        stats.mean_score = total / static_cast<double>(n_sims);
    }
    return report;
}

std::vector<SimulationReport> run_study(const std::vector<Submission>& entries,
                                        const std::vector<TruthScenario>& scenarios,
                                        const BracketTemplate& bracket,
                                        const StudyOptions& options) {
    if (entries.empty()) throw ValidationError("simulation needs at least one entry");
    std::vector<SimulationReport> reports;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        const auto truth = resolve_truth(scenarios[i], entries.front().probs.universe_ptr());
        reports.push_back(run_scenario(entries, truth, scenarios[i].name, bracket, options, i));
    }
    return reports;
}

}  // namespace madness::bracket
