#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "madness/bracket.hpp"
#include "madness/error.hpp"
#include "madness/glm.hpp"
#include "madness/random.hpp"
#include "madness/scoring.hpp"
#include "oracles.hpp"

using namespace madness;
using namespace madness::bracket;

namespace {

std::vector<TeamId> field_of(int n) {
    std::vector<TeamId> field;
    for (int i = 1; i <= n; ++i) field.emplace_back(i);
    return field;
}

BracketTemplate plain_bracket(int n) {
    std::vector<std::optional<TeamId>> slots;
    for (int i = 1; i <= n; ++i) slots.emplace_back(TeamId(i));
    return BracketTemplate(slots);
}

Submission entry(const UniversePtr& universe, std::vector<double> probs, std::string name,
                 std::string team = {}) {
    return Submission{name, team.empty() ? name : team, ProbabilityMap(universe, std::move(probs))};
}

// Truth from latent strengths, and copies with logit noise.
std::vector<double> strength_truth(const Universe& universe, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> strength(universe.teams().size() + 1);
    for (auto& s : strength) s = gauss(rng);
    std::vector<double> probs;
    for (const auto& m : universe.matchups()) {
        const auto low = static_cast<std::size_t>(m.low().value());
        const auto high = static_cast<std::size_t>(m.high().value());
        probs.push_back(glm::inverse_logit(1.2 * (strength[low] - strength[high])));
    }
    return probs;
}

std::vector<double> perturbed(const std::vector<double>& truth, double sd, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, sd);
    std::vector<double> out;
    for (double p : truth) out.push_back(glm::inverse_logit(std::log(p / (1.0 - p)) + gauss(rng)));
    return out;
}

double three_sigma(double p, double n) { return 3.0 * std::sqrt(p * (1.0 - p) / n); }

}  // namespace

TEST_CASE("bracket templates") {
    CHECK_THROWS_AS(plain_bracket(6), ValidationError);
    CHECK_THROWS_AS(BracketTemplate({TeamId(1), TeamId(1)}), ValidationError);
    CHECK_THROWS_AS(BracketTemplate({TeamId(1), std::nullopt}), ValidationError);

    const auto b = plain_bracket(64);
    CHECK(b.rounds() == 6);
    CHECK(b.games() == 63);

    const auto field = field_of(64);
    const auto standard = BracketTemplate::standard(field);
    REQUIRE(standard.slots().size() == 64);
    CHECK(*standard.slots()[0] == TeamId(1));
    CHECK(*standard.slots()[1] == TeamId(16));
    CHECK(*standard.slots()[2] == TeamId(8));
    CHECK(*standard.slots()[3] == TeamId(9));
    CHECK(*standard.slots()[15] == TeamId(15));
    CHECK(*standard.slots()[16] == TeamId(17));
    CHECK_THROWS_AS(BracketTemplate::standard(std::span(field).first(20)), ValidationError);

    const BracketTemplate with_bye({TeamId(1), TeamId(2), TeamId(3), std::nullopt});
    CHECK(with_bye.games() == 2);
    CHECK(with_bye.rounds() == 2);
}

TEST_CASE("certain lower-id wins give the same tournament for every seed") {
    const auto universe = make_universe(field_of(64));
    const ProbabilityMap certain(universe, std::vector<double>(universe->size(), 1.0));
    const auto bracket = BracketTemplate::standard(field_of(64));
    const auto first = simulate_tournament(bracket, certain, std::uint64_t{1});
    CHECK(first.size() == 63);
    for (const auto& o : first) CHECK(o.low_won == 1);
    CHECK(champion(bracket, first) == TeamId(1));
    for (std::uint64_t seed = 2; seed < 20; ++seed) {
        CHECK(simulate_tournament(bracket, certain, seed) == first);
    }
}

TEST_CASE("missing bracket teams are rejected") {
    const auto universe = make_universe(field_of(4));
    const ProbabilityMap coin(universe, std::vector<double>(universe->size(), 0.5));
    CHECK_THROWS_AS(simulate_tournament(plain_bracket(8), coin, std::uint64_t{0}), ValidationError);
}

TEST_CASE("coin flips crown every team equally often") {
    const auto universe = make_universe(field_of(64));
    const ProbabilityMap coin(universe, std::vector<double>(universe->size(), 0.5));
    const auto bracket = plain_bracket(64);
    const int sims = 100000;
    std::map<TeamId, int> titles;
    auto engine = stream_engine(1, 0);
    for (int s = 0; s < sims; ++s) ++titles[champion(bracket, simulate_tournament(bracket, coin, engine))];
    const double p = 1.0 / 64.0;
    double chi2 = 0.0;
    for (TeamId team : field_of(64)) {
        CHECK(std::abs(titles[team] / static_cast<double>(sims) - p) <= three_sigma(p, sims));
        const double expected = p * sims;
        chi2 += (titles[team] - expected) * (titles[team] - expected) / expected;
    }
    // Upper 0.1% point of chi-square with 63 degrees of freedom.
    CHECK(chi2 < 103.4);
}

TEST_CASE("four-team championship odds match exhaustive enumeration") {
    const auto universe = make_universe(field_of(4));
    // (1,2) (1,3) (1,4) (2,3) (2,4) (3,4)
    const ProbabilityMap truth(universe, {0.65, 0.8, 0.55, 0.3, 0.9, 0.4});
    std::vector<std::vector<double>> p(4, std::vector<double>(4, 0.0));
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            if (i != j) p[i][j] = truth.win_prob(TeamId(i + 1), TeamId(j + 1));
        }
    }
    const auto paths = oracle::enumerate_paths(p, {0, 1, 2, 3});
    REQUIRE(paths.size() == 8);
    std::vector<double> expected(4, 0.0);
    double total = 0.0;
    for (const auto& path : paths) {
        expected[static_cast<std::size_t>(path.champion)] += path.prob;
        total += path.prob;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

    const auto bracket = plain_bracket(4);
    const int sims = 100000;
    std::vector<int> titles(4, 0);
    auto engine = stream_engine(1, 0);
    for (int s = 0; s < sims; ++s) {
        ++titles[static_cast<std::size_t>(champion(bracket, simulate_tournament(bracket, truth, engine)).value() - 1)];
    }
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(std::abs(titles[t] / static_cast<double>(sims) - expected[t]) <= three_sigma(expected[t], sims));
    }
}

TEST_CASE("truth resolution") {
    const auto universe = make_universe(field_of(3));
    const std::vector<Submission> entries{
        entry(universe, {0.2, 0.5, 0.9}, "a"),
        entry(universe, {0.5, 0.9, 0.2}, "b"),
        entry(universe, {0.9, 0.2, 0.5}, "c"),
    };
    const auto med = resolve_truth({"median", MedianAll{entries}}, universe);
    for (double v : med.values()) CHECK(v == 0.5);

    const auto pair = resolve_truth({"pair", MedianAll{{entries[0], entries[2]}}}, universe);
    CHECK(pair.values()[0] == doctest::Approx(0.55));
    CHECK(pair.values()[2] == doctest::Approx(0.7));

    const auto self = resolve_truth({"self", EntryTruth{entries[1]}}, universe);
    CHECK(self.values()[1] == 0.9);

    OutcomeSet ranking;
    ranking.add(MatchupId(TeamId(1), TeamId(2)), 1);
    // Scores on one game: c (0.9) < b (0.5) < a (0.2). The top two are c and b.
    const auto top = resolve_truth({"top", MedianTop{entries, 2, ranking}}, universe);
    CHECK(top.values()[0] == doctest::Approx(0.7));
    CHECK(top.values()[1] == doctest::Approx(0.55));
    CHECK_THROWS_AS(resolve_truth({"top", MedianTop{entries, 4, ranking}}, universe), ValidationError);

    const auto big = make_universe(field_of(68));
    const auto coin = resolve_truth({"coin", CoinFlip{}}, big);
    CHECK(coin.size() == 2278);
    for (double v : coin.values()) CHECK(v == 0.5);

    CHECK(median({0.2, 0.8}) == 0.5);
    CHECK(median({0.9, 0.2, 0.5}) == 0.5);
}

TEST_CASE("percentiles and ranks") {
    const std::vector<double> sorted{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(lower_percentile(sorted, 0.5) == 5);
    CHECK(lower_percentile(sorted, 0.025) == 1);
    CHECK(lower_percentile(sorted, 0.975) == 9);

    const std::vector<double> scores{0.4, 0.3, 0.4, 0.2, 0.5};
    const std::vector<std::size_t> team{0, 0, 1, 2, 1};
    CHECK(simulation_ranks(scores, team, false) == std::vector<std::uint32_t>{3, 2, 3, 1, 5});
    // Team bests: 0 -> 0.3, 1 -> 0.4, 2 -> 0.2.
    CHECK(simulation_ranks(scores, team, true) == std::vector<std::uint32_t>{2, 2, 3, 1, 3});
}

TEST_CASE("a lone entry always finishes first") {
    const auto universe = make_universe(field_of(8));
    const auto only = entry(universe, std::vector<double>(universe->size(), 0.7), "solo");
    StudyOptions options;
    options.sims = 500;
    const auto report = run_scenario({only}, only.probs, "solo", plain_bracket(8), options);
    REQUIRE(report.entries.size() == 1);
    CHECK(report.entries[0].median_rank == 1.0);
    CHECK(report.entries[0].frac_first == 1.0);
    CHECK(report.unique_winners == 1);
    CHECK(report.winning_scores.size() == 500);
}

TEST_CASE("two-game bracket rank statistics match enumeration") {
    const auto universe = make_universe(field_of(3));
    // (1,2) (1,3) (2,3)
    const std::vector<double> truth{0.7, 0.6, 0.45};
    const std::vector<Submission> entries{
        entry(universe, truth, "truth"),
        entry(universe, {0.5, 0.5, 0.5}, "coin"),
        entry(universe, {0.9, 0.2, 0.8}, "bold"),
    };
    std::vector<std::vector<double>> p(3, std::vector<double>(3, 0.0));
    const ProbabilityMap truth_map(universe, truth);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i != j) p[i][j] = truth_map.win_prob(TeamId(i + 1), TeamId(j + 1));
        }
    }
    const auto paths = oracle::enumerate_paths(p, {0, 1, 2, -1});
    REQUIRE(paths.size() == 4);

    std::vector<double> expect_first(3, 0.0);
    std::vector<double> expect_score(3, 0.0);
    std::vector<double> expect_sq(3, 0.0);
    std::vector<std::vector<double>> rank_pmf(3, std::vector<double>(4, 0.0));
    for (const auto& path : paths) {
        std::vector<double> scores;
        for (const auto& e : entries) {
            double total = 0.0;
            for (const auto& [i, j, low_won] : path.games) {
                const double q = e.probs.at(MatchupId(TeamId(i + 1), TeamId(j + 1)));
                total += oracle::clipped_game_loss(q, low_won ? 1 : 0);
            }
            scores.push_back(total / 2.0);
        }
        const auto ranks = oracle::plain_ranks(scores);
        for (std::size_t e = 0; e < 3; ++e) {
            if (ranks[e] == 1) expect_first[e] += path.prob;
            expect_score[e] += path.prob * scores[e];
            expect_sq[e] += path.prob * scores[e] * scores[e];
            rank_pmf[e][static_cast<std::size_t>(ranks[e])] += path.prob;
        }
    }

    StudyOptions options;
    options.sims = 100000;
    options.seed = 5;
    const BracketTemplate bracket({TeamId(1), TeamId(2), TeamId(3), std::nullopt});
    const auto report = run_scenario(entries, truth_map, "truth", bracket, options);
    const double n = static_cast<double>(options.sims);
    for (std::size_t e = 0; e < 3; ++e) {
        const auto& stats = report.entries[e];
        CHECK(std::abs(stats.frac_first - expect_first[e]) <= three_sigma(expect_first[e], n));
        const double sd = std::sqrt(std::max(0.0, expect_sq[e] - expect_score[e] * expect_score[e]));
        CHECK(std::abs(stats.mean_score - expect_score[e]) <= 3.0 * sd / std::sqrt(n) + 1e-9);

        // Median of the rank distribution, checked only away from a CDF step at 1/2.
        double below = 0.0;
        int med = 1;
        while (below + rank_pmf[e][static_cast<std::size_t>(med)] <= 0.5) {
            below += rank_pmf[e][static_cast<std::size_t>(med)];
            ++med;
        }
        const double at = below + rank_pmf[e][static_cast<std::size_t>(med)];
        if (below < 0.49 && at > 0.51) CHECK(stats.median_rank == med);
    }
}

TEST_CASE("coin-flip truth") {
    const auto universe = make_universe(field_of(16));
    std::mt19937_64 rng(3);
    const auto truth = strength_truth(*universe, rng);
    const std::vector<Submission> entries{
        entry(universe, std::vector<double>(universe->size(), 0.5), "coin"),
        entry(universe, truth, "skilled"),
        entry(universe, perturbed(truth, 0.4, rng), "noisy"),
    };
    StudyOptions options;
    options.sims = 4000;
    const auto reports = run_study(entries, {{"coin", CoinFlip{}}}, plain_bracket(16), options);
    REQUIRE(reports.size() == 1);
    const auto& report = reports[0];
    CHECK(report.entries[0].mean_score == doctest::Approx(0.6931471805599453).epsilon(1e-14));
    for (double w : report.winning_scores) CHECK(w <= 0.6931471805599453 + 1e-12);
    for (std::size_t e = 1; e < entries.size(); ++e) {
        // Spread of a mean score over 15 games is well under 0.05 at this sample size.
        CHECK(report.entries[e].mean_score >= 0.6931471805599453 - 0.01);
    }
}

TEST_CASE("report invariants") {
    const auto universe = make_universe(field_of(32));
    std::mt19937_64 rng(10);
    const auto truth = strength_truth(*universe, rng);
    std::vector<Submission> entries;
    for (int e = 0; e < 15; ++e) {
        entries.push_back(entry(universe, perturbed(truth, 0.6, rng), "e" + std::to_string(e),
                                "t" + std::to_string(e % 6)));
    }
    for (bool team_rule : {false, true}) {
        StudyOptions options;
        options.sims = 800;
        options.best_of_team = team_rule;
        const auto report =
            run_scenario(entries, ProbabilityMap(universe, truth), "t", plain_bracket(32), options);
        CHECK(report.winning_scores.size() == options.sims);
        CHECK(report.unique_winners <= entries.size());
        std::size_t winning_samples = 0;
        for (const auto& stats : report.entries) {
            CHECK(stats.frac_first >= 0.0);
            CHECK(stats.frac_top10 <= 1.0);
            CHECK(stats.frac_top10 >= stats.frac_first);
            CHECK(stats.rank_p025 <= stats.median_rank);
            CHECK(stats.median_rank <= stats.rank_p975);
            winning_samples += stats.winning_scores.size();
        }
        CHECK(winning_samples >= options.sims);

        // Recompute each simulation's scores from its own stream.
        for (std::size_t s = 0; s < options.sims; s += 97) {
            auto engine = stream_engine(options.seed, s, 0);
            const auto outcomes = simulate_tournament(plain_bracket(32), ProbabilityMap(universe, truth), engine);
            double best = std::numeric_limits<double>::infinity();
            for (const auto& e : entries) best = std::min(best, scoring::log_loss(e, outcomes));
            CHECK(report.winning_scores[s] == best);
        }
    }
}

TEST_CASE("the truth entry beats its perturbed copies") {
    const auto universe = make_universe(field_of(64));
    std::mt19937_64 rng(64);
    const auto truth = strength_truth(*universe, rng);
    std::vector<Submission> entries{entry(universe, truth, "truth")};
    for (int e = 0; e < 9; ++e) entries.push_back(entry(universe, perturbed(truth, 0.5, rng), "copy" + std::to_string(e)));
    StudyOptions options;
    options.sims = 2000;
    const auto report = run_scenario(entries, ProbabilityMap(universe, truth), "truth",
                                     BracketTemplate::standard(field_of(64)), options);
    CHECK(report.entries[0].frac_first > 0.1);
}

TEST_CASE("reports do not depend on the thread count") {
    const auto universe = make_universe(field_of(16));
    std::mt19937_64 rng(1);
    const auto truth = strength_truth(*universe, rng);
    std::vector<Submission> entries;
    for (int e = 0; e < 6; ++e) entries.push_back(entry(universe, perturbed(truth, 0.5, rng), "e" + std::to_string(e)));
    const std::vector<TruthScenario> scenarios{{"median", MedianAll{entries}}, {"coin", CoinFlip{}}};

    auto run = [&](unsigned threads) {
        StudyOptions options;
        options.sims = 1000;
        options.seed = 77;
        options.threads = threads;
        return run_study(entries, scenarios, plain_bracket(16), options);
    };
    const auto one = run(1);
    for (unsigned threads : {2u, 3u, 8u}) {
        const auto many = run(threads);
        REQUIRE(many.size() == one.size());
        for (std::size_t r = 0; r < one.size(); ++r) {
            CHECK(many[r].winning_scores == one[r].winning_scores);
            CHECK(many[r].unique_winners == one[r].unique_winners);
            for (std::size_t e = 0; e < entries.size(); ++e) {
                CHECK(many[r].entries[e].median_rank == one[r].entries[e].median_rank);
                CHECK(many[r].entries[e].frac_first == one[r].entries[e].frac_first);
                CHECK(many[r].entries[e].mean_score == one[r].entries[e].mean_score);
                CHECK(many[r].entries[e].winning_scores == one[r].entries[e].winning_scores);
            }
        }
    }
    // Scenarios draw from separate streams.
    CHECK(one[0].winning_scores != one[1].winning_scores);
}
