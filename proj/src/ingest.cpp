#include "madness/ingest.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "madness/error.hpp"
#include "madness/glm.hpp"
#include "madness/random.hpp"

namespace madness::ingest {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

bool next_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

void expect_header(std::istream& in, const std::string& source, const char* header) {
    std::string line;
    if (!next_line(in, line)) throw ValidationError(source + ": empty file");
    if (line != header) {
        throw ValidationError(source + ": header must be '" + header + "', got '" + line + "'");
    }
}

template <typename T>
T parse_number(const std::string& text, const char* what) {
    T value{};
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw ValidationError(std::string("bad ") + what + " '" + text + "'");
    }
    if constexpr (std::is_floating_point_v<T>) {
        if (!std::isfinite(value)) throw ValidationError(std::string("non-finite ") + what);
    }
    return value;
}

TeamId parse_team(const std::string& text) { return TeamId(parse_number<std::int64_t>(text, "team id")); }

bool parse_flag(const std::string& text) {
    if (text == "0") return false;
    if (text == "1") return true;
    throw ValidationError("flag must be 0 or 1, got '" + text + "'");
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    return in;
}

// Shared row loop for the tolerant loaders.
template <typename T, typename ParseRow>
LoadResult<T> parse_rows(std::istream& in, const std::string& source, const char* header,
                         std::size_t columns, const LoadOptions& options, ParseRow&& parse_row) {
    expect_header(in, source, header);
    LoadResult<T> result;
    std::string line;
    std::size_t line_no = 1;
    std::size_t rows = 0;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        ++rows;
        try {
            const auto fields = split(line);
            if (fields.size() != columns) {
                throw ValidationError("expected " + std::to_string(columns) + " columns, got " +
                                      std::to_string(fields.size()));
            }
            result.records.push_back(parse_row(fields));
        } catch (const ValidationError& e) {
            result.diagnostics.push_back(source + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (rows > 0 && static_cast<double>(result.diagnostics.size()) >
                        options.max_malformed_fraction * static_cast<double>(rows)) {
        std::string message = source + ": " + std::to_string(result.diagnostics.size()) + " of " +
                              std::to_string(rows) + " rows malformed";
        for (std::size_t i = 0; i < std::min<std::size_t>(5, result.diagnostics.size()); ++i) {
            message += "\n  " + result.diagnostics[i];
        }
        throw ValidationError(message);
    }
    return result;
}

std::string format_double(double v) { return fmt::format("{}", v); }

// Rows of "low,high,value" keyed by canonical matchup; rejects duplicates.
template <typename Value>
std::vector<std::pair<MatchupId, Value>> parse_matchup_rows(std::istream& in, const std::string& source,
                                                            const char* header, const char* what) {
    expect_header(in, source, header);
    std::vector<std::pair<MatchupId, Value>> rows;
    std::set<MatchupId> seen;
    std::string line;
    std::size_t line_no = 1;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto fields = split(line);
            if (fields.size() != 3) throw ValidationError("expected 3 columns");
            const MatchupId matchup(parse_team(fields[0]), parse_team(fields[1]));
            if (!seen.insert(matchup).second) {
                throw ValidationError("duplicate matchup " + to_string(matchup));
            }
            rows.emplace_back(matchup, parse_number<Value>(fields[2], what));
        } catch (const ValidationError& e) {
            throw ValidationError(source + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

}  // namespace

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

Date parse_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw ValidationError("date must be YYYY-MM-DD, got '" + text + "'");
    }
    const int y = parse_number<int>(text.substr(0, 4), "year");
    const auto m = parse_number<unsigned>(text.substr(5, 2), "month");
    const auto d = parse_number<unsigned>(text.substr(8, 2), "day");
    const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) throw ValidationError("invalid date '" + text + "'");
    return date;
}

std::string format_date(const Date& date) {
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(date.year()),
                       static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
}

LoadResult<GameRecord> parse_games(std::istream& in, const std::string& source,
                                   const LoadOptions& options) {
    return parse_rows<GameRecord>(in, source, kGamesHeader, 8, options, [](const auto& f) {
        GameRecord game;
        game.season = parse_number<int>(f[0], "season");
        game.date = parse_date(f[1]);
        game.home = parse_team(f[2]);
        game.away = parse_team(f[3]);
        game.neutral = parse_flag(f[4]);
        game.home_score = parse_number<int>(f[5], "home score");
        game.away_score = parse_number<int>(f[6], "away score");
        if (!f[7].empty()) game.spread = parse_number<double>(f[7], "spread");
        validate(game);
        return game;
    });
}

LoadResult<GameRecord> load_games(const std::filesystem::path& path, const LoadOptions& options) {
    auto in = open(path);
    return parse_games(in, path.string(), options);
}

void write_games(std::ostream& out, const std::vector<GameRecord>& games) {
    out << kGamesHeader << '\n';
    for (const auto& g : games) {
        out << g.season << ',' << format_date(g.date) << ',' << g.home.value() << ','
            << g.away.value() << ',' << (g.neutral ? 1 : 0) << ',' << g.home_score << ','
            << g.away_score << ',' << (g.spread ? format_double(*g.spread) : "") << '\n';
    }
}

LoadResult<features::TeamEfficiency> parse_efficiency(std::istream& in, const std::string& source,
                                                      const LoadOptions& options) {
    return parse_rows<features::TeamEfficiency>(
        in, source, kEfficiencyHeader, 9, options, [](const auto& f) {
            features::TeamEfficiency row;
            row.season = parse_number<int>(f[0], "season");
            row.team = parse_team(f[1]);
            row.rating = parse_number<double>(f[2], "rating");
            row.oe = parse_number<double>(f[3], "oe");
            row.de = parse_number<double>(f[4], "de");
            row.adj_oe = parse_number<double>(f[5], "adj_oe");
            row.adj_de = parse_number<double>(f[6], "adj_de");
            row.tempo = parse_number<double>(f[7], "tempo");
            row.adj_tempo = parse_number<double>(f[8], "adj_tempo");
            features::validate(row);
            return row;
        });
}

LoadResult<features::TeamEfficiency> load_efficiency(const std::filesystem::path& path,
                                                     const LoadOptions& options) {
    auto in = open(path);
    return parse_efficiency(in, path.string(), options);
}

void write_efficiency(std::ostream& out, const std::vector<features::TeamEfficiency>& rows) {
    out << kEfficiencyHeader << '\n';
    for (const auto& r : rows) {
        out << r.season << ',' << r.team.value() << ',' << format_double(r.rating) << ','
            << format_double(r.oe) << ',' << format_double(r.de) << ',' << format_double(r.adj_oe)
            << ',' << format_double(r.adj_de) << ',' << format_double(r.tempo) << ','
            << format_double(r.adj_tempo) << '\n';
    }
}

Submission parse_submission(std::istream& in, const std::string& source, UniversePtr universe,
                            std::string entrant, std::string team) {
    const auto rows = parse_matchup_rows<double>(in, source, kSubmissionHeader, "probability");
    std::map<MatchupId, double> probs(rows.begin(), rows.end());
    try {
        auto map = ProbabilityMap::from_map(std::move(universe), probs);
        if (team.empty()) team = entrant;
        return Submission{std::move(entrant), std::move(team), std::move(map)};
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    }
}

Submission load_submission(const std::filesystem::path& path, UniversePtr universe,
                           std::string entrant, std::string team) {
    auto in = open(path);
    if (entrant.empty()) entrant = path.stem().string();
    return parse_submission(in, path.string(), std::move(universe), std::move(entrant), std::move(team));
}

void write_submission(std::ostream& out, const ProbabilityMap& probs) {
    out << kSubmissionHeader << '\n';
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const auto& m = probs.universe().matchup(i);
        out << m.low().value() << ',' << m.high().value() << ',' << format_double(probs[i]) << '\n';
    }
}

OutcomeSet parse_outcomes(std::istream& in, const std::string& source) {
    const auto rows = parse_matchup_rows<int>(in, source, kOutcomesHeader, "outcome");
    std::vector<Outcome> outcomes;
    for (const auto& [matchup, low_won] : rows) outcomes.push_back(Outcome{matchup, low_won});
    try {
        return OutcomeSet(std::move(outcomes));
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    }
}

OutcomeSet load_outcomes(const std::filesystem::path& path) {
    auto in = open(path);
    return parse_outcomes(in, path.string());
}

void write_outcomes(std::ostream& out, const OutcomeSet& outcomes) {
    out << kOutcomesHeader << '\n';
    for (const auto& o : outcomes) {
        out << o.matchup.low().value() << ',' << o.matchup.high().value() << ',' << o.low_won << '\n';
    }
}

std::map<MatchupId, double> load_spreads(const std::filesystem::path& path) {
    auto in = open(path);
    const auto rows = parse_matchup_rows<double>(in, path.string(), kSpreadsHeader, "spread");
    return {rows.begin(), rows.end()};
}

void write_spreads(std::ostream& out, const std::map<MatchupId, double>& spreads) {
    out << kSpreadsHeader << '\n';
    for (const auto& [m, spread] : spreads) {
        out << m.low().value() << ',' << m.high().value() << ',' << format_double(spread) << '\n';
    }
}

std::vector<TeamId> load_field(const std::filesystem::path& path) {
    auto in = open(path);
    expect_header(in, path.string(), kFieldHeader);
    std::vector<TeamId> field;
    std::string line;
    std::size_t line_no = 1;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            field.push_back(parse_team(line));
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    build_matchup_universe(field);  // rejects duplicates
    return field;
}

void write_field(std::ostream& out, const std::vector<TeamId>& field) {
    out << kFieldHeader << '\n';
    for (TeamId team : field) out << team.value() << '\n';
}

bracket::BracketTemplate load_bracket(const std::filesystem::path& path) {
    auto in = open(path);
    expect_header(in, path.string(), kBracketHeader);
    std::vector<std::optional<TeamId>> slots;
    std::string line;
    std::size_t line_no = 1;
    while (next_line(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto fields = split(line);
            if (fields.size() != 2) throw ValidationError("expected 2 columns");
            if (parse_number<std::size_t>(fields[0], "slot") != slots.size()) {
                throw ValidationError("slots must be listed in order from 0");
            }
            slots.push_back(fields[1].empty() ? std::nullopt : std::optional(parse_team(fields[1])));
        } catch (const ValidationError& e) {
            throw ValidationError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return bracket::BracketTemplate(std::move(slots));
}

void write_bracket(std::ostream& out, const bracket::BracketTemplate& bracket) {
    out << kBracketHeader << '\n';
    std::size_t slot = 0;
    for (const auto& team : bracket.slots()) {
        out << slot++ << ',' << (team ? std::to_string(team->value()) : "") << '\n';
    }
}

void apply_league_setting(LeagueConfig& c, const std::string& key, const std::string& value) {
    auto num = [&] { return parse_number<double>(value, key.c_str()); };
    auto integer = [&] { return parse_number<int>(value, key.c_str()); };
    if (key == "seed") c.seed = parse_number<std::uint64_t>(value, "seed");
    else if (key == "teams") c.teams = integer();
    else if (key == "seasons") c.seasons = integer();
    else if (key == "first_season") c.first_season = integer();
    else if (key == "games_per_season") c.games_per_season = integer();
    else if (key == "neutral_fraction") c.neutral_fraction = num();
    else if (key == "missing_spread_fraction") c.missing_spread_fraction = num();
    else if (key == "strength_sd") c.strength_sd = num();
    else if (key == "season_carryover") c.season_carryover = num();
    else if (key == "home_advantage") c.home_advantage = num();
    else if (key == "points_per_strength") c.points_per_strength = num();
    else if (key == "spread_noise_sd") c.spread_noise_sd = num();
    else if (key == "metric_noise_sd") c.metric_noise_sd = num();
    else if (key == "outcome") {
        if (value == "spread") c.outcome = OutcomeModel::kSpread;
        else if (value == "efficiency") c.outcome = OutcomeModel::kEfficiency;
        else throw ValidationError("outcome must be 'spread' or 'efficiency'");
    }
    else if (key == "spread_intercept") c.spread_intercept = num();
    else if (key == "spread_slope") c.spread_slope = num();
    else if (key == "eff_intercept") c.efficiency.intercept = num();
    else if (key == "eff_home_adj_oe") c.efficiency.home_adj_oe = num();
    else if (key == "eff_away_adj_oe") c.efficiency.away_adj_oe = num();
    else if (key == "eff_home_adj_de") c.efficiency.home_adj_de = num();
    else if (key == "eff_away_adj_de") c.efficiency.away_adj_de = num();
    else if (key == "eff_neutral") c.efficiency.neutral = num();
    else throw ValidationError("unknown league setting '" + key + "'");
}

LeagueConfig parse_league_config(std::istream& in) {
    LeagueConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (next_line(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line.erase(0, line.find_first_not_of(" \t"));
        line.erase(line.find_last_not_of(" \t") + 1);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("config line " + std::to_string(line_no) + ": expected key=value");
        }
        auto key = line.substr(0, eq);
        auto value = line.substr(eq + 1);
        key.erase(key.find_last_not_of(" \t") + 1);
        value.erase(0, value.find_first_not_of(" \t"));
        apply_league_setting(config, key, value);
    }
    return config;
}

namespace {

double efficiency_logit(const EfficiencyTruth& t, const features::TeamEfficiency& home,
                        const features::TeamEfficiency& away, bool neutral) {
    return t.intercept + t.home_adj_oe * home.adj_oe + t.away_adj_oe * away.adj_oe +
           t.home_adj_de * home.adj_de + t.away_adj_de * away.adj_de +
           t.neutral * (neutral ? 1.0 : 0.0);
}

const features::TeamEfficiency& find_row(const SyntheticLeague& league, Season season, TeamId team) {
    for (const auto& row : league.efficiency) {
        if (row.season == season && row.team == team) return row;
    }
    throw ValidationError("synthetic league has no team " + to_string(team) + " in season " +
                          std::to_string(season));
}

}  // namespace

SyntheticLeague generate_synthetic_league(const LeagueConfig& config) {
    if (config.teams < 4) throw ValidationError("synthetic league needs at least 4 teams");
    if (config.seasons < 1 || config.games_per_season < 0) {
        throw ValidationError("synthetic league needs a positive season count");
    }

    SyntheticLeague league;
    league.config = config;
    auto engine = stream_engine(config.seed, 0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto normal = [&] { return gauss(engine); };

    const double half_sd = config.strength_sd / std::sqrt(2.0);
    const double carry = config.season_carryover;
    const double innovation = std::sqrt(std::max(0.0, 1.0 - carry * carry));
    std::vector<double> offense(static_cast<std::size_t>(config.teams));
    std::vector<double> defense(offense.size());
    for (std::size_t t = 0; t < offense.size(); ++t) {
        offense[t] = half_sd * normal();
        defense[t] = half_sd * normal();
    }

    for (int s = 0; s < config.seasons; ++s) {
        const Season season = config.first_season + s;
        if (s > 0) {
            for (std::size_t t = 0; t < offense.size(); ++t) {
                offense[t] = carry * offense[t] + innovation * half_sd * normal();
                defense[t] = carry * defense[t] + innovation * half_sd * normal();
            }
        }

        const std::size_t season_start = league.efficiency.size();
        for (std::size_t t = 0; t < offense.size(); ++t) {
            features::TeamEfficiency row;
            row.team = TeamId(static_cast<std::int64_t>(t + 1));
            row.season = season;
            row.adj_oe = 104.0 + offense[t] + config.metric_noise_sd * normal();
            row.adj_de = 104.0 - defense[t] + config.metric_noise_sd * normal();
            row.oe = row.adj_oe + 3.0 * normal();
            row.de = row.adj_de + 3.0 * normal();
            row.adj_tempo = std::max(1.2, 67.0 / 40.0 + (3.0 / 40.0) * normal());
            row.tempo = std::max(1.1, row.adj_tempo + 0.02 * normal());
            const double po = std::pow(row.adj_oe, 11.5);
            const double pd = std::pow(row.adj_de, 11.5);
            row.rating = po / (po + pd);
            league.efficiency.push_back(row);
            league.strength[{season, row.team}] = offense[t] + defense[t];
        }

        const Date opening = std::chrono::year{season - 1} / std::chrono::November / std::chrono::day{10};
        std::uniform_int_distribution<int> pick_team(0, config.teams - 1);
        std::uniform_int_distribution<int> pick_day(0, 145);
        for (int g = 0; g < config.games_per_season; ++g) {
            const int h = pick_team(engine);
            int a = pick_team(engine);
            while (a == h) a = pick_team(engine);
            GameRecord game;
            game.season = season;
            game.date = Date{std::chrono::sys_days{opening} + std::chrono::days{pick_day(engine)}};
            game.home = TeamId(h + 1);
            game.away = TeamId(a + 1);
            game.neutral = uniform01(engine) < config.neutral_fraction;

            const double gap = league.strength.at({season, game.home}) - league.strength.at({season, game.away});
            const double margin = config.points_per_strength * gap +
                                  (game.neutral ? 0.0 : config.home_advantage);
            const double spread = -margin + config.spread_noise_sd * normal();
            const bool posted = uniform01(engine) >= config.missing_spread_fraction;
            if (posted) game.spread = spread;

            double p = 0.0;
            if (config.outcome == OutcomeModel::kSpread) {
                p = glm::inverse_logit(config.spread_intercept + config.spread_slope * spread);
            } else {
                const auto& home = league.efficiency[season_start + static_cast<std::size_t>(h)];
                const auto& away = league.efficiency[season_start + static_cast<std::size_t>(a)];
                p = glm::inverse_logit(efficiency_logit(config.efficiency, home, away, game.neutral));
            }
            const bool home_won = uniform01(engine) < p;

            const int loser = std::max(30, static_cast<int>(std::lround(66.0 + 8.0 * normal())));
            const int winner = loser + 1 + static_cast<int>(std::floor(std::abs(10.0 * normal())));
            game.home_score = home_won ? winner : loser;
            game.away_score = home_won ? loser : winner;

            league.games.push_back(game);
            league.home_win_prob.push_back(p);
        }
    }
    return league;
}

double true_neutral_spread(const SyntheticLeague& league, Season season, TeamId team,
                           TeamId opponent) {
    const double gap = league.strength.at({season, team}) - league.strength.at({season, opponent});
    return -league.config.points_per_strength * gap;
}

double true_neutral_prob(const SyntheticLeague& league, Season season, TeamId team,
                         TeamId opponent) {
    const auto& config = league.config;
    auto layout = [&](TeamId home, TeamId away) {
        if (config.outcome == OutcomeModel::kSpread) {
            const double spread = true_neutral_spread(league, season, home, away);
            return glm::inverse_logit(config.spread_intercept + config.spread_slope * spread);
        }
        return glm::inverse_logit(efficiency_logit(config.efficiency, find_row(league, season, home),
                                                   find_row(league, season, away), true));
    };
    return 0.5 * (layout(team, opponent) + (1.0 - layout(opponent, team)));
}

ProbabilityMap true_probabilities(const SyntheticLeague& league, Season season,
                                  const UniversePtr& universe) {
    std::vector<double> probs;
    probs.reserve(universe->size());
    for (const auto& m : universe->matchups()) {
        probs.push_back(true_neutral_prob(league, season, m.low(), m.high()));
    }
    return ProbabilityMap(universe, std::move(probs));
}

std::vector<TeamId> seeded_field(const SyntheticLeague& league, Season season, std::size_t size) {
    if (size == 0 || size % 16 != 0) throw ValidationError("field size must be a multiple of 16");
    std::vector<std::pair<double, TeamId>> ranked;
    for (const auto& [key, strength] : league.strength) {
        if (key.first == season) ranked.emplace_back(strength, key.second);
    }
    if (ranked.size() < size) {
        throw ValidationError("season " + std::to_string(season) + " has only " +
                              std::to_string(ranked.size()) + " teams");
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    const std::size_t regions = size / 16;
    std::vector<TeamId> seeded(size);
    for (std::size_t line = 0; line < 16; ++line) {
        for (std::size_t k = 0; k < regions; ++k) {
            const std::size_t region = line % 2 == 0 ? k : regions - 1 - k;
            seeded[region * 16 + line] = ranked[line * regions + k].second;
        }
    }
    return seeded;
}

}  // namespace madness::ingest
