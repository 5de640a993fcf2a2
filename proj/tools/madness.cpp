// Command-line front end: generate, fit, predict, blend, score, simulate.

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ostream.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "madness/bracket.hpp"
#include "madness/ensemble.hpp"
#include "madness/error.hpp"
#include "madness/features.hpp"
#include "madness/glm.hpp"
#include "madness/ingest.hpp"
#include "madness/scoring.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace madness;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumerical = 4;

std::string number(double v) { return fmt::format("{}", v); }

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

// ---- model files ----

json glm_json(const glm::FittedGlm& fit) {
    return {{"labels", fit.labels},
            {"coefficients", std::vector<double>(fit.coefficients.data(),
                                                 fit.coefficients.data() + fit.coefficients.size())},
            {"intercept", fit.has_intercept},
            {"status", glm::to_string(fit.status)},
            {"iterations", fit.iterations},
            {"gradient_norm", fit.final_gradient_norm},
            {"log_likelihood", fit.log_likelihood},
            {"singular_design", fit.singular_design}};
}

glm::FittedGlm glm_from_json(const json& j) {
    glm::FittedGlm fit;
    const auto coefficients = j.at("coefficients").get<std::vector<double>>();
    fit.coefficients = Eigen::Map<const Eigen::VectorXd>(coefficients.data(),
                                                         static_cast<Eigen::Index>(coefficients.size()));
    fit.labels = j.at("labels").get<std::vector<std::string>>();
    fit.has_intercept = j.at("intercept").get<bool>();
    fit.status = j.at("status").get<std::string>() == "converged" ? glm::FitStatus::kConverged
                                                                    : glm::FitStatus::kMaxIterations;
    fit.iterations = j.value("iterations", 0);
    fit.final_gradient_norm = j.value("gradient_norm", 0.0);
    fit.log_likelihood = j.value("log_likelihood", 0.0);
    fit.singular_design = j.value("singular_design", false);
    if (fit.labels.size() != coefficients.size()) {
        throw ValidationError("model file has mismatched labels and coefficients");
    }
    return fit;
}

json load_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

features::FeatureModel load_model(const fs::path& path) {
    const auto j = load_json(path);
    try {
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "spread") return features::SpreadModel{glm_from_json(j)};
        if (kind == "efficiency") {
            auto spec = features::ModelSpec::parse(j.at("spec").get<std::string>(),
                                                   j.at("intercept").get<bool>());
            return features::EfficiencyModel{std::move(spec), glm_from_json(j)};
        }
        throw ValidationError(path.string() + ": unknown model kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

json imputer_json(const features::SpreadImputer& imputer) {
    return {{"kind", "imputer"},
            {"terms", {"(intercept)", "diff:adj_oe", "diff:adj_de", "neutral"}},
            {"coefficients", imputer.coefficients},
            {"standard_errors", imputer.standard_errors},
            {"residual_sd", imputer.residual_sd},
            {"games", imputer.games}};
}

features::SpreadImputer load_imputer(const fs::path& path) {
    const auto j = load_json(path);
    try {
        if (j.at("kind").get<std::string>() != "imputer") {
            throw ValidationError(path.string() + " is not a spread imputer file");
        }
        features::SpreadImputer imputer;
        imputer.coefficients = j.at("coefficients").get<std::array<double, 4>>();
        imputer.standard_errors = j.value("standard_errors", std::array<double, 4>{});
        imputer.residual_sd = j.value("residual_sd", 0.0);
        imputer.games = j.value("games", std::size_t{0});
        return imputer;
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const json& j) { ingest::write_file(path, j.dump(2) + "\n"); }

// ---- shared loaders ----

template <typename T>
std::vector<T> report(ingest::LoadResult<T> result) {
    for (const auto& d : result.diagnostics) fmt::print(std::cerr, "warning: {}\n", d);
    return std::move(result.records);
}

// Teams named in a submission file, for when no field file is given.
std::vector<TeamId> submission_teams(const fs::path& path) {
    std::istringstream in(read_text(path));
    std::string line;
    std::getline(in, line);
    std::set<TeamId> teams;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string low, high;
        std::getline(row, low, ',');
        std::getline(row, high, ',');
        try {
            teams.insert(TeamId(std::stoll(low)));
            teams.insert(TeamId(std::stoll(high)));
        } catch (const std::logic_error&) {
            throw ValidationError(path.string() + ": line " + std::to_string(line_no) + ": bad team id");
        }
    }
    return {teams.begin(), teams.end()};
}

UniversePtr universe_for(const std::string& field_path, const fs::path& fallback) {
    if (!field_path.empty()) return make_universe(ingest::load_field(field_path));
    return make_universe(submission_teams(fallback));
}

struct EntrySource {
    std::string entrant;
    std::string team;
    fs::path path;
};

// `--entry path` (entrant = file stem) and `--manifest` rows of entrant,team,path.
std::vector<EntrySource> entry_sources(const std::vector<std::string>& paths, const std::string& manifest) {
    std::vector<EntrySource> sources;
    for (const auto& p : paths) {
        const fs::path path(p);
        sources.push_back({path.stem().string(), path.stem().string(), path});
    }
    if (!manifest.empty()) {
        std::istringstream in(read_text(manifest));
        std::string line;
        std::getline(in, line);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != "entrant,team,path") {
            throw ValidationError(manifest + ": header must be 'entrant,team,path'");
        }
        const auto base = fs::path(manifest).parent_path();
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string entrant, team, path;
            std::getline(row, entrant, ',');
            std::getline(row, team, ',');
            std::getline(row, path);
            if (entrant.empty() || path.empty()) {
                throw ValidationError(manifest + ": line " + std::to_string(line_no) + ": expected entrant,team,path");
            }
            const fs::path resolved = fs::path(path).is_absolute() ? fs::path(path) : base / path;
            sources.push_back({entrant, team.empty() ? entrant : team, resolved});
        }
    }
    if (sources.empty()) throw ValidationError("no entries given (use --entry or --manifest)");
    return sources;
}

std::vector<Submission> load_entries(const std::vector<EntrySource>& sources, const UniversePtr& universe) {
    std::vector<Submission> subs;
    for (const auto& s : sources) subs.push_back(ingest::load_submission(s.path, universe, s.entrant, s.team));
    return subs;
}

glm::FitOptions fit_options(int max_iterations) {
    glm::FitOptions options;
    options.max_iterations = max_iterations;
    return options;
}

void summarize_fit(const std::string& what, const glm::FittedGlm& fit, const std::string& out) {
    std::string coefficients;
    for (Eigen::Index j = 0; j < fit.coefficients.size(); ++j) {
        if (j > 0) coefficients += " ";
        coefficients += fit.labels[static_cast<std::size_t>(j)] + "=" + fmt::format("{:.6g}", fit.coefficients[j]);
    }
    fmt::print("{} fit {} in {} iterations: {} -> {}\n", what, glm::to_string(fit.status), fit.iterations,
               coefficients, out);
}

// ---- subcommands ----

struct GenerateArgs {
    std::string config;
    std::vector<std::string> settings;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t field_size = 0;
    int field_season = 0;
};

int run_generate(const GenerateArgs& args) {
    ingest::LeagueConfig config;
    if (!args.config.empty()) {
        std::istringstream in(read_text(args.config));
        config = ingest::parse_league_config(in);
    }
    for (const auto& setting : args.settings) {
        const auto eq = setting.find('=');
        if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + setting + "'");
        ingest::apply_league_setting(config, setting.substr(0, eq), setting.substr(eq + 1));
    }
    if (args.seed_set) config.seed = args.seed;
    const auto league = ingest::generate_synthetic_league(config);

    const fs::path dir(args.out_dir);
    fs::create_directories(dir);
    std::ostringstream games, efficiency;
    ingest::write_games(games, league.games);
    ingest::write_efficiency(efficiency, league.efficiency);
    ingest::write_file(dir / "games.csv", games.str());
    ingest::write_file(dir / "efficiency.csv", efficiency.str());

    std::string extra;
    if (args.field_size > 0) {
        const Season season = args.field_season != 0 ? args.field_season : config.first_season + config.seasons - 1;
        const auto field = ingest::seeded_field(league, season, args.field_size);
        const auto universe = make_universe(field);
        std::ostringstream field_out, bracket_out, truth_out;
        ingest::write_field(field_out, field);
        ingest::write_bracket(bracket_out, bracket::BracketTemplate::standard(field));
        ingest::write_submission(truth_out, ingest::true_probabilities(league, season, universe));
        ingest::write_file(dir / "field.csv", field_out.str());
        ingest::write_file(dir / "bracket.csv", bracket_out.str());
        ingest::write_file(dir / "truth.csv", truth_out.str());
        extra = fmt::format(", field of {} for season {}", field.size(), season);
    }
    fmt::print("generated {} games and {} efficiency rows (seed {}){} in {}\n", league.games.size(),
               league.efficiency.size(), config.seed, extra, dir.string());
    return 0;
}

int run_fit_spread(const std::string& games_path, const std::string& out, int max_iterations) {
    const auto games = report(ingest::load_games(games_path));
    const auto fit = features::fit_m1(games, fit_options(max_iterations));
    glm::require_converged(fit);
    auto j = glm_json(fit);
    j["kind"] = "spread";
    j["games"] = games.size();
    write_json(out, j);
    summarize_fit("spread model", fit, out);
    return 0;
}

features::ModelSpec spec_from(const std::string& spec, const std::string& fit_letter, bool no_intercept) {
    if (!spec.empty() && !fit_letter.empty()) throw ValidationError("give --spec or --fit, not both");
    features::ModelSpec parsed = fit_letter.empty()
                                     ? (spec.empty() ? features::default_efficiency_spec()
                                                     : features::ModelSpec::parse(spec))
                                     : features::model_building_spec(fit_letter.size() == 1 ? fit_letter[0] : '?');
    if (no_intercept) parsed.intercept = false;
    return parsed;
}

int run_fit_efficiency(const std::string& games_path, const std::string& eff_path, const std::string& spec,
                       const std::string& fit_letter, bool no_intercept, const std::string& out,
                       int max_iterations) {
    const auto games = report(ingest::load_games(games_path));
    const features::EfficiencyTable table(report(ingest::load_efficiency(eff_path)));
    const auto model_spec = spec_from(spec, fit_letter, no_intercept);
    const auto fit = features::fit_m2(games, table, model_spec, fit_options(max_iterations));
    glm::require_converged(fit);
    auto j = glm_json(fit);
    j["kind"] = "efficiency";
    j["spec"] = model_spec.to_string();
    j["games"] = games.size();
    write_json(out, j);
    summarize_fit("efficiency model", fit, out);
    return 0;
}

int run_fit_imputer(const std::string& games_path, const std::string& eff_path, const std::string& out,
                    std::size_t min_games) {
    const auto games = report(ingest::load_games(games_path));
    const features::EfficiencyTable table(report(ingest::load_efficiency(eff_path)));
    const auto imputer = features::fit_spread_imputer(games, table, min_games);
    write_json(out, imputer_json(imputer));
    fmt::print("spread imputer from {} games: intercept={:.4f} adj_oe={:.4f} adj_de={:.4f} neutral={:.4f} "
               "residual_sd={:.4f} -> {}\n",
               imputer.games, imputer.coefficients[0], imputer.coefficients[1], imputer.coefficients[2],
               imputer.coefficients[3], imputer.residual_sd, out);
    return 0;
}

int run_select(const std::string& games_path, const std::string& eff_path, const std::vector<std::string>& specs,
               const std::string& fits, const std::string& out, int max_iterations) {
    const auto games = report(ingest::load_games(games_path));
    const features::EfficiencyTable table(report(ingest::load_efficiency(eff_path)));
    std::vector<features::ModelSpec> parsed;
    for (char letter : fits) {
        if (letter != ',' && letter != ' ') parsed.push_back(features::model_building_spec(letter));
    }
    for (const auto& s : specs) parsed.push_back(features::ModelSpec::parse(s));
    if (parsed.empty()) {
        for (char letter = 'a'; letter <= 'k'; ++letter) parsed.push_back(features::model_building_spec(letter));
    }
    const auto result = features::run_selection_harness(games, table, parsed, fit_options(max_iterations));
    for (const auto& w : result.warnings) fmt::print(std::cerr, "warning: {}\n", w);

    std::string csv = "spec,mean_log_loss,test_games,seasons,nonconverged\n";
    std::size_t best = 0;
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const auto& row = result.rows[i];
        std::string failures;
        for (const auto& f : row.failures) failures += (failures.empty() ? "" : ";") + f;
        csv += fmt::format("\"{}\",{},{},{},{}\n", row.spec, number(row.mean_log_loss), row.test_games,
                           row.seasons, failures);
        if (row.mean_log_loss < result.rows[best].mean_log_loss) best = i;
        for (const auto& f : row.failures) fmt::print(std::cerr, "warning: {} did not converge in {}\n", row.spec, f);
    }
    if (out.empty()) {
        std::cout << csv;
    } else {
        ingest::write_file(out, csv);
    }
    if (!result.rows.empty()) {
        fmt::print(out.empty() ? std::cerr : std::cout, "best of {} specs: {} ({:.5f})\n", result.rows.size(),
                   result.rows[best].spec, result.rows[best].mean_log_loss);
    }
    return 0;
}

int run_predict(const std::string& model_path, const std::string& field_path, int season,
                const std::string& eff_path, const std::string& imputer_path, const std::string& spreads_path,
                const std::string& entrant, const std::string& out) {
    const auto model = load_model(model_path);
    features::PredictionInputs inputs;
    inputs.universe = make_universe(ingest::load_field(field_path));
    inputs.season = season;
    std::optional<features::EfficiencyTable> table;
    std::optional<features::SpreadImputer> imputer;
    if (!eff_path.empty()) {
        table.emplace(report(ingest::load_efficiency(eff_path)));
        inputs.efficiency = &*table;
    }
    if (!imputer_path.empty()) {
        imputer = load_imputer(imputer_path);
        inputs.imputer = &*imputer;
    }
    if (!spreads_path.empty()) inputs.observed_spreads = ingest::load_spreads(spreads_path);
    const auto sub = features::predict_universe(model, inputs, entrant);
    std::ostringstream text;
    ingest::write_submission(text, sub.probs);
    ingest::write_file(out, text.str());
    fmt::print("predicted {} matchups for season {} ({} posted spreads) -> {}\n", sub.probs.size(), season,
               inputs.observed_spreads.size(), out);
    return 0;
}

int run_ensemble(const std::string& a_path, const std::string& b_path, double w, const std::string& field,
                 const std::string& out) {
    const auto universe = universe_for(field, a_path);
    const auto a = ingest::load_submission(a_path, universe);
    const auto b = ingest::load_submission(b_path, universe);
    const auto blended = ensemble::blend(a.probs, b.probs, w);
    std::ostringstream text;
    ingest::write_submission(text, blended);
    ingest::write_file(out, text.str());
    fmt::print("blended {} matchups with weight {} on {} and {} on {} -> {}\n", blended.size(), number(w),
               a_path, number(1.0 - w), b_path, out);
    return 0;
}

int run_search_weight(const std::vector<std::string>& seasons, const std::string& field, bool season_mean,
                      const std::string& out) {
    std::vector<ensemble::SeasonHistory> history;
    for (const auto& spec : seasons) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        for (std::string part; std::getline(ss, part, ',');) parts.push_back(part);
        if (parts.size() != 3) throw ValidationError("--season expects a.csv,b.csv,outcomes.csv, got '" + spec + "'");
        const auto universe = universe_for(field, parts[0]);
        history.push_back({ingest::load_submission(parts[0], universe).probs,
                           ingest::load_submission(parts[1], universe).probs, ingest::load_outcomes(parts[2])});
    }
    const auto result = ensemble::search_weight(history, season_mean ? ensemble::Pooling::kSeasonMean
                                                                     : ensemble::Pooling::kPooledGames);
    std::string csv = "w,score\n";
    for (const auto& [w, score] : result.curve) csv += fmt::format("{:.2f},{}\n", w, number(score));
    if (!out.empty()) ingest::write_file(out, csv);
    fmt::print("best weight on a: {:.2f} (b: {:.2f}), mean log-loss {:.5f} over {} seasons\n", result.weight,
               1.0 - result.weight, result.score, history.size());
    return 0;
}

int run_score(const std::vector<std::string>& subs, const std::string& manifest, const std::string& outcomes_path,
              const std::string& field, bool best_of_team, const std::string& out) {
    const auto sources = entry_sources(subs, manifest);
    const auto universe = universe_for(field, sources.front().path);
    const auto entries = load_entries(sources, universe);
    const auto outcomes = ingest::load_outcomes(outcomes_path);
    if (entries.size() == 1 && out.empty()) {
        fmt::print("{:.5f}\n", scoring::log_loss(entries.front(), outcomes));
        return 0;
    }
    const auto board = scoring::build_scoreboard(entries, outcomes, best_of_team);
    std::string csv = "rank,team,entrant,score\n";
    for (const auto& row : board.rows) {
        csv += fmt::format("{},{},{},{}\n", row.rank, row.team, row.entrant, number(row.score));
    }
    if (out.empty()) {
        for (const auto& row : board.rows) fmt::print("{},{},{},{:.5f}\n", row.rank, row.team, row.entrant, row.score);
    } else {
        ingest::write_file(out, csv);
        fmt::print("scored {} entries on {} games; best {} ({:.5f}) -> {}\n", entries.size(), outcomes.size(),
                   board.rows.front().entrant, board.rows.front().score, out);
    }
    return 0;
}

struct SimulateArgs {
    std::vector<std::string> entries;
    std::string manifest;
    std::string field;
    std::string bracket;
    std::vector<std::string> truths;
    std::string rank_outcomes;
    std::size_t sims = 10000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool best_of_team = false;
    std::string out = "simulation.csv";
    std::string density_out;
    std::vector<std::string> density_entries;
};

bracket::TruthScenario parse_truth(const std::string& text, const std::vector<Submission>& entries,
                                   const UniversePtr& universe, const std::optional<OutcomeSet>& ranking) {
    if (text == "coin") return {"coin", bracket::CoinFlip{}};
    if (text == "median-all") return {"median-all", bracket::MedianAll{entries}};
    if (text.rfind("median-top:", 0) == 0) {
        if (!ranking) throw ValidationError("--truth median-top needs --rank-outcomes");
        std::size_t k = 0;
        try {
            k = static_cast<std::size_t>(std::stoul(text.substr(11)));
        } catch (const std::logic_error&) {
            throw ValidationError("bad k in '" + text + "'");
        }
        return {text, bracket::MedianTop{entries, k, *ranking}};
    }
    if (text.rfind("entry:", 0) == 0) {
        const fs::path path(text.substr(6));
        return {"entry:" + path.stem().string(),
                bracket::EntryTruth{ingest::load_submission(path, universe, path.stem().string())}};
    }
    throw ValidationError("unknown truth '" + text + "' (entry:<file>, median-all, median-top:<k>, coin)");
}

int run_simulate(const SimulateArgs& args) {
    const auto sources = entry_sources(args.entries, args.manifest);
    const auto universe = universe_for(args.field, sources.front().path);
    const auto entries = load_entries(sources, universe);

    std::optional<bracket::BracketTemplate> layout;
    if (!args.bracket.empty()) {
        layout = ingest::load_bracket(args.bracket);
    } else if (!args.field.empty()) {
        layout = bracket::BracketTemplate::standard(ingest::load_field(args.field));
    } else {
        throw ValidationError("simulate needs --bracket or a seeded --field");
    }
    std::optional<OutcomeSet> ranking;
    if (!args.rank_outcomes.empty()) ranking = ingest::load_outcomes(args.rank_outcomes);

    std::vector<bracket::TruthScenario> scenarios;
    for (const auto& t : args.truths) scenarios.push_back(parse_truth(t, entries, universe, ranking));
    if (scenarios.empty()) throw ValidationError("give at least one --truth");

    bracket::StudyOptions options;
    options.sims = args.sims;
    options.seed = args.seed;
    options.threads = args.threads;
    options.best_of_team = args.best_of_team;
    const auto reports = bracket::run_study(entries, scenarios, *layout, options);

    std::string csv =
        "scenario,entrant,team,median_rank,rank_p025,rank_p975,frac_first,frac_top10,mean_score,sims,unique_winners\n";
    for (const auto& r : reports) {
        for (const auto& e : r.entries) {
            csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", r.scenario, e.entrant, e.team,
                               number(e.median_rank), number(e.rank_p025), number(e.rank_p975),
                               number(e.frac_first), number(e.frac_top10), number(e.mean_score), r.sims,
                               r.unique_winners);
        }
    }
    ingest::write_file(args.out, csv);

    if (!args.density_out.empty()) {
        std::string density = "scenario,series,value\n";
        for (const auto& r : reports) {
            for (double s : r.winning_scores) density += fmt::format("{},overall,{}\n", r.scenario, number(s));
            for (const auto& e : r.entries) {
                if (std::find(args.density_entries.begin(), args.density_entries.end(), e.entrant) ==
                    args.density_entries.end()) {
                    continue;
                }
                for (double s : e.winning_scores) density += fmt::format("{},{},{}\n", r.scenario, e.entrant, number(s));
            }
        }
        ingest::write_file(args.density_out, density);
    }

    for (const auto& r : reports) {
        fmt::print("{}: {} sims, {} entries, {} unique winners\n", r.scenario, r.sims, r.entries.size(),
                   r.unique_winners);
    }
    fmt::print("report -> {}\n", args.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Log-loss tournament prediction: fit models, build submissions, score and simulate"};
    app.require_subcommand(1);
    int status = 0;

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Write a synthetic league (games.csv, efficiency.csv, optional field)");
    generate->add_option("--config", gen.config, "key=value league settings file")->check(CLI::ExistingFile);
    generate->add_option("--set", gen.settings, "Override one league setting, key=value (repeatable)");
    generate->add_option("--out-dir", gen.out_dir, "Output directory")->capture_default_str();
    auto* seed_opt = generate->add_option("--seed", gen.seed, "Random seed (overrides the config file)")->capture_default_str();
    generate->add_option("--field-size", gen.field_size,
                         "Also write field.csv, bracket.csv and truth.csv for the strongest N teams (multiple of 16)")
        ->capture_default_str();
    generate->add_option("--field-season", gen.field_season, "Season for the field (default: last)");
    generate->callback([&] {
        gen.seed_set = seed_opt->count() > 0;
        status = run_generate(gen);
    });

    std::string games, efficiency, out, spec, fit_letter;
    int max_iterations = 100;
    bool no_intercept = false;

    auto* fit_spread = app.add_subcommand("fit-spread", "Fit the spread model: logit P(home win) on the posted spread");
    fit_spread->add_option("--games", games, "Games CSV")->required()->check(CLI::ExistingFile);
    fit_spread->add_option("--out", out, "Model JSON to write")->required();
    fit_spread->add_option("--max-iter", max_iterations, "IRLS iteration cap")->capture_default_str();
    fit_spread->callback([&] { status = run_fit_spread(games, out, max_iterations); });

    auto* fit_eff = app.add_subcommand("fit-efficiency", "Fit the efficiency model on team metrics");
    fit_eff->add_option("--games", games, "Games CSV")->required()->check(CLI::ExistingFile);
    fit_eff->add_option("--efficiency", efficiency, "Efficiency CSV")->required()->check(CLI::ExistingFile);
    fit_eff->add_option("--spec", spec, "Covariate spec, e.g. \"x7,x8,x9,x10,x15\" (default: that one)");
    fit_eff->add_option("--fit", fit_letter, "Model-building fit a..k instead of --spec");
    fit_eff->add_flag("--no-intercept", no_intercept, "Fit without an intercept");
    fit_eff->add_option("--out", out, "Model JSON to write")->required();
    fit_eff->add_option("--max-iter", max_iterations, "IRLS iteration cap")->capture_default_str();
    fit_eff->callback([&] {
        status = run_fit_efficiency(games, efficiency, spec, fit_letter, no_intercept, out, max_iterations);
    });

    std::size_t min_games = features::kMinImputerGames;
    auto* fit_imp = app.add_subcommand("fit-imputer", "Least-squares spread imputer on adjusted-efficiency gaps");
    fit_imp->add_option("--games", games, "Games CSV (rows without a spread are ignored)")->required()->check(CLI::ExistingFile);
    fit_imp->add_option("--efficiency", efficiency, "Efficiency CSV")->required()->check(CLI::ExistingFile);
    fit_imp->add_option("--min-games", min_games, "Minimum games with a posted spread")->capture_default_str();
    fit_imp->add_option("--out", out, "Imputer JSON to write")->required();
    fit_imp->callback([&] { status = run_fit_imputer(games, efficiency, out, min_games); });

    std::vector<std::string> specs;
    std::string fits;
    auto* select = app.add_subcommand("select-model", "Train before March 1, test after, for each spec");
    select->add_option("--games", games, "Games CSV")->required()->check(CLI::ExistingFile);
    select->add_option("--efficiency", efficiency, "Efficiency CSV")->required()->check(CLI::ExistingFile);
    select->add_option("--spec", specs, "Covariate spec (repeatable)");
    select->add_option("--fits", fits, "Model-building fits by letter, e.g. \"a,e,f\" (default with no --spec: a..k)");
    select->add_option("--out", out, "Score table CSV (default: stdout)");
    select->add_option("--max-iter", max_iterations, "IRLS iteration cap")->capture_default_str();
    select->callback([&] { status = run_select(games, efficiency, specs, fits, out, max_iterations); });

    std::string model, field, imputer, spreads, entrant = "entry";
    int season = 0;
    auto* predict = app.add_subcommand("predict", "Neutral-site probabilities for every matchup of a field");
    predict->add_option("--model", model, "Model JSON from fit-spread or fit-efficiency")->required()->check(CLI::ExistingFile);
    predict->add_option("--field", field, "Field CSV (team_id)")->required()->check(CLI::ExistingFile);
    predict->add_option("--season", season, "Season of the efficiency rows to use")->required();
    predict->add_option("--efficiency", efficiency, "Efficiency CSV")->check(CLI::ExistingFile);
    predict->add_option("--imputer", imputer, "Imputer JSON for matchups without a posted spread")->check(CLI::ExistingFile);
    predict->add_option("--spreads", spreads, "Posted spreads CSV (matchup_low,matchup_high,spread)")->check(CLI::ExistingFile);
    predict->add_option("--entrant", entrant, "Entrant name recorded with the submission")->capture_default_str();
    predict->add_option("--out", out, "Submission CSV to write")->required();
    predict->callback([&] {
        status = run_predict(model, field, season, efficiency, imputer, spreads, entrant, out);
    });

    std::string a_path, b_path;
    double weight = 0.5;
    auto* blend = app.add_subcommand("ensemble", "Blend two submissions: w*a + (1-w)*b");
    blend->add_option("--a", a_path, "First submission")->required()->check(CLI::ExistingFile);
    blend->add_option("--b", b_path, "Second submission")->required()->check(CLI::ExistingFile);
    blend->add_option("--w", weight, "Weight on --a, in [0,1]")->required()->check(CLI::Range(0.0, 1.0));
    blend->add_option("--field", field, "Field CSV (default: teams named in --a)")->check(CLI::ExistingFile);
    blend->add_option("--out", out, "Submission CSV to write")->required();
    blend->callback([&] { status = run_ensemble(a_path, b_path, weight, field, out); });

    std::vector<std::string> seasons;
    bool season_mean = false;
    auto* search = app.add_subcommand("search-weight", "Grid-search the blend weight over past seasons");
    search->add_option("--season", seasons, "a.csv,b.csv,outcomes.csv for one season (repeatable)")->required();
    search->add_option("--field", field, "Field CSV shared by every season")->check(CLI::ExistingFile);
    search->add_flag("--season-mean", season_mean, "Average per-season means instead of pooling games");
    search->add_option("--out", out, "Weight curve CSV (w,score)");
    search->callback([&] { status = run_search_weight(seasons, field, season_mean, out); });

    std::vector<std::string> subs;
    std::string manifest, outcomes;
    bool best_of_team = false;
    auto* score = app.add_subcommand("score", "Log-loss of submissions against outcomes");
    score->add_option("--sub", subs, "Submission CSV (repeatable; entrant = file stem)")->check(CLI::ExistingFile);
    score->add_option("--manifest", manifest, "CSV of entrant,team,path")->check(CLI::ExistingFile);
    score->add_option("--outcomes", outcomes, "Outcomes CSV")->required()->check(CLI::ExistingFile);
    score->add_option("--field", field, "Field CSV (default: teams named in the first submission)")->check(CLI::ExistingFile);
    score->add_flag("--best-of-team", best_of_team, "Keep only each team's best entry");
    score->add_option("--out", out, "Scoreboard CSV (default: print)");
    score->callback([&] { status = run_score(subs, manifest, outcomes, field, best_of_team, out); });

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Rank entries over simulated tournaments");
    simulate->add_option("--entry", sim.entries, "Entry submission CSV (repeatable; entrant = file stem)")->check(CLI::ExistingFile);
    simulate->add_option("--manifest", sim.manifest, "CSV of entrant,team,path")->check(CLI::ExistingFile);
    simulate->add_option("--field", sim.field, "Field CSV; with no --bracket, read as regions of seeds 1..16")->check(CLI::ExistingFile);
    simulate->add_option("--bracket", sim.bracket, "Bracket CSV (slot,team_id; blank team = bye)")->check(CLI::ExistingFile);
    simulate->add_option("--truth", sim.truths, "entry:<file> | median-all | median-top:<k> | coin (repeatable)")->required();
    simulate->add_option("--rank-outcomes", sim.rank_outcomes, "Outcomes used to pick the top k for median-top")->check(CLI::ExistingFile);
    simulate->add_option("--sims", sim.sims, "Simulations per truth scenario")->capture_default_str()->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
    simulate->add_option("--threads", sim.threads, "Worker threads, 0 = all cores (results do not depend on it)")->capture_default_str();
    simulate->add_flag("--best-of-team", sim.best_of_team, "Rank teams by their best entry");
    simulate->add_option("--out", sim.out, "Report CSV")->capture_default_str();
    simulate->add_option("--density-out", sim.density_out, "Winning-score samples CSV");
    simulate->add_option("--density-entry", sim.density_entries, "Also write this entrant's winning scores (repeatable)");
    simulate->callback([&] { status = run_simulate(sim); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    } catch (const NumericalError& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return kExitNumerical;
    } catch (const ValidationError& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return kExitValidation;
    }
    return status;
}
