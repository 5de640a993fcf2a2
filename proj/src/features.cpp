#include "madness/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

#include "madness/error.hpp"
#include "madness/scoring.hpp"

namespace madness::features {

namespace {

std::string season_team(Season season, TeamId team) {
    return "team " + to_string(team) + " in season " + std::to_string(season);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Splits on commas that are not nested inside parentheses.
std::vector<std::string_view> split_top_level(std::string_view s) {
    std::vector<std::string_view> parts;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '(') {
            ++depth;
        } else if (s[i] == ')') {
            if (--depth < 0) throw ValidationError("unbalanced ')' in model spec");
        } else if (s[i] == ',' && depth == 0) {
            parts.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    if (depth != 0) throw ValidationError("unbalanced '(' in model spec");
    parts.push_back(trim(s.substr(start)));
    return parts;
}

Metric parse_metric(std::string_view name) {
    static const std::pair<std::string_view, Metric> table[] = {
        {"rating", Metric::kRating}, {"oe", Metric::kOe},         {"de", Metric::kDe},
        {"adj_oe", Metric::kAdjOe},  {"adj_de", Metric::kAdjDe},  {"tempo", Metric::kTempo},
        {"adj_tempo", Metric::kAdjTempo},
    };
    for (const auto& [key, metric] : table) {
        if (key == name) return metric;
    }
    throw ValidationError("unknown metric '" + std::string(name) + "'");
}

// Returns the argument text of `name(...)` or nullopt when `s` is not such a call.
std::optional<std::string_view> call_args(std::string_view s, std::string_view name) {
    if (s.size() < name.size() + 2 || s.substr(0, name.size()) != name ||
        s[name.size()] != '(' || s.back() != ')') {
        return std::nullopt;
    }
    return s.substr(name.size() + 1, s.size() - name.size() - 2);
}

Term parse_term(std::string_view raw) {
    const std::string text = lower(trim(raw));
    const std::string_view s = text;
    if (s.empty()) throw ValidationError("empty term in model spec");

    if (auto args = call_args(s, "sq")) return Term::square(parse_term(*args));
    if (auto args = call_args(s, "prod")) {
        std::vector<Term> factors;
        for (auto part : split_top_level(*args)) factors.push_back(parse_term(part));
        if (factors.size() < 2) throw ValidationError("prod() needs at least two terms");
        return Term::product(std::move(factors));
    }
    if (call_args(s, "int2") || call_args(s, "int3")) {
        throw ValidationError("interaction expansions are only allowed at top level");
    }
    if (s == "neutral" || s == "x15") return Term::neutral();
    if (s.size() >= 2 && s[0] == 'x' &&
        std::all_of(s.begin() + 1, s.end(), [](char c) { return std::isdigit(c); })) {
        const int code = std::stoi(std::string(s.substr(1)));
        if (code < 1 || code > 15) throw ValidationError("unknown covariate " + text);
        static constexpr Metric by_pair[] = {Metric::kRating, Metric::kOe,    Metric::kDe,
                                             Metric::kAdjOe,  Metric::kAdjDe, Metric::kTempo,
                                             Metric::kAdjTempo};
        const Metric metric = by_pair[(code - 1) / 2];
        return code % 2 == 1 ? Term::home(metric) : Term::away(metric);
    }
    const auto colon = s.find(':');
    if (colon != std::string_view::npos) {
        const auto side = s.substr(0, colon);
        const Metric metric = parse_metric(s.substr(colon + 1));
        if (side == "h") return Term::home(metric);
        if (side == "a") return Term::away(metric);
        if (side == "diff") return Term::diff(metric);
    }
    throw ValidationError("cannot parse model term '" + std::string(raw) + "'");
}

void append_interactions(std::vector<Term>& out, const std::vector<Term>& base, int order) {
    out.insert(out.end(), base.begin(), base.end());
    const std::size_t n = base.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) out.push_back(Term::product({base[i], base[j]}));
    }
    if (order < 3) return;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            for (std::size_t k = j + 1; k < n; ++k) {
                out.push_back(Term::product({base[i], base[j], base[k]}));
            }
        }
    }
}

double raw_spread_prob(const glm::FittedGlm& fit, double spread) {
    const double x[] = {spread};
    return glm::predict_prob(fit, x);
}

const EfficiencyTable& require_table(const PredictionInputs& inputs) {
    if (!inputs.efficiency) throw ValidationError("efficiency table required for prediction");
    return *inputs.efficiency;
}

// Spread with `team` laid out as home at a neutral site.
double spread_for(TeamId team, TeamId opponent, const PredictionInputs& inputs) {
    const auto matchup = MatchupId::of(team, opponent);
    if (auto it = inputs.observed_spreads.find(matchup); it != inputs.observed_spreads.end()) {
        return team == matchup.low() ? it->second : -it->second;
    }
    if (!inputs.imputer) {
        throw ValidationError("no posted spread for " + to_string(matchup) +
                              " and no spread imputer supplied");
    }
    const auto& table = require_table(inputs);
    return inputs.imputer->predict(table.require(inputs.season, team),
                                   table.require(inputs.season, opponent), true);
}

}  // namespace

void validate(const TeamEfficiency& row) {
    const double values[] = {row.rating, row.oe,    row.de,       row.adj_oe,
                             row.adj_de, row.tempo, row.adj_tempo};
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw ValidationError("non-finite metric for " + season_team(row.season, row.team));
        }
    }
    if (row.rating < 0.0 || row.rating > 1.0) {
        throw ValidationError("rating outside [0,1] for " + season_team(row.season, row.team));
    }
    if (row.oe <= 0.0 || row.de <= 0.0 || row.tempo <= 0.0 || row.adj_tempo <= 0.0) {
        throw ValidationError("efficiencies and tempos must be positive for " +
                              season_team(row.season, row.team));
    }
}

EfficiencyTable::EfficiencyTable(const std::vector<TeamEfficiency>& rows) {
    for (const auto& row : rows) add(row);
}

void EfficiencyTable::add(const TeamEfficiency& row) {
    validate(row);
    if (!rows_.emplace(std::make_pair(row.season, row.team), row).second) {
        throw ValidationError("duplicate efficiency row for " + season_team(row.season, row.team));
    }
}

const TeamEfficiency* EfficiencyTable::find(Season season, TeamId team) const {
    const auto it = rows_.find({season, team});
    return it == rows_.end() ? nullptr : &it->second;
}

const TeamEfficiency& EfficiencyTable::require(Season season, TeamId team) const {
    if (const auto* row = find(season, team)) return *row;
    throw ValidationError("missing efficiency row for " + season_team(season, team));
}

std::string_view metric_name(Metric metric) {
    switch (metric) {
        case Metric::kRating: return "rating";
        case Metric::kOe: return "oe";
        case Metric::kDe: return "de";
        case Metric::kAdjOe: return "adj_oe";
        case Metric::kAdjDe: return "adj_de";
        case Metric::kTempo: return "tempo";
        case Metric::kAdjTempo: return "adj_tempo";
    }
    return "?";
}

double metric_value(const TeamEfficiency& row, Metric metric) {
    switch (metric) {
        case Metric::kRating: return row.rating;
        case Metric::kOe: return row.oe;
        case Metric::kDe: return row.de;
        case Metric::kAdjOe: return row.adj_oe;
        case Metric::kAdjDe: return row.adj_de;
        case Metric::kTempo: return row.tempo;
        case Metric::kAdjTempo: return row.adj_tempo;
    }
    return 0.0;
}

Term Term::home(Metric metric) { return Term(Kind::kHome, metric); }
Term Term::away(Metric metric) { return Term(Kind::kAway, metric); }
Term Term::diff(Metric metric) { return Term(Kind::kDiff, metric); }
Term Term::neutral() { return Term(Kind::kNeutral, Metric::kRating); }

Term Term::square(Term inner) {
    Term t(Kind::kSquare, Metric::kRating);
    t.children_.push_back(std::move(inner));
    return t;
}

Term Term::product(std::vector<Term> factors) {
    Term t(Kind::kProduct, Metric::kRating);
    t.children_ = std::move(factors);
    return t;
}

double Term::evaluate(const GameContext& ctx) const {
    switch (kind_) {
        case Kind::kHome: return metric_value(ctx.home, metric_);
        case Kind::kAway: return metric_value(ctx.away, metric_);
        case Kind::kDiff: return metric_value(ctx.home, metric_) - metric_value(ctx.away, metric_);
        case Kind::kNeutral: return ctx.neutral ? 1.0 : 0.0;
        case Kind::kSquare: {
            const double v = children_.front().evaluate(ctx);
            return v * v;
        }
        case Kind::kProduct: {
            double v = 1.0;
            for (const auto& child : children_) v *= child.evaluate(ctx);
            return v;
        }
    }
    return 0.0;
}

std::string Term::label() const {
    switch (kind_) {
        case Kind::kHome: return "h:" + std::string(metric_name(metric_));
        case Kind::kAway: return "a:" + std::string(metric_name(metric_));
        case Kind::kDiff: return "diff:" + std::string(metric_name(metric_));
        case Kind::kNeutral: return "neutral";
        case Kind::kSquare: return "sq(" + children_.front().label() + ")";
        case Kind::kProduct: {
            std::string out = "prod(";
            for (std::size_t i = 0; i < children_.size(); ++i) {
                if (i > 0) out += ",";
                out += children_[i].label();
            }
            return out + ")";
        }
    }
    return "?";
}

ModelSpec ModelSpec::parse(std::string_view text, bool intercept) {
    ModelSpec spec;
    spec.intercept = intercept;
    if (trim(text).empty()) return spec;

    for (auto part : split_top_level(trim(text))) {
        const std::string item = lower(part);
        const auto int2 = call_args(item, "int2");
        const auto int3 = call_args(item, "int3");
        if (int2 || int3) {
            std::vector<Term> base;
            for (auto inner : split_top_level(int2 ? *int2 : *int3)) base.push_back(parse_term(inner));
            append_interactions(spec.terms, base, int2 ? 2 : 3);
        } else {
            spec.terms.push_back(parse_term(part));
        }
    }

    std::set<std::string> seen;
    for (const auto& term : spec.terms) {
        if (!seen.insert(term.label()).second) {
            throw ValidationError("term " + term.label() + " appears more than once");
        }
    }
    return spec;
}

std::vector<std::string> ModelSpec::labels() const {
    std::vector<std::string> out;
    out.reserve(terms.size());
    for (const auto& term : terms) out.push_back(term.label());
    return out;
}

std::string ModelSpec::to_string() const {
    std::string out;
    for (const auto& term : terms) {
        if (!out.empty()) out += ",";
        out += term.label();
    }
    return out;
}

std::vector<double> ModelSpec::covariates(const GameContext& ctx) const {
    std::vector<double> out;
    out.reserve(terms.size());
    for (const auto& term : terms) out.push_back(term.evaluate(ctx));
    return out;
}

ModelSpec model_building_spec(char fit) {
    switch (fit) {
        case 'a': return ModelSpec::parse("diff:rating");
        case 'b': return ModelSpec::parse("diff:rating,neutral");
        case 'c': return ModelSpec::parse("x1,x2");
        case 'd': return ModelSpec::parse("x1,x2,x15");
        case 'e': return ModelSpec::parse("x3,x4,x5,x6,x15");
        case 'f': return ModelSpec::parse("x7,x8,x9,x10,x15");
        case 'g': return ModelSpec::parse("diff:adj_oe,diff:adj_de,x15");
        case 'h': return ModelSpec::parse("x1,x2,x7,x8,x9,x10,x15");
        case 'i': return ModelSpec::parse("int2(x7,x8,x9,x10,x15)");
        case 'j': return ModelSpec::parse("int2(x1,x2,x7,x8,x9,x10,x13,x14,x15)");
        case 'k': return ModelSpec::parse("int3(x1,x2,x7,x8,x9,x10,x13,x14,x15)");
        default: break;
    }
    throw ValidationError(std::string("no model-building fit named '") + fit + "'");
}

ModelSpec default_efficiency_spec() { return model_building_spec('f'); }

glm::FittedGlm fit_m1(const std::vector<GameRecord>& games, const glm::FitOptions& options) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(games.size()), 1);
    Eigen::VectorXd y(static_cast<Eigen::Index>(games.size()));
    for (std::size_t i = 0; i < games.size(); ++i) {
        const auto& game = games[i];
        if (!game.spread) {
            throw ValidationError("spread model needs a spread for every game; missing for " +
                                  to_string(game.home) + " vs " + to_string(game.away));
        }
        const auto row = static_cast<Eigen::Index>(i);
        x(row, 0) = *game.spread;
        y[row] = game.home_won() ? 1.0 : 0.0;
    }
    return glm::fit_logistic(glm::DesignMatrix(std::move(x), {"spread"}, true), y, options);
}

glm::DesignMatrix efficiency_design(const std::vector<GameRecord>& games,
                                    const EfficiencyTable& efficiency, const ModelSpec& spec) {
    const auto k = static_cast<Eigen::Index>(spec.terms.size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(games.size()), k);
    for (std::size_t i = 0; i < games.size(); ++i) {
        const auto& game = games[i];
        const GameContext ctx{efficiency.require(game.season, game.home),
                              efficiency.require(game.season, game.away), game.neutral};
        for (Eigen::Index j = 0; j < k; ++j) {
            x(static_cast<Eigen::Index>(i), j) = spec.terms[static_cast<std::size_t>(j)].evaluate(ctx);
        }
    }
    return glm::DesignMatrix(std::move(x), spec.labels(), spec.intercept);
}

glm::FittedGlm fit_m2(const std::vector<GameRecord>& games, const EfficiencyTable& efficiency,
                      const ModelSpec& spec, const glm::FitOptions& options) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(games.size()));
    for (std::size_t i = 0; i < games.size(); ++i) {
        y[static_cast<Eigen::Index>(i)] = games[i].home_won() ? 1.0 : 0.0;
    }
    return glm::fit_logistic(efficiency_design(games, efficiency, spec), y, options);
}

double SpreadImputer::predict(const TeamEfficiency& home, const TeamEfficiency& away,
                              bool neutral) const {
    return coefficients[0] + coefficients[1] * (home.adj_oe - away.adj_oe) +
           coefficients[2] * (home.adj_de - away.adj_de) + coefficients[3] * (neutral ? 1.0 : 0.0);
}

SpreadImputer fit_spread_imputer(const std::vector<GameRecord>& games,
                                 const EfficiencyTable& efficiency, std::size_t min_games) {
    std::vector<const GameRecord*> usable;
    for (const auto& game : games) {
        if (game.spread) usable.push_back(&game);
    }
    if (usable.size() < min_games) {
        throw ValidationError("spread imputer needs at least " + std::to_string(min_games) +
                              " games with spreads, got " + std::to_string(usable.size()));
    }

    const auto n = static_cast<Eigen::Index>(usable.size());
    Eigen::MatrixXd x(n, 4);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& game = *usable[static_cast<std::size_t>(i)];
        const auto& home = efficiency.require(game.season, game.home);
        const auto& away = efficiency.require(game.season, game.away);
        x(i, 0) = 1.0;
        x(i, 1) = home.adj_oe - away.adj_oe;
        x(i, 2) = home.adj_de - away.adj_de;
        x(i, 3) = game.neutral ? 1.0 : 0.0;
        y[i] = *game.spread;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < 4) {
        throw NumericalError("spread imputer design is rank-deficient (rank " +
                             std::to_string(qr.rank()) + " of 4)");
    }
    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd residual = y - x * beta;
    const double dof = static_cast<double>(n - 4);
    const double sigma2 = residual.squaredNorm() / dof;
    const Eigen::MatrixXd covariance =
        sigma2 * (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(4, 4));

    SpreadImputer imputer;
    for (int j = 0; j < 4; ++j) {
        imputer.coefficients[static_cast<std::size_t>(j)] = beta[j];
        imputer.standard_errors[static_cast<std::size_t>(j)] = std::sqrt(covariance(j, j));
    }
    imputer.residual_sd = std::sqrt(sigma2);
    imputer.games = usable.size();
    return imputer;
}

double matchup_prob(const FeatureModel& model, TeamId team, TeamId opponent,
                    const PredictionInputs& inputs) {
    // Probability that the first team wins when laid out as "home" at a neutral site.
    auto layout = [&](TeamId home, TeamId away) {
        if (const auto* spread = std::get_if<SpreadModel>(&model)) {
            return raw_spread_prob(spread->fit, spread_for(home, away, inputs));
        }
        const auto& eff = std::get<EfficiencyModel>(model);
        const auto& table = require_table(inputs);
        const GameContext ctx{table.require(inputs.season, home),
                              table.require(inputs.season, away), true};
        return glm::predict_prob(eff.fit, eff.spec.covariates(ctx));
    };
    const double forward = layout(team, opponent);
    const double reverse = layout(opponent, team);
    return 0.5 * (forward + (1.0 - reverse));
}

Submission predict_universe(const FeatureModel& model, const PredictionInputs& inputs,
                            std::string entrant, std::string team) {
    if (!inputs.universe) throw ValidationError("prediction needs a matchup universe");
    std::vector<double> probs;
    probs.reserve(inputs.universe->size());
    for (const auto& matchup : inputs.universe->matchups()) {
        probs.push_back(matchup_prob(model, matchup.low(), matchup.high(), inputs));
    }
    if (team.empty()) team = entrant;
    return Submission{std::move(entrant), std::move(team),
                      ProbabilityMap(inputs.universe, std::move(probs))};
}

Date march_first(Season season) {
    return std::chrono::year{season} / std::chrono::March / std::chrono::day{1};
}

HarnessReport run_selection_harness(const std::vector<GameRecord>& games,
                                    const EfficiencyTable& efficiency,
                                    const std::vector<ModelSpec>& specs,
                                    const glm::FitOptions& options) {
    struct Split {
        std::vector<GameRecord> train;
        std::vector<GameRecord> test;
    };
    std::map<Season, Split> seasons;
    for (const auto& game : games) {
        auto& split = seasons[game.season];
        (game.date < march_first(game.season) ? split.train : split.test).push_back(game);
    }

    HarnessReport report;
    std::vector<Season> usable;
    for (const auto& [season, split] : seasons) {
        if (split.train.empty() || split.test.empty()) {
            report.warnings.push_back("season " + std::to_string(season) + " skipped: no games " +
                                      (split.train.empty() ? "before" : "on or after") +
                                      " March 1");
        } else {
            usable.push_back(season);
        }
    }

    for (const auto& spec : specs) {
        HarnessRow row;
        row.spec = spec.to_string();
        row.seasons = usable.size();
        double total = 0.0;
        for (Season season : usable) {
            const auto& split = seasons.at(season);
            const auto fit = fit_m2(split.train, efficiency, spec, options);
            if (!fit.converged()) {
                row.failures.push_back(std::to_string(season) + ": " + glm::to_string(fit.status));
            }
            for (const auto& game : split.test) {
                const GameContext ctx{efficiency.require(game.season, game.home),
                                      efficiency.require(game.season, game.away), game.neutral};
                const double p = glm::predict_prob(fit, spec.covariates(ctx));
                total += scoring::game_log_loss(p, game.home_won() ? 1 : 0);
                ++row.test_games;
            }
        }
        row.mean_log_loss = row.test_games > 0 ? total / static_cast<double>(row.test_games)
                                               : std::numeric_limits<double>::quiet_NaN();
        report.rows.push_back(std::move(row));
    }
    return report;
}

}  // namespace madness::features
