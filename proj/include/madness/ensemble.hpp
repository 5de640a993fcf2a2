#pragma once

// Convex blends of two probability vectors and grid search for the blend weight.

#include <string>
#include <utility>
#include <vector>

#include "madness/core.hpp"

namespace madness::ensemble {

// w*a + (1-w)*b, computed so that blend(a,b,w) == blend(b,a,1-w) bit for bit
// and the result never leaves [min(a,b), max(a,b)].
double blend_value(double a, double b, double w);

// Throws ValidationError when the universes differ or w is outside [0,1].
ProbabilityMap blend(const ProbabilityMap& a, const ProbabilityMap& b, double w);
Submission blend(const Submission& a, const Submission& b, double w, std::string entrant,
                 std::string team = {});

struct SeasonHistory {
    ProbabilityMap a;
    ProbabilityMap b;
    OutcomeSet outcomes;
};

enum class Pooling {
    kPooledGames,  // mean per-game loss over every game of every season
    kSeasonMean,   // mean of per-season mean losses
};

struct WeightSearch {
    double weight = 0.5;  // weight on `a`
    double score = 0.0;
    std::vector<std::pair<double, double>> curve;  // (w, score) for every grid point
};

inline constexpr int kGridPoints = 100;  // step 0.01, endpoints included

// Scores blend(a, b, w) for w = 0, 0.01, ..., 1 and returns the argmin.
// Scores within 1e-12 (relative) of the minimum tie; ties go to the weight
// closest to 0.5. Throws ValidationError on an empty history.
WeightSearch search_weight(const std::vector<SeasonHistory>& history,
                           Pooling pooling = Pooling::kPooledGames);

}  // namespace madness::ensemble
