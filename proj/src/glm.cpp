#include "madness/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "madness/error.hpp"

namespace madness::glm {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

constexpr double kPredictorStepTolerance = 1e-6;

double negative_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& beta) {
    return -log_likelihood(x, y, beta);
}

}  // namespace

DesignMatrix::DesignMatrix(Eigen::MatrixXd covariates, std::vector<std::string> labels,
                           bool intercept)
    : intercept_(intercept) {
    if (static_cast<Eigen::Index>(labels.size()) != covariates.cols()) {
        throw ValidationError("design matrix has " + std::to_string(covariates.cols()) +
                              " columns but " + std::to_string(labels.size()) + " labels");
    }
    if (!covariates.allFinite()) {
        throw ValidationError("design matrix contains non-finite values");
    }
    if (intercept) {
        values_.resize(covariates.rows(), covariates.cols() + 1);
        values_.col(0).setOnes();
        values_.rightCols(covariates.cols()) = covariates;
        labels_.push_back(kInterceptLabel);
    } else {
        values_ = std::move(covariates);
    }
    labels_.insert(labels_.end(), labels.begin(), labels.end());
    std::set<std::string> unique(labels_.begin(), labels_.end());
    if (unique.size() != labels_.size()) {
        throw ValidationError("design matrix labels must be unique");
    }
}

std::string to_string(FitStatus status) {
    switch (status) {
        case FitStatus::kConverged: return "converged";
        case FitStatus::kMaxIterations: return "max-iterations";
        case FitStatus::kSeparation: return "separation";
        case FitStatus::kStalled: return "stalled";
    }
    return "unknown";
}

double log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = x * beta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        total += y[i] * eta[i] - softplus(eta[i]);
    }
    return total;
}

Eigen::VectorXd log_likelihood_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& beta) {
    const Eigen::VectorXd p = (x * beta).unaryExpr([](double e) { return inverse_logit(e); });
    return x.transpose() * (y - p);
}

FittedGlm fit_logistic(const DesignMatrix& design, const Eigen::VectorXd& y,
                       const FitOptions& options) {
    const Eigen::MatrixXd& x = design.values();
    const Eigen::Index n = x.rows();
    const Eigen::Index k = x.cols();

    if (y.size() != n) {
        throw ValidationError("response has " + std::to_string(y.size()) + " entries but design has " +
                              std::to_string(n) + " rows");
    }
    if (n < k) {
        throw ValidationError("fewer observations than columns");
    }
    Eigen::Index ones = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y[i] != 0.0 && y[i] != 1.0) throw ValidationError("response must be binary 0/1");
        if (y[i] == 1.0) ++ones;
    }
    if (ones == 0 || ones == n) {
        throw ValidationError("response contains a single class");
    }

    FittedGlm fit;
    fit.labels = design.labels();
    fit.has_intercept = design.has_intercept();
    fit.coefficients = Eigen::VectorXd::Zero(k);

    Eigen::VectorXd& beta = fit.coefficients;
    double objective = negative_log_likelihood(x, y, beta);
    fit.objective_trace.push_back(objective);
    double previous_step_norm = std::numeric_limits<double>::infinity();

    for (int iteration = 0;; ++iteration) {
        const Eigen::VectorXd p = (x * beta).unaryExpr([](double e) { return inverse_logit(e); });
        const Eigen::VectorXd gradient = x.transpose() * (y - p);
        fit.iterations = iteration;
        fit.final_gradient_norm = gradient.norm() / static_cast<double>(n);
        fit.log_likelihood = -objective;

        const Eigen::VectorXd w = p.array() * (1.0 - p.array());
        const Eigen::MatrixXd hessian = x.transpose() * w.asDiagonal() * x;

        // Equilibrate so covariates on very different scales share one jitter.
        Eigen::VectorXd scale(k);
        for (Eigen::Index j = 0; j < k; ++j) {
            const double d = hessian(j, j);
            scale[j] = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
        }
        Eigen::MatrixXd scaled = scale.asDiagonal() * hessian * scale.asDiagonal();
        const Eigen::VectorXd rhs = scale.cwiseProduct(gradient);

        Eigen::LLT<Eigen::MatrixXd> llt(scaled);
        if (llt.info() != Eigen::Success) {
            scaled.diagonal().array() += 1e-10;
            llt.compute(scaled);
            fit.singular_design = true;
            if (llt.info() != Eigen::Success) {
                fit.status = FitStatus::kStalled;
                return fit;
            }
        }
        const Eigen::VectorXd step = scale.cwiseProduct(llt.solve(rhs));

        // Under separation the gradient vanishes while Newton steps keep moving
        // the linear predictor, so both must be small.
        const double eta_change = k > 0 ? (x * step).cwiseAbs().maxCoeff() : 0.0;
        if (fit.final_gradient_norm <= options.gradient_tolerance &&
            eta_change <= kPredictorStepTolerance) {
            fit.status = FitStatus::kConverged;
            return fit;
        }
        if (iteration == options.max_iterations) {
            fit.status = FitStatus::kMaxIterations;
            return fit;
        }

        // Once the predicted decrease is below the rounding error of the summed
        // objective, the comparison is noise; take the full Newton step.
        const double predicted_decrease = 0.5 * gradient.dot(step);
        const double objective_noise =
            1e3 * std::numeric_limits<double>::epsilon() * (std::abs(objective) + static_cast<double>(n));
        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd candidate;
        double candidate_objective = objective;
        for (int halving = 0; halving <= options.max_step_halvings; ++halving) {
            candidate = beta + t * step;
            candidate_objective = negative_log_likelihood(x, y, candidate);
            if (candidate_objective <= objective) {
                accepted = true;
                break;
            }
            if (halving == 0 && predicted_decrease <= objective_noise) {
                candidate_objective = objective;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            fit.status = FitStatus::kStalled;
            return fit;
        }

        const double step_norm = t * step.norm();
        beta = candidate;
        objective = candidate_objective;
        fit.objective_trace.push_back(objective);

        if (beta.cwiseAbs().maxCoeff() > options.separation_bound &&
            step_norm >= 0.5 * previous_step_norm) {
            fit.iterations = iteration + 1;
            fit.log_likelihood = -objective;
            fit.final_gradient_norm =
                log_likelihood_gradient(x, y, beta).norm() / static_cast<double>(n);
            fit.status = FitStatus::kSeparation;
            return fit;
        }
        previous_step_norm = step_norm;
    }
}

void require_converged(const FittedGlm& fit) {
    if (!fit.converged()) {
        throw NumericalError("logistic fit did not converge (" + to_string(fit.status) +
                             ", gradient norm " + std::to_string(fit.final_gradient_norm) + ")");
    }
}

double inverse_logit(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double linear_predictor(const FittedGlm& model, std::span<const double> x) {
    if (x.size() != model.covariate_count()) {
        throw ValidationError("model expects " + std::to_string(model.covariate_count()) +
                              " covariates, got " + std::to_string(x.size()));
    }
    const Eigen::Index offset = model.has_intercept ? 1 : 0;
    double eta = model.has_intercept ? model.coefficients[0] : 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        eta += model.coefficients[offset + static_cast<Eigen::Index>(j)] * x[j];
    }
    return eta;
}

double predict_prob(const FittedGlm& model, std::span<const double> x) {
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(inverse_logit(linear_predictor(model, x)), lo, hi);
}

}  // namespace madness::glm
