#pragma once

// Binary logistic regression by maximum likelihood (IRLS / Newton).

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace madness::glm {

inline constexpr const char* kInterceptLabel = "(intercept)";

class DesignMatrix {
public:
    // `covariates` excludes the intercept; when `intercept` is set a column of
    // ones is prepended. Throws ValidationError on non-finite entries, label
    // count mismatch or duplicate labels.
    DesignMatrix(Eigen::MatrixXd covariates, std::vector<std::string> labels, bool intercept);

    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }
    const Eigen::MatrixXd& values() const { return values_; }
    const std::vector<std::string>& labels() const { return labels_; }
    bool has_intercept() const { return intercept_; }

private:
    Eigen::MatrixXd values_;
    std::vector<std::string> labels_;
    bool intercept_;
};

enum class FitStatus {
    kConverged,
    kMaxIterations,
    kSeparation,  // coefficients diverging
    kStalled,     // step-halving could not decrease the objective
};

std::string to_string(FitStatus status);

struct FitOptions {
    // Bound on the norm of the per-observation mean log-likelihood gradient.
    double gradient_tolerance = 1e-8;
    int max_iterations = 100;
    double separation_bound = 30.0;
    int max_step_halvings = 40;
};

struct FittedGlm {
    Eigen::VectorXd coefficients;  // intercept first when present
    std::vector<std::string> labels;
    bool has_intercept = true;
    FitStatus status = FitStatus::kMaxIterations;
    int iterations = 0;
    double final_gradient_norm = 0.0;
    double log_likelihood = 0.0;
    // Set when the weighted normal equations needed diagonal jitter, i.e. some
    // coefficient direction is not identified by the data.
    bool singular_design = false;
    // Negative log-likelihood after each accepted iterate, starting at beta = 0.
    std::vector<double> objective_trace;

    bool converged() const { return status == FitStatus::kConverged; }
    // Number of covariates expected by predict_prob (excludes the intercept).
    std::size_t covariate_count() const {
        return static_cast<std::size_t>(coefficients.size()) - (has_intercept ? 1 : 0);
    }
};

// Sum over observations of y*eta - log(1 + exp(eta)).
double log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta);
// X^T (y - p), on the same (summed) scale as log_likelihood.
Eigen::VectorXd log_likelihood_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& beta);

// Throws ValidationError on length mismatch, non-binary or single-class y, or
// fewer rows than columns. Numerical trouble is reported via FittedGlm::status.
FittedGlm fit_logistic(const DesignMatrix& design, const Eigen::VectorXd& y,
                       const FitOptions& options = {});

// Throws NumericalError unless the fit converged.
void require_converged(const FittedGlm& fit);

double inverse_logit(double eta);
double linear_predictor(const FittedGlm& model, std::span<const double> x);
// Inverse logit of the linear predictor, clamped strictly inside (0, 1).
double predict_prob(const FittedGlm& model, std::span<const double> x);

}  // namespace madness::glm
