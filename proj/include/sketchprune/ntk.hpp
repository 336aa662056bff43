#pragma once

#include "sketchprune/bounds.hpp"
#include "sketchprune/core.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace sketchprune::ntk {

class UndefinedFError : public Error {
 public:
  using Error::Error;
};

class StepSizeError : public Error {
 public:
  using Error::Error;
};

enum class Activation { kErf, kSoftplus, kLinear };

std::string_view to_string(Activation act);

double activate(Activation act, double x);
double activate_derivative(Activation act, double x);

// f(x) = V phi(W x / sqrt(d_in)) / sqrt(width), no biases.
// theta = [W row-major (width x d_in), V row-major (m_out x width)].
class TinyMLP {
 public:
  TinyMLP(Index input_dim, Index width, Index output_dim, Activation act, Eigen::VectorXd theta);

  // theta ~ N(0, I).
  static TinyMLP initialize(Index input_dim, Index width, Index output_dim, Activation act,
                            RngStream& rng);

  static Index parameter_count(Index input_dim, Index width, Index output_dim);

  Index input_dim() const { return input_dim_; }
  Index width() const { return width_; }
  Index output_dim() const { return output_dim_; }
  Index parameter_count() const { return theta_.size(); }
  Activation activation() const { return activation_; }
  const Eigen::VectorXd& theta() const { return theta_; }

  TinyMLP with_theta(Eigen::VectorXd theta) const;

  // Inputs are d_in x examples. Output entry e * m_out + o is output o on
  // example e.
  Eigen::VectorXd forward(const DataMatrix& inputs) const;

 private:
  Index input_dim_;
  Index width_;
  Index output_dim_;
  Activation activation_;
  Eigen::VectorXd theta_;
};

// Rows follow forward(), columns follow theta.
Eigen::MatrixXd analytic_jacobian(const TinyMLP& model, const DataMatrix& inputs);

// Central differences.
Eigen::MatrixXd numerical_jacobian(const TinyMLP& model, const DataMatrix& inputs,
                                   double step = 1e-5);

// J theta.
Eigen::VectorXd linearized_features(const Eigen::MatrixXd& jacobian, const Eigen::VectorXd& theta);

// Sum of reciprocal column norms. Throws UndefinedFError on a zero column.
double capital_F(const Eigen::MatrixXd& a);
// Vector form: sum of 1 / |v_i|.
double capital_F(const Eigen::VectorXd& v);

struct NtkSnapshot {
  Eigen::MatrixXd jacobian;
  Eigen::VectorXd theta0;
  Eigen::VectorXd outputs0;
  Eigen::VectorXd labels;
  // J J^T / width.
  Eigen::MatrixXd empirical_ntk;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  // Filled in by estimate_k_hat; 0 until then.
  double k_hat = 0.0;
  // ||f_0(X) - Y||.
  double r0_hat = 0.0;
  Index width = 0;

  // 2 / (lambda_min + lambda_max).
  double critical_learning_rate() const;
};

NtkSnapshot take_snapshot(const TinyMLP& model, const DataMatrix& inputs,
                          const Eigen::VectorXd& labels);

// p_i proportional to ||J^(i)|| |theta0_i|.
ProbabilityVector jacobian_probabilities(const Eigen::MatrixXd& jacobian,
                                         const Eigen::VectorXd& theta0);

Mask ntk_mask(const NtkSnapshot& snapshot, Index s, RngStream& rng);

struct LinearizedTrajectory {
  // thetas[t] after t steps; thetas[0] = theta0.
  std::vector<Eigen::VectorXd> thetas;
  std::vector<Eigen::VectorXd> outputs;
  std::vector<double> losses;
  std::vector<double> distances;
};

// Gradient descent on 1/2 ||f0 + J0 (theta - theta0) - Y||^2 with the kernel
// step eta0 / width. Throws StepSizeError above the critical rate.
LinearizedTrajectory train_linearized_gd(const NtkSnapshot& snapshot, double eta0, Index steps);

// max(1, ||J(theta_c)||_F over checkpoints, ||J(theta_a) - J(theta_b)||_F /
// ||theta_a - theta_b|| over checkpoint pairs). Checkpoints are evenly
// spaced along the trajectory and include both ends.
double estimate_k_hat(const TinyMLP& model, const DataMatrix& inputs,
                      const LinearizedTrajectory& trajectory, Index checkpoints = 8);

// (1/s) K^3 ||theta0||_1 F(J0) (||theta0||_1 + F(theta0) 9 K^4 R0^2 / lambda^2
//   + 6 sqrt(d) K^3 R0 / lambda).
double linearized_error_bound(Index s, double k_hat, const Eigen::VectorXd& theta0,
                              double f_jacobian0, double r0, double lambda_min);

struct NtkErrorReport {
  BoundReport report;
  // Exact mask expectation at the final parameters.
  double exact_expectation = 0.0;
  double k_hat = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double r0 = 0.0;
  double movement = 0.0;
  // ||theta_T - theta0|| lambda_min / (3 K R0).
  double movement_ratio = 0.0;
  Index s = 0;
};

// Masks come from (J(theta0), theta0); the error is measured on the final
// parameters with the Jacobian recomputed there.
NtkErrorReport ntk_error_report(const TinyMLP& model, const DataMatrix& inputs,
                                const NtkSnapshot& snapshot,
                                const LinearizedTrajectory& trajectory, Index s,
                                Index mask_trials, RngStream& rng);

struct NtkRunConfig {
  Index input_dim = 4;
  Index width = 64;
  Index output_dim = 1;
  Index examples = 8;
  Activation activation = Activation::kErf;
  Index steps = 100;
  // <= 0 picks ceil(sqrt(d_theta)).
  Index s = 0;
  // <= 0 picks the critical rate.
  double eta0 = 0.0;
  Index mask_trials = 1000;
  std::uint64_t seed = 0;
};

struct NtkRunResult {
  NtkErrorReport error;
  Index parameter_count = 0;
  // ||theta_T - theta0|| / ||theta0||.
  double relative_movement = 0.0;
};

// X, Y and theta0 all N(0, 1) from independent streams of the seed.
NtkRunResult run_ntk_experiment(const NtkRunConfig& config);

}  // namespace sketchprune::ntk
