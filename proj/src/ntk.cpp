#include "sketchprune/ntk.hpp"

#include "sketchprune/data.hpp"
#include "sketchprune/sketch.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sketchprune::ntk {

namespace {

enum NtkStream : std::uint64_t {
  kStreamInputs = 11,
  kStreamLabels = 12,
  kStreamTheta = 13,
  kStreamMasks = 14,
};

void require_inputs(const TinyMLP& model, const DataMatrix& inputs) {
  if (inputs.dims() != model.input_dim()) {
    throw DimensionError("inputs have " + std::to_string(inputs.dims()) +
                         " rows but the model expects " + std::to_string(model.input_dim()));
  }
}

}  // namespace

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::kErf:
      return "erf";
    case Activation::kSoftplus:
      return "softplus";
    case Activation::kLinear:
      return "linear";
  }
  return "erf";
}

double activate(Activation act, double x) {
  switch (act) {
    case Activation::kErf:
      return std::erf(x);
    case Activation::kSoftplus:
      return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
    case Activation::kLinear:
      return x;
  }
  return x;
}

double activate_derivative(Activation act, double x) {
  switch (act) {
    case Activation::kErf:
      return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-x * x);
    case Activation::kSoftplus:
      return 1.0 / (1.0 + std::exp(-x));
    case Activation::kLinear:
      return 1.0;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------

TinyMLP::TinyMLP(Index input_dim, Index width, Index output_dim, Activation act,
                 Eigen::VectorXd theta)
    : input_dim_(input_dim),
      width_(width),
      output_dim_(output_dim),
      activation_(act),
      theta_(std::move(theta)) {
  if (input_dim < 1 || width < 1 || output_dim < 1) {
    throw DimensionError("TinyMLP needs positive input dim, width and output dim");
  }
  if (theta_.size() != parameter_count(input_dim, width, output_dim)) {
    throw DimensionError("theta length does not match the architecture");
  }
  if (!theta_.allFinite()) throw InvalidArgumentError("theta must be finite");
}

TinyMLP TinyMLP::initialize(Index input_dim, Index width, Index output_dim, Activation act,
                            RngStream& rng) {
  const Index count = parameter_count(input_dim, width, output_dim);
  if (count < 1) throw DimensionError("TinyMLP needs positive dimensions");
  return TinyMLP(input_dim, width, output_dim, act, gen_normal_vector(count, 1.0, rng));
}

Index TinyMLP::parameter_count(Index input_dim, Index width, Index output_dim) {
  return input_dim * width + width * output_dim;
}

TinyMLP TinyMLP::with_theta(Eigen::VectorXd theta) const {
  return TinyMLP(input_dim_, width_, output_dim_, activation_, std::move(theta));
}

Eigen::VectorXd TinyMLP::forward(const DataMatrix& inputs) const {
  require_inputs(*this, inputs);
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> w(theta_.data(), width_, input_dim_);
  const Eigen::Map<const RowMajor> v(theta_.data() + width_ * input_dim_, output_dim_, width_);
  const Eigen::MatrixXd pre = w * inputs.values() / std::sqrt(static_cast<double>(input_dim_));
  const Eigen::MatrixXd act = pre.unaryExpr([&](double h) { return activate(activation_, h); });
  // m_out x examples, flattened example-major.
  const Eigen::MatrixXd out = v * act / std::sqrt(static_cast<double>(width_));
  return Eigen::Map<const Eigen::VectorXd>(out.data(), out.size());
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd analytic_jacobian(const TinyMLP& model, const DataMatrix& inputs) {
  require_inputs(model, inputs);
  const Index d_in = model.input_dim();
  const Index width = model.width();
  const Index m_out = model.output_dim();
  const Index examples = inputs.examples();
  const Eigen::VectorXd& theta = model.theta();
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(d_in));
  const double out_scale = 1.0 / std::sqrt(static_cast<double>(width));
  const Index v_offset = width * d_in;

  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(examples * m_out, model.parameter_count());
  for (Index e = 0; e < examples; ++e) {
    const Eigen::VectorXd x = inputs.col(e);
    for (Index k = 0; k < width; ++k) {
      const double h = theta.segment(k * d_in, d_in).dot(x) * in_scale;
      const double a = activate(model.activation(), h);
      const double da = activate_derivative(model.activation(), h);
      for (Index o = 0; o < m_out; ++o) {
        const Index row = e * m_out + o;
        const double v_ok = theta[v_offset + o * width + k];
        jac(row, v_offset + o * width + k) = a * out_scale;
        const double chain = v_ok * da * out_scale * in_scale;
        for (Index j = 0; j < d_in; ++j) jac(row, k * d_in + j) = chain * x[j];
      }
    }
  }
  return jac;
}

Eigen::MatrixXd numerical_jacobian(const TinyMLP& model, const DataMatrix& inputs, double step) {
  if (!(step > 0.0)) throw InvalidArgumentError("finite-difference step must be positive");
  const Index params = model.parameter_count();
  Eigen::MatrixXd jac(inputs.examples() * model.output_dim(), params);
  Eigen::VectorXd theta = model.theta();
  for (Index i = 0; i < params; ++i) {
    const double saved = theta[i];
    theta[i] = saved + step;
    const Eigen::VectorXd up = model.with_theta(theta).forward(inputs);
    theta[i] = saved - step;
    const Eigen::VectorXd down = model.with_theta(theta).forward(inputs);
    theta[i] = saved;
    jac.col(i) = (up - down) / (2.0 * step);
  }
  return jac;
}

Eigen::VectorXd linearized_features(const Eigen::MatrixXd& jacobian,
                                    const Eigen::VectorXd& theta) {
  if (jacobian.cols() != theta.size()) {
    throw DimensionError("Jacobian has " + std::to_string(jacobian.cols()) +
                         " columns but theta has length " + std::to_string(theta.size()));
  }
  return jacobian * theta;
}

double capital_F(const Eigen::MatrixXd& a) {
  double total = 0.0;
  for (Index i = 0; i < a.cols(); ++i) {
    const double norm = a.col(i).norm();
    if (!(norm > 0.0)) throw UndefinedFError("column " + std::to_string(i) + " is zero");
    total += 1.0 / norm;
  }
  return total;
}

double capital_F(const Eigen::VectorXd& v) {
  double total = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) throw UndefinedFError("entry " + std::to_string(i) + " is zero");
    total += 1.0 / std::abs(v[i]);
  }
  return total;
}

// ---------------------------------------------------------------------------

double NtkSnapshot::critical_learning_rate() const { return 2.0 / (lambda_min + lambda_max); }

NtkSnapshot take_snapshot(const TinyMLP& model, const DataMatrix& inputs,
                          const Eigen::VectorXd& labels) {
  NtkSnapshot snap;
  snap.jacobian = analytic_jacobian(model, inputs);
  if (labels.size() != snap.jacobian.rows()) {
    throw DimensionError("labels length differs from examples * outputs");
  }
  snap.theta0 = model.theta();
  snap.outputs0 = model.forward(inputs);
  snap.labels = labels;
  snap.width = model.width();
  snap.empirical_ntk =
      snap.jacobian * snap.jacobian.transpose() / static_cast<double>(model.width());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(snap.empirical_ntk,
                                                           Eigen::EigenvaluesOnly);
  snap.lambda_min = std::max(0.0, eig.eigenvalues().minCoeff());
  snap.lambda_max = eig.eigenvalues().maxCoeff();
  snap.r0_hat = (snap.outputs0 - labels).norm();
  return snap;
}

ProbabilityVector jacobian_probabilities(const Eigen::MatrixXd& jacobian,
                                         const Eigen::VectorXd& theta0) {
  return optimal_probabilities(DataMatrix(jacobian.transpose()), WeightVector(theta0));
}

Mask ntk_mask(const NtkSnapshot& snapshot, Index s, RngStream& rng) {
  return sample_sketch_mask(jacobian_probabilities(snapshot.jacobian, snapshot.theta0), s, rng);
}

LinearizedTrajectory train_linearized_gd(const NtkSnapshot& snapshot, double eta0, Index steps) {
  if (steps < 0) throw InvalidArgumentError("steps must be >= 0");
  if (!(eta0 > 0.0)) throw StepSizeError("eta0 must be positive");
  const double critical = snapshot.critical_learning_rate();
  if (eta0 > critical * (1.0 + 1e-12)) {
    throw StepSizeError("eta0 exceeds the critical rate 2 / (lambda_min + lambda_max)");
  }
  const Eigen::MatrixXd& jac = snapshot.jacobian;
  const double rate = eta0 / static_cast<double>(snapshot.width);

  LinearizedTrajectory traj;
  Eigen::VectorXd theta = snapshot.theta0;
  Eigen::VectorXd out = snapshot.outputs0;
  auto record = [&] {
    traj.thetas.push_back(theta);
    traj.outputs.push_back(out);
    traj.losses.push_back(0.5 * (out - snapshot.labels).squaredNorm());
    traj.distances.push_back((theta - snapshot.theta0).norm());
  };
  record();
  for (Index t = 0; t < steps; ++t) {
    theta -= rate * (jac.transpose() * (out - snapshot.labels));
    out = snapshot.outputs0 + jac * (theta - snapshot.theta0);
    record();
  }
  return traj;
}

double estimate_k_hat(const TinyMLP& model, const DataMatrix& inputs,
                      const LinearizedTrajectory& trajectory, Index checkpoints) {
  if (trajectory.thetas.empty()) throw InvalidArgumentError("empty trajectory");
  if (checkpoints < 2) throw InvalidArgumentError("need at least two checkpoints");
  const auto last = static_cast<Index>(trajectory.thetas.size()) - 1;
  std::vector<Index> picks;
  for (Index c = 0; c < checkpoints; ++c) {
    const Index t = last * c / (checkpoints - 1);
    if (picks.empty() || picks.back() != t) picks.push_back(t);
  }
  std::vector<Eigen::MatrixXd> jacs;
  double k = 1.0;
  for (Index t : picks) {
    jacs.push_back(analytic_jacobian(model.with_theta(trajectory.thetas[t]), inputs));
    k = std::max(k, jacs.back().norm());
  }
  for (std::size_t a = 0; a < picks.size(); ++a) {
    for (std::size_t b = a + 1; b < picks.size(); ++b) {
      const double gap = (trajectory.thetas[picks[a]] - trajectory.thetas[picks[b]]).norm();
      if (gap > 0.0) k = std::max(k, (jacs[a] - jacs[b]).norm() / gap);
    }
  }
  return k;
}

double linearized_error_bound(Index s, double k_hat, const Eigen::VectorXd& theta0,
                              double f_jacobian0, double r0, double lambda_min) {
  if (s < 1) throw InvalidDensityError("s must be >= 1");
  if (!(lambda_min > 0.0)) throw BoundUndefinedError("bound needs lambda_min > 0");
  const double l1 = theta0.lpNorm<1>();
  const double d = static_cast<double>(theta0.size());
  const double k3 = k_hat * k_hat * k_hat;
  const double k4 = k3 * k_hat;
  const double inner = l1 + capital_F(theta0) * 9.0 * k4 * r0 * r0 / (lambda_min * lambda_min) +
                       6.0 * std::sqrt(d) * k3 * r0 / lambda_min;
  return k3 * l1 * f_jacobian0 * inner / static_cast<double>(s);
}

NtkErrorReport ntk_error_report(const TinyMLP& model, const DataMatrix& inputs,
                                const NtkSnapshot& snapshot,
                                const LinearizedTrajectory& trajectory, Index s,
                                Index mask_trials, RngStream& rng) {
  if (trajectory.thetas.empty()) throw InvalidArgumentError("empty trajectory");
  if (mask_trials < 2) throw InvalidArgumentError("need at least two mask trials");
  if (s < 1) throw InvalidDensityError("s must be >= 1");
  const Eigen::VectorXd& theta_t = trajectory.thetas.back();
  const DataMatrix jac_t(analytic_jacobian(model.with_theta(theta_t), inputs).transpose());
  const WeightVector w_t(theta_t);
  const ProbabilityVector p0 = jacobian_probabilities(snapshot.jacobian, snapshot.theta0);
  const CategoricalSampler sampler(p0);

  RunningMoments moments;
  for (Index trial = 0; trial < mask_trials; ++trial) {
    const double e = approximation_error(jac_t, w_t, sample_sketch_mask(sampler, p0, s, rng));
    moments.add(e * e);
  }

  NtkErrorReport out;
  out.s = s;
  out.k_hat = snapshot.k_hat > 0.0 ? snapshot.k_hat : estimate_k_hat(model, inputs, trajectory);
  out.lambda_min = snapshot.lambda_min;
  out.lambda_max = snapshot.lambda_max;
  out.r0 = snapshot.r0_hat;
  out.movement = trajectory.distances.back();
  out.movement_ratio = out.movement * out.lambda_min / (3.0 * out.k_hat * out.r0);
  out.exact_expectation = expected_sketch_error(jac_t, w_t, p0, s);
  out.report.empirical_error = moments.mean;
  out.report.standard_error = moments.standard_error();
  out.report.closed_form_or_bound =
      linearized_error_bound(s, out.k_hat, snapshot.theta0, capital_F(snapshot.jacobian),
                             out.r0, out.lambda_min);
  out.report.kind = BoundKind::kUpperBound;
  out.report.trials = mask_trials;
  return out;
}

NtkRunResult run_ntk_experiment(const NtkRunConfig& config) {
  if (config.examples < 1) throw DimensionError("need at least one example");
  RngStream input_rng(config.seed, kStreamInputs);
  RngStream label_rng(config.seed, kStreamLabels);
  RngStream theta_rng(config.seed, kStreamTheta);
  RngStream mask_rng(config.seed, kStreamMasks);

  Eigen::MatrixXd raw(config.input_dim, config.examples);
  for (Index e = 0; e < config.examples; ++e) {
    for (Index j = 0; j < config.input_dim; ++j) raw(j, e) = input_rng.normal();
  }
  const DataMatrix inputs(std::move(raw));
  const Eigen::VectorXd labels =
      gen_normal_vector(config.examples * config.output_dim, 1.0, label_rng);
  const TinyMLP model = TinyMLP::initialize(config.input_dim, config.width, config.output_dim,
                                            config.activation, theta_rng);

  NtkSnapshot snap = take_snapshot(model, inputs, labels);
  const double eta0 = config.eta0 > 0.0 ? config.eta0 : snap.critical_learning_rate();
  const LinearizedTrajectory traj = train_linearized_gd(snap, eta0, config.steps);
  snap.k_hat = estimate_k_hat(model, inputs, traj);

  const Index params = model.parameter_count();
  const Index s = config.s > 0
                      ? config.s
                      : static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(params))));
  NtkRunResult result;
  result.error = ntk_error_report(model, inputs, snap, traj, s, config.mask_trials, mask_rng);
  result.parameter_count = params;
  result.relative_movement = traj.distances.back() / snap.theta0.norm();
  return result;
}

}  // namespace sketchprune::ntk
