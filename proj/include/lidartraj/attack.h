#ifndef LIDARTRAJ_ATTACK_H_
#define LIDARTRAJ_ATTACK_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lidartraj/autodiff.h"
#include "lidartraj/box.h"
#include "lidartraj/detector.h"
#include "lidartraj/perturbation.h"
#include "lidartraj/sweep.h"

namespace lidartraj {

enum class Regularizer { kNone, kSmoothness, kLp, kChamfer };
const char* RegularizerName(Regularizer r);
Regularizer ParseRegularizer(const std::string& name);

struct AttackConfig {
  double eps_t = 0.1;     // m
  double eps_R = 0.01;    // per rotation-matrix entry
  double alpha_t = 0.1;   // m per step
  double alpha_R = 0.01;  // per step
  int iters = 20;
  Branch branch = Branch::kClassification;
  PerturbationMode mode = PerturbationMode::kFull;
  Regularizer regularizer = Regularizer::kNone;
  double lambda_s = 0.0;  // weight of the smoothness term
  double lambda_d = 0.0;  // weight of the point-cloud distance term
  double lambda_t = 1.0;  // translation part of the smoothness term
  double lambda_R = 1.0;  // rotation part of the smoothness term
  double p = 2.0;
  std::uint64_t seed = 0;

  void Validate() const;
};

// d(objective)/d(delta) per packet as [t0 t1 t2 R00 R01 ... R22], and
// d(objective)/d(beta). Entries outside the active parameterization are 0.
struct GradientSet {
  Eigen::Matrix<double, Eigen::Dynamic, 12, Eigen::RowMajor> d_delta;
  PolyCoeffs d_beta = PolyCoeffs::Zero();
};

// Entrywise clamp of t_tilde to [-eps_t, eps_t] and R_tilde to [-eps_R, eps_R].
Perturbation ProjectLinf(const Perturbation& delta, double eps_t, double eps_R);

// t_tilde(n) = beta^T [1, s, s^2, s^3] with s = n / (N - 1).
std::vector<Vec3> PolyEval(const PolyCoeffs& beta, int N);

// Total variation of the perturbation along the sweep:
// lambda_t (sum_n |t(n) - t(n-1)|_2^p)^(1/p) + lambda_R (sum_n |R(n) - R(n-1)|_F^p)^(1/p).
// Empty handles count as zero.
Var Smoothness(const PerturbationVars& delta, double lambda_t, double lambda_R, double p,
               Tape& tape);
double SmoothnessValue(const Perturbation& delta, double lambda_t, double lambda_R, double p);

// (mean_i |p_i - p'_i|_2^p)^(1/p) over corresponding points.
Var LpDistance(std::span<const Vec3> clean, DiffCloud& perturbed, double p);
double LpDistanceValue(std::span<const Vec3> clean, std::span<const Vec3> perturbed, double p);
double LpDistanceValue(const Sweep& clean, const Sweep& perturbed, double p);

// Mean nearest-neighbour distance from clean to perturbed plus the reverse
// term. Correspondences are found on the current values and then frozen.
Var Chamfer(std::span<const Vec3> clean, DiffCloud& perturbed);
double ChamferValue(std::span<const Vec3> clean, std::span<const Vec3> perturbed);
double ChamferValue(const Sweep& clean, const Sweep& perturbed);

// loss + lambda_s * S(delta), loss + lambda_d * D(delta), or loss, per
// cfg.regularizer.
Var AttackObjective(Var loss, const PerturbationVars& delta, DiffCloud& cloud,
                    std::span<const Vec3> clean, const AttackConfig& cfg);

// One attack target: a distorted sweep, its trajectory and the labels to
// suppress. Records the objective as a function of the perturbation.
class AttackProblem {
 public:
  AttackProblem(Sweep distorted, InterpolatedTrack track, std::vector<Box3D> labels,
                AttackConfig cfg, DetectorConfig detector);

  struct Recorded {
    Var objective;
    Var detector_loss;
    std::optional<Var> regularizer;
    // Translation leaves then rotation leaves of each packet, or the 12 beta
    // coefficients (row-major) in polynomial mode. Inactive entries are absent.
    std::vector<Var> leaves;
    std::vector<int> leaf_slot;  // packet * 12 + entry, or 4 * 3 beta index
  };

  // Records the objective at `delta` on a fresh tape.
  Recorded Record(const Perturbation& delta, Tape& tape) const;
  GradientSet Gradient(const Recorded& rec, const Gradients& grads) const;

  const Sweep& distorted() const { return distorted_; }
  const InterpolatedTrack& track() const { return track_; }
  const std::vector<Box3D>& labels() const { return labels_; }
  const AttackConfig& config() const { return cfg_; }
  const DetectorConfig& detector() const { return detector_; }
  // Zero-perturbation compensated points, in packet order.
  const std::vector<Vec3>& clean() const { return clean_; }
  int N() const { return track_.size(); }

 private:
  Sweep distorted_;
  InterpolatedTrack track_;
  std::vector<Box3D> labels_;
  AttackConfig cfg_;
  DetectorConfig detector_;
  std::vector<Vec3> clean_;
};

struct AttackResult {
  Perturbation delta;
  // Detector term and full objective at delta^0 .. delta^iters.
  std::vector<double> loss_trace;
  std::vector<double> objective_trace;
  std::optional<double> regularizer;  // value at the final perturbation
};

// Signed-gradient PGD on the per-packet perturbation (translation, rotation
// or full mode). Throws NumericError naming the iteration on a non-finite
// gradient.
AttackResult PgdAttack(const AttackProblem& problem);
// PGD on the cubic coefficients beta, rescaling beta so that the induced
// max |t_tilde| stays within eps_t.
AttackResult PgdPolyAttack(const AttackProblem& problem);
// Dispatches on problem.config().mode.
AttackResult RunAttack(const AttackProblem& problem);

// Gaussian trajectory noise for translation, rotation or full mode, then
// clipped to the budget. Deterministic per seed.
Perturbation RandomTrajectoryPerturbation(PerturbationMode mode, int N, double sigma_t,
                                          double sigma_R, double eps_t, double eps_R,
                                          std::uint64_t seed);
// Gaussian noise added to every coordinate (not clipped).
std::vector<Vec3> RandomPointNoise(std::span<const Vec3> points, double sigma, std::uint64_t seed);

struct PointAttackResult {
  std::vector<Vec3> points;
  std::vector<double> loss_trace;
};

// PGD directly on the point coordinates of a compensated sweep, with step
// cfg.alpha_t, cfg.iters iterations and an l-inf clip of eps_xyz per axis.
PointAttackResult CoordinateAttack(std::span<const Vec3> points, std::span<const Box3D> labels,
                                   double eps_xyz, const AttackConfig& cfg,
                                   const DetectorConfig& detector);

}  // namespace lidartraj

#endif  // LIDARTRAJ_ATTACK_H_
