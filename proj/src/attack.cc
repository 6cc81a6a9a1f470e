#include "lidartraj/attack.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <unordered_map>

#include "lidartraj/errors.h"
#include "lidartraj/kdtree.h"

namespace lidartraj {

namespace {

double Sign(double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); }

bool HasTranslation(PerturbationMode m) {
  return m == PerturbationMode::kTranslation || m == PerturbationMode::kFull;
}
bool HasRotation(PerturbationMode m) {
  return m == PerturbationMode::kRotation || m == PerturbationMode::kFull;
}

// Squared l2 norm of a - b over handles where an empty handle means 0.
// Returns an empty Var when every handle is empty.
template <std::size_t K>
Var SquaredDiff(const std::array<Var, K>& a, const std::array<Var, K>& b) {
  std::vector<Var> sq;
  for (std::size_t k = 0; k < K; ++k) {
    Var d;
    if (a[k].valid() && b[k].valid()) {
      d = a[k] - b[k];
    } else if (a[k].valid()) {
      d = a[k];
    } else if (b[k].valid()) {
      d = b[k];
    } else {
      continue;
    }
    sq.push_back(d * d);
  }
  if (sq.empty()) return Var();
  return Sum(sq);
}

// (sum_n |x_n|^p)^(1/p) given squared norms |x_n|^2.
Var PNormOfNorms(const std::vector<Var>& squared, double p) {
  std::vector<Var> powered;
  powered.reserve(squared.size());
  for (const Var& s : squared) powered.push_back(p == 2.0 ? s : Pow(s, 0.5 * p));
  const Var total = Sum(powered);
  return p == 2.0 ? Sqrt(total) : Pow(total, 1.0 / p);
}

double PNormOfNormsValue(const std::vector<double>& squared, double p) {
  double total = 0.0;
  for (double s : squared) total += p == 2.0 ? s : std::pow(s, 0.5 * p);
  return p == 2.0 ? std::sqrt(total) : std::pow(total, 1.0 / p);
}

void CheckP(double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw ArgumentError("norm order p must be >= 1");
}

}  // namespace

const char* RegularizerName(Regularizer r) {
  switch (r) {
    case Regularizer::kNone: return "none";
    case Regularizer::kSmoothness: return "smoothness";
    case Regularizer::kLp: return "lp";
    case Regularizer::kChamfer: return "chamfer";
  }
  return "?";
}

Regularizer ParseRegularizer(const std::string& name) {
  if (name == "none") return Regularizer::kNone;
  if (name == "smoothness") return Regularizer::kSmoothness;
  if (name == "lp") return Regularizer::kLp;
  if (name == "chamfer") return Regularizer::kChamfer;
  throw ArgumentError("unknown regularizer '" + name + "'");
}

void AttackConfig::Validate() const {
  if (!(eps_t > 0.0) || !(eps_R > 0.0)) throw ArgumentError("attack budgets must be positive");
  if (!(alpha_t > 0.0) || !(alpha_R > 0.0)) throw ArgumentError("step sizes must be positive");
  if (iters < 0) throw ArgumentError("iteration count must be non-negative");
  if (lambda_s < 0.0 || lambda_d < 0.0 || lambda_t < 0.0 || lambda_R < 0.0) {
    throw ArgumentError("regularizer weights must be non-negative");
  }
  CheckP(p);
}

Perturbation ProjectLinf(const Perturbation& delta, double eps_t, double eps_R) {
  Perturbation out = delta;
  for (Vec3& t : out.t_tilde) t = t.cwiseMax(-eps_t).cwiseMin(eps_t);
  for (Mat3& R : out.R_tilde) R = R.cwiseMax(-eps_R).cwiseMin(eps_R);
  return out;
}

std::vector<Vec3> PolyEval(const PolyCoeffs& beta, int N) {
  if (N < 2) throw ArgumentError("poly_eval needs N >= 2");
  std::vector<Vec3> out(N);
  for (int n = 0; n < N; ++n) {
    const double s = static_cast<double>(n) / (N - 1);
    const Eigen::Vector4d basis(1.0, s, s * s, s * s * s);
    out[n] = beta.transpose() * basis;
  }
  return out;
}

Var Smoothness(const PerturbationVars& delta, double lambda_t, double lambda_R, double p,
               Tape& tape) {
  CheckP(p);
  std::vector<Var> dt, dR;
  for (std::size_t n = 1; n < delta.t.size(); ++n) {
    const Var s = SquaredDiff(delta.t[n], delta.t[n - 1]);
    if (s.valid()) dt.push_back(s);
  }
  for (std::size_t n = 1; n < delta.R.size(); ++n) {
    const Var s = SquaredDiff(delta.R[n], delta.R[n - 1]);
    if (s.valid()) dR.push_back(s);
  }
  std::vector<Var> terms;
  if (!dt.empty() && lambda_t != 0.0) terms.push_back(lambda_t * PNormOfNorms(dt, p));
  if (!dR.empty() && lambda_R != 0.0) terms.push_back(lambda_R * PNormOfNorms(dR, p));
  if (terms.empty()) return tape.Constant(0.0);
  return Sum(terms);
}

double SmoothnessValue(const Perturbation& delta, double lambda_t, double lambda_R, double p) {
  CheckP(p);
  std::vector<double> dt, dR;
  for (std::size_t n = 1; n < delta.t_tilde.size(); ++n) {
    dt.push_back((delta.t_tilde[n] - delta.t_tilde[n - 1]).squaredNorm());
  }
  for (std::size_t n = 1; n < delta.R_tilde.size(); ++n) {
    dR.push_back((delta.R_tilde[n] - delta.R_tilde[n - 1]).squaredNorm());
  }
  double total = 0.0;
  if (!dt.empty()) total += lambda_t * PNormOfNormsValue(dt, p);
  if (!dR.empty()) total += lambda_R * PNormOfNormsValue(dR, p);
  return total;
}

Var LpDistance(std::span<const Vec3> clean, DiffCloud& perturbed, double p) {
  CheckP(p);
  if (clean.size() != perturbed.size()) {
    throw ArgumentError("lp_distance: point counts differ (" + std::to_string(clean.size()) +
                        " vs " + std::to_string(perturbed.size()) + ")");
  }
  if (clean.empty()) return perturbed.tape().Constant(0.0);
  std::vector<Var> sq;
  sq.reserve(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const auto& q = perturbed.node(i);
    std::array<Var, 3> d;
    for (int k = 0; k < 3; ++k) d[k] = q[k] - clean[i][k];
    sq.push_back(Dot(d, d));
  }
  std::vector<Var> powered;
  powered.reserve(sq.size());
  for (const Var& s : sq) powered.push_back(p == 2.0 ? s : Pow(s, 0.5 * p));
  const Var mean = Sum(powered) / static_cast<double>(clean.size());
  return p == 2.0 ? Sqrt(mean) : Pow(mean, 1.0 / p);
}

double LpDistanceValue(std::span<const Vec3> clean, std::span<const Vec3> perturbed, double p) {
  CheckP(p);
  if (clean.size() != perturbed.size()) {
    throw ArgumentError("lp_distance: point counts differ (" + std::to_string(clean.size()) +
                        " vs " + std::to_string(perturbed.size()) + ")");
  }
  if (clean.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double s = (perturbed[i] - clean[i]).squaredNorm();
    total += p == 2.0 ? s : std::pow(s, 0.5 * p);
  }
  const double mean = total / static_cast<double>(clean.size());
  return p == 2.0 ? std::sqrt(mean) : std::pow(mean, 1.0 / p);
}

double LpDistanceValue(const Sweep& clean, const Sweep& perturbed, double p) {
  const auto a = clean.Flatten(), b = perturbed.Flatten();
  return LpDistanceValue(a, b, p);
}

Var Chamfer(std::span<const Vec3> clean, DiffCloud& perturbed) {
  if (clean.empty() || perturbed.size() == 0) throw ArgumentError("chamfer: empty point cloud");
  const KdTree clean_tree(clean);
  const KdTree pert_tree(perturbed.values());
  auto dist = [&](std::size_t j, const Vec3& c) {
    const auto& q = perturbed.node(j);
    std::array<Var, 3> d;
    for (int k = 0; k < 3; ++k) d[k] = q[k] - c[k];
    return Sqrt(Dot(d, d));
  };
  std::vector<Var> forward, backward;
  forward.reserve(clean.size());
  for (const Vec3& c : clean) forward.push_back(dist(pert_tree.Nearest(c), c));
  backward.reserve(perturbed.size());
  for (std::size_t j = 0; j < perturbed.size(); ++j) {
    backward.push_back(dist(j, clean[clean_tree.Nearest(perturbed.value(j))]));
  }
  return Sum(forward) / static_cast<double>(forward.size()) +
         Sum(backward) / static_cast<double>(backward.size());
}

double ChamferValue(std::span<const Vec3> clean, std::span<const Vec3> perturbed) {
  if (clean.empty() || perturbed.empty()) throw ArgumentError("chamfer: empty point cloud");
  const KdTree clean_tree(clean);
  const KdTree pert_tree(perturbed);
  double f = 0.0, b = 0.0;
  for (const Vec3& c : clean) f += (perturbed[pert_tree.Nearest(c)] - c).norm();
  for (const Vec3& q : perturbed) b += (clean[clean_tree.Nearest(q)] - q).norm();
  return f / clean.size() + b / perturbed.size();
}

double ChamferValue(const Sweep& clean, const Sweep& perturbed) {
  const auto a = clean.Flatten(), b = perturbed.Flatten();
  return ChamferValue(a, b);
}

namespace {

double RegularizerWeight(const AttackConfig& cfg) {
  return cfg.regularizer == Regularizer::kSmoothness ? cfg.lambda_s : cfg.lambda_d;
}

// The unweighted regularizer selected by cfg, or nothing when it is off or
// has zero weight.
std::optional<Var> RegularizerTerm(const PerturbationVars& delta, DiffCloud& cloud,
                                   std::span<const Vec3> clean, const AttackConfig& cfg) {
  if (cfg.regularizer == Regularizer::kNone || RegularizerWeight(cfg) == 0.0) return std::nullopt;
  switch (cfg.regularizer) {
    case Regularizer::kSmoothness:
      return Smoothness(delta, cfg.lambda_t, cfg.lambda_R, cfg.p, cloud.tape());
    case Regularizer::kLp:
      return LpDistance(clean, cloud, cfg.p);
    case Regularizer::kChamfer:
      return Chamfer(clean, cloud);
    case Regularizer::kNone:
      break;
  }
  return std::nullopt;
}

}  // namespace

Var AttackObjective(Var loss, const PerturbationVars& delta, DiffCloud& cloud,
                    std::span<const Vec3> clean, const AttackConfig& cfg) {
  const auto reg = RegularizerTerm(delta, cloud, clean, cfg);
  if (!reg) return loss;
  return loss + RegularizerWeight(cfg) * *reg;
}

AttackProblem::AttackProblem(Sweep distorted, InterpolatedTrack track, std::vector<Box3D> labels,
                             AttackConfig cfg, DetectorConfig detector)
    : distorted_(std::move(distorted)),
      track_(std::move(track)),
      labels_(std::move(labels)),
      cfg_(cfg),
      detector_(std::move(detector)) {
  cfg_.Validate();
  detector_.Validate();
  if (distorted_.reference != SweepFrame::kCaptureFrames) {
    throw ArgumentError("attack expects a distorted sweep in capture frames");
  }
  if (distorted_.packet_count() != track_.size()) {
    throw ArgumentError("attack: packet count " + std::to_string(distorted_.packet_count()) +
                        " differs from track length " + std::to_string(track_.size()));
  }
  if (cfg_.mode == PerturbationMode::kPolynomial && track_.size() < 2) {
    throw ArgumentError("polynomial attack needs N >= 2");
  }
  clean_ = Compensate(distorted_, track_).Flatten();
}

AttackProblem::Recorded AttackProblem::Record(const Perturbation& delta, Tape& tape) const {
  const int n_packets = N();
  if (delta.size() != n_packets) {
    throw ArgumentError("perturbation length differs from the track length");
  }
  Recorded rec;
  PerturbationVars vars;
  vars.t.resize(n_packets);
  vars.R.resize(n_packets);
  const PerturbationMode mode = cfg_.mode;
  if (mode == PerturbationMode::kPolynomial) {
    std::array<Var, 12> beta;
    for (int i = 0; i < 4; ++i) {
      for (int k = 0; k < 3; ++k) {
        beta[3 * i + k] = tape.Leaf(delta.beta(i, k));
        rec.leaves.push_back(beta[3 * i + k]);
        rec.leaf_slot.push_back(3 * i + k);
      }
    }
    for (int n = 0; n < n_packets; ++n) {
      const double s = static_cast<double>(n) / (n_packets - 1);
      const std::array<double, 4> basis{1.0, s, s * s, s * s * s};
      for (int k = 0; k < 3; ++k) {
        const std::array<Var, 4> col{beta[k], beta[3 + k], beta[6 + k], beta[9 + k]};
        vars.t[n][k] = Affine(col, basis, 0.0);
      }
    }
  } else {
    for (int n = 0; n < n_packets; ++n) {
      if (HasTranslation(mode)) {
        for (int k = 0; k < 3; ++k) {
          vars.t[n][k] = tape.Leaf(delta.t_tilde[n][k]);
          rec.leaves.push_back(vars.t[n][k]);
          rec.leaf_slot.push_back(12 * n + k);
        }
      }
      if (HasRotation(mode)) {
        for (int e = 0; e < 9; ++e) {
          vars.R[n][e] = tape.Leaf(delta.R_tilde[n](e / 3, e % 3));
          rec.leaves.push_back(vars.R[n][e]);
          rec.leaf_slot.push_back(12 * n + 3 + e);
        }
      }
    }
  }
  DiffCloud cloud = SweepAsFunction(distorted_, track_, vars, tape);
  rec.detector_loss = DetectorLoss(cloud, labels_, cfg_.branch, detector_);
  rec.regularizer = RegularizerTerm(vars, cloud, clean_, cfg_);
  rec.objective = rec.regularizer
                      ? rec.detector_loss + RegularizerWeight(cfg_) * *rec.regularizer
                      : rec.detector_loss;
  return rec;
}

GradientSet AttackProblem::Gradient(const Recorded& rec, const Gradients& grads) const {
  GradientSet g;
  g.d_delta.setZero(N(), 12);
  const bool poly = cfg_.mode == PerturbationMode::kPolynomial;
  for (std::size_t i = 0; i < rec.leaves.size(); ++i) {
    const double v = grads[rec.leaves[i]];
    const int slot = rec.leaf_slot[i];
    if (poly) {
      g.d_beta(slot / 3, slot % 3) = v;
    } else {
      g.d_delta(slot / 12, slot % 12) = v;
    }
  }
  return g;
}

namespace {

Gradients BackwardAt(const Tape& tape, Var objective, int iteration) {
  try {
    return tape.Backward(objective);
  } catch (const NumericError& e) {
    throw NumericError("attack iteration " + std::to_string(iteration) + ": " + e.what());
  }
}

double RegularizerValue(const AttackProblem& problem, const Perturbation& delta) {
  const AttackConfig& cfg = problem.config();
  switch (cfg.regularizer) {
    case Regularizer::kNone:
      return 0.0;
    case Regularizer::kSmoothness:
      return SmoothnessValue(delta, cfg.lambda_t, cfg.lambda_R, cfg.p);
    case Regularizer::kLp:
    case Regularizer::kChamfer: {
      const auto pert = Compensate(problem.distorted(), problem.track(), &delta).Flatten();
      return cfg.regularizer == Regularizer::kLp ? LpDistanceValue(problem.clean(), pert, cfg.p)
                                                 : ChamferValue(problem.clean(), pert);
    }
  }
  return 0.0;
}

template <class Step>
AttackResult RunPgd(const AttackProblem& problem, Perturbation delta, Step&& step) {
  const AttackConfig& cfg = problem.config();
  AttackResult out;
  Tape tape;
  for (int it = 0; it <= cfg.iters; ++it) {
    tape.Clear();
    const auto rec = problem.Record(delta, tape);
    out.loss_trace.push_back(rec.detector_loss.value());
    out.objective_trace.push_back(rec.objective.value());
    if (!std::isfinite(rec.objective.value())) {
      throw NumericError("attack iteration " + std::to_string(it) + ": non-finite objective");
    }
    if (it == cfg.iters) break;
    const Gradients grads = BackwardAt(tape, rec.objective, it);
    const GradientSet g = problem.Gradient(rec, grads);
    if (!g.d_delta.allFinite() || !g.d_beta.allFinite()) {
      throw NumericError("attack iteration " + std::to_string(it) + ": non-finite gradient");
    }
    step(delta, g);
  }
  if (cfg.regularizer != Regularizer::kNone) out.regularizer = RegularizerValue(problem, delta);
  out.delta = std::move(delta);
  return out;
}

}  // namespace

AttackResult PgdAttack(const AttackProblem& problem) {
  const AttackConfig& cfg = problem.config();
  if (cfg.mode == PerturbationMode::kPolynomial) {
    throw ArgumentError("pgd_attack handles translation, rotation and full modes");
  }
  const bool use_t = HasTranslation(cfg.mode), use_R = HasRotation(cfg.mode);
  return RunPgd(problem, Perturbation::Zero(problem.N(), cfg.mode),
                [&](Perturbation& delta, const GradientSet& g) {
                  for (int n = 0; n < problem.N(); ++n) {
                    if (use_t) {
                      for (int k = 0; k < 3; ++k) {
                        delta.t_tilde[n][k] -= cfg.alpha_t * Sign(g.d_delta(n, k));
                      }
                    }
                    if (use_R) {
                      for (int e = 0; e < 9; ++e) {
                        delta.R_tilde[n](e / 3, e % 3) -= cfg.alpha_R * Sign(g.d_delta(n, 3 + e));
                      }
                    }
                  }
                  delta = ProjectLinf(delta, cfg.eps_t, cfg.eps_R);
                });
}

AttackResult PgdPolyAttack(const AttackProblem& problem) {
  const AttackConfig& cfg = problem.config();
  if (cfg.mode != PerturbationMode::kPolynomial) {
    throw ArgumentError("pgd_poly_attack needs polynomial mode");
  }
  const int N = problem.N();
  return RunPgd(problem, Perturbation::Zero(N, cfg.mode),
                [&](Perturbation& delta, const GradientSet& g) {
                  for (int i = 0; i < 4; ++i) {
                    for (int k = 0; k < 3; ++k) {
                      delta.beta(i, k) -= cfg.alpha_t * Sign(g.d_beta(i, k));
                    }
                  }
                  auto t = PolyEval(delta.beta, N);
                  double peak = 0.0;
                  for (const Vec3& v : t) peak = std::max(peak, v.cwiseAbs().maxCoeff());
                  if (peak > cfg.eps_t) {
                    delta.beta *= cfg.eps_t / peak;
                    t = PolyEval(delta.beta, N);
                    // Guard against the rescaled maximum rounding above eps_t.
                    for (Vec3& v : t) v = v.cwiseMax(-cfg.eps_t).cwiseMin(cfg.eps_t);
                  }
                  delta.t_tilde = std::move(t);
                });
}

AttackResult RunAttack(const AttackProblem& problem) {
  return problem.config().mode == PerturbationMode::kPolynomial ? PgdPolyAttack(problem)
                                                                : PgdAttack(problem);
}

Perturbation RandomTrajectoryPerturbation(PerturbationMode mode, int N, double sigma_t,
                                          double sigma_R, double eps_t, double eps_R,
                                          std::uint64_t seed) {
  if (mode == PerturbationMode::kPolynomial) {
    throw ArgumentError("random attack supports translation, rotation and full modes");
  }
  if (sigma_t < 0.0 || sigma_R < 0.0) throw ArgumentError("noise sigma must be non-negative");
  Perturbation delta = Perturbation::Zero(N, mode);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int n = 0; n < N; ++n) {
    if (HasTranslation(mode)) {
      for (int k = 0; k < 3; ++k) delta.t_tilde[n][k] = sigma_t * unit(rng);
    }
    if (HasRotation(mode)) {
      for (int e = 0; e < 9; ++e) delta.R_tilde[n](e / 3, e % 3) = sigma_R * unit(rng);
    }
  }
  return ProjectLinf(delta, eps_t, eps_R);
}

std::vector<Vec3> RandomPointNoise(std::span<const Vec3> points, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw ArgumentError("noise sigma must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<Vec3> out(points.begin(), points.end());
  for (Vec3& p : out) {
    for (int k = 0; k < 3; ++k) p[k] += sigma * unit(rng);
  }
  return out;
}

PointAttackResult CoordinateAttack(std::span<const Vec3> points, std::span<const Box3D> labels,
                                   double eps_xyz, const AttackConfig& cfg,
                                   const DetectorConfig& detector) {
  cfg.Validate();
  if (!(eps_xyz >= 0.0)) throw ArgumentError("eps_xyz must be non-negative");
  PointAttackResult out;
  std::vector<Vec3> offset(points.size(), Vec3::Zero());
  Tape tape;
  for (int it = 0; it <= cfg.iters; ++it) {
    tape.Clear();
    std::vector<Vec3> current(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) current[i] = points[i] + offset[i];
    auto leaves = std::make_shared<std::vector<std::pair<std::size_t, std::array<Var, 3>>>>();
    DiffCloud cloud(&tape, current, [&tape, leaves](std::size_t i, const Vec3& v) {
      std::array<Var, 3> xyz{tape.Leaf(v[0]), tape.Leaf(v[1]), tape.Leaf(v[2])};
      leaves->emplace_back(i, xyz);
      return xyz;
    });
    const Var loss = DetectorLoss(cloud, labels, cfg.branch, detector);
    out.loss_trace.push_back(loss.value());
    if (it == cfg.iters) break;
    const Gradients grads = BackwardAt(tape, loss, it);
    for (const auto& [i, xyz] : *leaves) {
      for (int k = 0; k < 3; ++k) {
        const double g = grads[xyz[k]];
        if (!std::isfinite(g)) {
          throw NumericError("coordinate attack iteration " + std::to_string(it) +
                             ": non-finite gradient");
        }
        offset[i][k] = std::clamp(offset[i][k] - cfg.alpha_t * Sign(g), -eps_xyz, eps_xyz);
      }
    }
  }
  out.points.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out.points[i] = points[i] + offset[i];
  return out;
}

}  // namespace lidartraj
