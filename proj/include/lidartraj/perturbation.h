#ifndef LIDARTRAJ_PERTURBATION_H_
#define LIDARTRAJ_PERTURBATION_H_

#include <string>
#include <vector>

#include <Eigen/Core>

#include "lidartraj/geometry.h"

namespace lidartraj {

enum class PerturbationMode { kTranslation, kRotation, kFull, kPolynomial };

const char* ModeName(PerturbationMode mode);
PerturbationMode ParseMode(const std::string& name);

using PolyCoeffs = Eigen::Matrix<double, 4, 3>;

// Additive per-packet perturbation of the compensation transforms T^A_n:
// the compensated transform is (R + R_tilde[n], t + t_tilde[n]). For the
// polynomial mode t_tilde is generated from beta and R_tilde stays zero.
struct Perturbation {
  PerturbationMode mode = PerturbationMode::kFull;
  std::vector<Vec3> t_tilde;
  std::vector<Mat3> R_tilde;
  PolyCoeffs beta = PolyCoeffs::Zero();

  static Perturbation Zero(int N, PerturbationMode mode);

  int size() const { return static_cast<int>(t_tilde.size()); }
  double MaxAbsTranslation() const;
  double MaxAbsRotation() const;
};

}  // namespace lidartraj

#endif  // LIDARTRAJ_PERTURBATION_H_
