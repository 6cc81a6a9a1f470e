#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "lidartraj/errors.h"
#include "lidartraj/sweep.h"
#include "test_util.h"

namespace lidartraj {
namespace {

using testing::Gen;

Vec3 AtAzimuth(double deg, double r = 10.0, double z = 0.0) {
  const double a = deg * M_PI / 180.0;
  return Vec3(r * std::cos(a), r * std::sin(a), z);
}

TEST_CASE("partition_packets by quadrant") {
  const std::vector<Vec3> pts = {AtAzimuth(10), AtAzimuth(100), AtAzimuth(190), AtAzimuth(280)};
  const auto packets = PartitionPackets(pts, 4);
  REQUIRE(packets.size() == 4);
  for (int n = 0; n < 4; ++n) {
    REQUIRE(packets[n].size() == 1);
    CHECK(packets[n].points[0] == pts[n]);
    CHECK(packets[n].frame_index == n);
    CHECK(packets[n].azimuth_lo == doctest::Approx(90.0 * n));
  }
  std::vector<Vec3> zero(7, Vec3(3, 0, 1));
  const auto one = PartitionPackets(zero, 100);
  CHECK(one[0].size() == 7);
  for (int n = 1; n < 100; ++n) CHECK(one[n].size() == 0);
  CHECK(PartitionPackets({}, 5).size() == 5);
  CHECK_THROWS_AS(PartitionPackets(pts, 0), ArgumentError);
}

TEST_CASE("partition_packets honours start_azimuth") {
  const std::vector<Vec3> pts = {AtAzimuth(5), AtAzimuth(50)};
  const auto packets = PartitionPackets(pts, 4, 45.0);
  CHECK(packets[3].size() == 1);  // 5 deg lies in [315, 405)
  CHECK(packets[0].size() == 1);
}

TEST_CASE("property: partition counts match a histogram and keep every point") {
  Gen g(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int N = g.Int(1, 200);
    std::vector<Vec3> pts;
    std::vector<int> hist(N, 0);
    for (int i = 0; i < 500; ++i) {
      const double az = g.Uniform(0.0, 360.0);
      const Vec3 p = AtAzimuth(az, g.Uniform(1, 50), g.Uniform(-2, 2));
      pts.push_back(p);
      // Bin from the point itself, the way a reader of the format would.
      double deg = std::atan2(p.y(), p.x()) * 180.0 / M_PI;
      if (deg < 0) deg += 360.0;
      hist[std::min(N - 1, static_cast<int>(deg / (360.0 / N)))]++;
    }
    const auto packets = PartitionPackets(pts, N);
    std::size_t total = 0;
    for (int n = 0; n < N; ++n) {
      CHECK(static_cast<int>(packets[n].size()) == hist[n]);
      total += packets[n].size();
      for (const Vec3& p : packets[n].points) {
        const double az = AzimuthDegrees(p);
        CHECK(az >= packets[n].azimuth_lo - 1e-9);
        CHECK(az < packets[n].azimuth_hi + 1e-9);
      }
    }
    CHECK(total == pts.size());
  }
}

TEST_CASE("distort with a stationary vehicle is the identity") {
  Gen g(22);
  const Sweep s = testing::SweepAtA(g.Cloud(300, 40.0), 10);
  const Pose a(Vec3(1, 2, 3), Quaternion::FromAxisAngle(Vec3::UnitZ(), 0.3));
  const Sweep d = Distort(s, InterpolateTrack(a, a, 10));
  CHECK(d.reference == SweepFrame::kCaptureFrames);
  for (int n = 0; n < 10; ++n) {
    for (std::size_t i = 0; i < s.packets[n].size(); ++i) {
      CHECK((d.packets[n].points[i] - s.packets[n].points[i]).norm() < 1e-12);
    }
  }
}

TEST_CASE("distort under pure x motion shifts packet n by -1.5 n / N") {
  Gen g(23);
  const int N = 8;
  const Sweep s = testing::SweepAtA(g.Cloud(200, 30.0), N);
  const Pose a, b(Vec3(1.5, 0, 0), Quaternion());
  const Sweep d = Distort(s, InterpolateTrack(a, b, N));
  for (int n = 0; n < N; ++n) {
    for (std::size_t i = 0; i < s.packets[n].size(); ++i) {
      const Vec3 expect = s.packets[n].points[i] - Vec3(1.5 * n / N, 0, 0);
      CHECK((d.packets[n].points[i] - expect).norm() < 1e-12);
    }
  }
}

TEST_CASE("compensate inverts distort and adds translation perturbations") {
  Gen g(24);
  const int N = 20;
  const Sweep s = testing::SweepAtA(g.Cloud(400, 50.0), N);
  const Pose a = g.RandomPose(10.0), b = g.NearbyPose(a, 0.5);
  const InterpolatedTrack track = InterpolateTrack(a, b, N);
  const Sweep d = Distort(s, track);
  const Sweep back = Compensate(d, track);
  CHECK(back.reference == SweepFrame::kKeyframeA);
  const auto p0 = s.Flatten(), p1 = back.Flatten();
  for (std::size_t i = 0; i < p0.size(); ++i) CHECK((p0[i] - p1[i]).norm() < 1e-9);

  Perturbation delta = Perturbation::Zero(N, PerturbationMode::kTranslation);
  for (Vec3& t : delta.t_tilde) t = Vec3(0.1, 0, 0);
  const auto shifted = Compensate(d, track, &delta).Flatten();
  for (std::size_t i = 0; i < p1.size(); ++i) {
    CHECK((shifted[i] - p1[i] - Vec3(0.1, 0, 0)).norm() < 1e-12);
  }

  CHECK_THROWS_AS(Compensate(s, track), ArgumentError);
  CHECK_THROWS_AS(Distort(d, track), ArgumentError);
  CHECK_THROWS_AS(Compensate(d, InterpolateTrack(a, b, N + 1)), ArgumentError);
  const Perturbation short_delta = Perturbation::Zero(N - 1, PerturbationMode::kFull);
  CHECK_THROWS_AS(Compensate(d, track, &short_delta), ArgumentError);
}

TEST_CASE("property: round trip over random trajectories preserves points and counts") {
  Gen g(25);
  for (int trial = 0; trial < 100; ++trial) {
    const int N = g.Int(2, 150);
    const Sweep s = testing::SweepAtA(g.Cloud(g.Int(0, 300), 60.0), N);
    const Pose a = g.RandomPose(100.0), b = g.NearbyPose(a, 0.5);
    const InterpolatedTrack track = InterpolateTrack(a, b, N);
    const Sweep d = Distort(s, track);
    const Sweep back = Compensate(d, track);
    double err = 0.0;
    for (int n = 0; n < N; ++n) {
      REQUIRE(d.packets[n].size() == s.packets[n].size());
      REQUIRE(back.packets[n].size() == s.packets[n].size());
      for (std::size_t i = 0; i < s.packets[n].size(); ++i) {
        err = std::max(err, (back.packets[n].points[i] - s.packets[n].points[i]).norm());
      }
    }
    CHECK(err < 1e-6);
  }
}

TEST_CASE("property: perturbing packet k moves only packet k") {
  Gen g(26);
  const int N = 12;
  const Sweep s = testing::SweepAtA(g.Cloud(500, 40.0), N);
  const Pose a = g.RandomPose(5.0), b = g.NearbyPose(a, 0.5);
  const InterpolatedTrack track = InterpolateTrack(a, b, N);
  const Sweep d = Distort(s, track);
  const Sweep base = Compensate(d, track);
  for (int k = 0; k < N; ++k) {
    Perturbation delta = Perturbation::Zero(N, PerturbationMode::kFull);
    delta.t_tilde[k] = g.Vector(0.1);
    delta.R_tilde[k] = Mat3::Random() * 0.01;
    const Sweep out = Compensate(d, track, &delta);
    for (int n = 0; n < N; ++n) {
      for (std::size_t i = 0; i < out.packets[n].size(); ++i) {
        const bool same = out.packets[n].points[i] == base.packets[n].points[i];
        if (n != k) CHECK(same);
      }
    }
  }
}

TEST_CASE("sweep_as_function values and gradient structure") {
  Gen g(27);
  const int N = 3;
  const Sweep s = testing::SweepAtA(g.Cloud(30, 20.0), N);
  const Pose a = g.RandomPose(5.0), b = g.NearbyPose(a, 0.5);
  const InterpolatedTrack track = InterpolateTrack(a, b, N);
  const Sweep d = Distort(s, track);

  Tape tape;
  PerturbationVars vars;
  vars.t.resize(N);
  vars.R.resize(N);
  for (int n = 0; n < N; ++n) {
    for (auto& v : vars.t[n]) v = tape.Leaf(0.0);
    for (auto& v : vars.R[n]) v = tape.Leaf(0.0);
  }
  DiffCloud cloud = SweepAsFunction(d, track, vars, tape);
  const auto plain = Compensate(d, track).Flatten();
  REQUIRE(cloud.size() == plain.size());
  for (std::size_t i = 0; i < plain.size(); ++i) CHECK(cloud.value(i) == plain[i]);

  const auto raw = d.Flatten();
  std::size_t i = 0;
  for (int n = 0; n < N; ++n) {
    for (std::size_t j = 0; j < d.packets[n].size(); ++j, ++i) {
      for (int r = 0; r < 3; ++r) {
        const Gradients grads = tape.Backward(cloud.node(i)[r]);
        for (int m = 0; m < N; ++m) {
          for (int c = 0; c < 3; ++c) {
            CHECK(grads[vars.t[m][c]] == (m == n && c == r ? 1.0 : 0.0));
          }
          for (int e = 0; e < 9; ++e) {
            // d(R p + t)_r / dR_{row, col} = p_col when row == r.
            const double expect = (m == n && e / 3 == r) ? raw[i][e % 3] : 0.0;
            CHECK(grads[vars.R[m][e]] == doctest::Approx(expect).epsilon(1e-12));
          }
        }
      }
    }
  }
}

TEST_CASE("sweep_as_function rotation gradients match finite differences") {
  Gen g(28);
  const int N = 4;
  const Sweep s = testing::SweepAtA(g.Cloud(40, 20.0), N);
  const Pose a = g.RandomPose(5.0), b = g.NearbyPose(a, 0.5);
  const InterpolatedTrack track = InterpolateTrack(a, b, N);
  const Sweep d = Distort(s, track);
  const std::vector<double> w = {0.3, -1.2, 0.7};

  // Scalar probe: sum over points of w . p.
  auto probe = [&](std::span<const double> x, std::vector<double>* grad) {
    Tape tape;
    PerturbationVars vars;
    vars.t.resize(N);
    vars.R.resize(N);
    std::vector<Var> leaves;
    for (int n = 0; n < N; ++n) {
      for (int e = 0; e < 9; ++e) {
        vars.R[n][e] = tape.Leaf(x[n * 9 + e]);
        leaves.push_back(vars.R[n][e]);
      }
    }
    DiffCloud cloud = SweepAsFunction(d, track, vars, tape);
    std::vector<Var> terms;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      for (int r = 0; r < 3; ++r) terms.push_back(cloud.node(i)[r] * w[r]);
    }
    const Var f = Sum(terms);
    if (grad) *grad = tape.Backward(f).Of(leaves);
    return f.value();
  };
  std::vector<double> x(N * 9);
  for (double& v : x) v = g.Uniform(-0.01, 0.01);
  const GradCheckResult r = GradCheck(probe, x, 1e-5);
  CHECK(r.max_rel_error < 1e-6);
  CHECK(r.kinks.empty());
}

}  // namespace
}  // namespace lidartraj
