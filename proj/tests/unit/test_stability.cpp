#include <gtest/gtest.h>

#include "qgd/errors.hpp"
#include "qgd/stability.hpp"

using namespace qgd;

TEST(PairRelation, Inequalities) {
  EXPECT_EQ(pair_relation(1.0, 0.5), PairRelation::kBothNonnegative);
  EXPECT_EQ(pair_relation(1.0, -0.5), PairRelation::kQuantumDamped);
  EXPECT_EQ(pair_relation(1.0, -1.0), PairRelation::kQuantumDamped);
  EXPECT_EQ(pair_relation(-1.0, 0.5), PairRelation::kClassicalAndQuantum);
  EXPECT_EQ(pair_relation(0.5, -1.0), PairRelation::kQuantumOnly);
  EXPECT_EQ(pair_relation(-0.5, 1.0), PairRelation::kQuantumStabilized);
  EXPECT_EQ(pair_relation(-0.5, -1.0), PairRelation::kBothNegative);
  EXPECT_EQ(inequality(PairRelation::kQuantumOnly), "0 <= lambda < -alpha");
}

TEST(StabilityTensors, ConventionsDifferOnlyInQFactor) {
  const Potential v = Potential::henon_heiles(1.0);
  Vec x(2);
  x << 0.1, 0.2;
  StabilityOptions o;
  const StabilityTensors a = stability_tensors(v, 0.1, x, o);
  o.convention = QTildeConvention::kInverseMinusIdentity;
  const StabilityTensors b = stability_tensors(v, 0.1, x, o);
  EXPECT_LT((a.c_matrix - b.c_matrix).norm(), 1e-15);
  EXPECT_NEAR(a.q_factor, a.phi - 1, 1e-14);
  EXPECT_NEAR(b.q_factor, 1 / b.phi - 1, 1e-14);
  EXPECT_LT((b.v_matrix - a.c_matrix / a.phi).norm(), 1e-12);
}

TEST(StabilityTensors, GuardBand) {
  const Potential v = Potential::harmonic(1.0);
  Vec x(2);
  x << 1.0, 0.0;
  EXPECT_THROW(stability_tensors(v, 0.5, x), SeparatrixSingularity);
}

TEST(StabilityMap, FiveWellBasinsAndSymmetry) {
  const Potential v = Potential::five_well();
  const PlanarRegion r{-4, 4, -4, 4};
  const int n = 60;
  const StabilityMap m = stability_map(v, 12.5, r, n, n);
  EXPECT_EQ(connected_components(m, StabilityClass::kStable).size(), 5u);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const auto c = m.at(i, j).cls;
      EXPECT_EQ(c, m.at(n - 1 - i, j).cls);
      EXPECT_EQ(c, m.at(i, n - 1 - j).cls);
      EXPECT_EQ(c, m.at(j, i).cls);
      EXPECT_EQ(c, reclassify(m.at(i, j)));
    }
  EXPECT_FALSE(m.contour.empty());
}

TEST(StabilityMap, MarkOutsideShell) {
  const Potential v = Potential::harmonic(1.0);
  StabilityMapOptions o;
  o.mark_outside_shell = true;
  const StabilityMap m = stability_map(v, 1.0, {-3, 3, -3, 3}, 20, 20, o);
  EXPECT_EQ(m.at(0, 0).cls, StabilityClass::kOutsideShell);
  EXPECT_NE(m.at(10, 10).cls, StabilityClass::kOutsideShell);
}

TEST(Projector, TransverseToVelocity) {
  Vec v(2);
  v << 3.0, 4.0;
  const Mat p = projector(v);
  EXPECT_LT((p * v).norm(), 1e-14);
  bool unprojected = false;
  const Mat i = projector(Vec::Zero(2), &unprojected);
  EXPECT_TRUE(unprojected);
  EXPECT_LT((i - Mat::Identity(2, 2)).norm(), 1e-15);
}

TEST(PacketCase, HenonHeilesRowPattern) {
  const Potential hh = Potential::henon_heiles(0.1118);
  PacketCaseOptions o;
  o.stability.convention = QTildeConvention::kInverseMinusIdentity;
  o.duration = 50;
  const auto row = [&](std::vector<double> q, std::vector<double> p) {
    PacketCase c;
    c.q0 = Eigen::Map<Vec>(q.data(), 2);
    c.p0 = Eigen::Map<Vec>(p.data(), 2);
    c.width = 1.0;
    return evaluate_packet_case(hh, c, o).behavior;
  };
  EXPECT_EQ(row({1, -3}, {1.5, 1}), "regular");
  EXPECT_EQ(row({0, 8.9}, {0, 0}), "chaotic");
}
