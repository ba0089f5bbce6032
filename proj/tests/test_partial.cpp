#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "grouse/harness.hpp"
#include "grouse/partial.hpp"
#include "grouse/random.hpp"
#include "oracles.hpp"

using grouse::Basis;
using grouse::Mat;
using grouse::Observation;
using grouse::Vec;

namespace {

Observation observe(const Basis& ubar, const Vec& s, std::vector<std::size_t> omega) {
  Observation obs;
  obs.omega = std::move(omega);
  obs.values.resize(static_cast<Eigen::Index>(obs.omega.size()));
  for (std::size_t i = 0; i < obs.omega.size(); ++i) {
    obs.values(static_cast<Eigen::Index>(i)) =
        ubar.mat().row(static_cast<Eigen::Index>(obs.omega[i])).dot(s);
  }
  obs.latent_s = s;
  return obs;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  return out;
}

Mat sampled(const Mat& m, const std::vector<std::size_t>& omega) {
  Mat out(static_cast<Eigen::Index>(omega.size()), m.cols());
  for (std::size_t i = 0; i < omega.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(omega[i]));
  }
  return out;
}

}  // namespace

TEST(ObservationType, Validation) {
  Observation obs;
  obs.omega = {0, 2, 2};
  obs.values = Vec::Zero(3);
  EXPECT_THROW(obs.validate(5), grouse::Error);
  obs.omega = {0, 2, 5};
  EXPECT_THROW(obs.validate(5), grouse::Error);
  obs.omega = {0, 2};
  EXPECT_THROW(obs.validate(5), grouse::Error);
  obs.omega = {0, 2, 4};
  EXPECT_NO_THROW(obs.validate(5));
}

TEST(GateCheck, FullSamplingPasses) {
  const Basis u = oracle::random_basis(30, 4, 1);
  const auto g = grouse::gate_check(u, all_rows(30));
  EXPECT_NEAR(g.eigen_min, 1.0, 1e-12);
  EXPECT_NEAR(g.eigen_max, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(g.lower_bound, 0.5);
  EXPECT_DOUBLE_EQ(g.upper_bound, 1.5);
  EXPECT_TRUE(g.passed);
}

TEST(GateCheck, UnobservedSpikeFails) {
  const Basis spike(Mat::Identity(20, 3));
  std::vector<std::size_t> omega;
  for (std::size_t i = 3; i < 20; ++i) omega.push_back(i);
  const auto g = grouse::gate_check(spike, omega);
  EXPECT_EQ(g.eigen_max, 0.0);
  EXPECT_FALSE(g.passed);
}

TEST(GateCheck, TooFewRowsFailWithoutError) {
  const Basis u = oracle::random_basis(30, 4, 2);
  const auto g = grouse::gate_check(u, std::vector<std::size_t>{1, 5, 9});
  EXPECT_FALSE(g.passed);
  EXPECT_EQ(g.eigen_min, 0.0);
}

TEST(GateCheck, MatchesJacobiOracleAndPassesOftenWhenIncoherent) {
  const Basis u = oracle::random_basis(400, 5, 3);
  grouse::Rng rng(3);
  int passed = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto omega = rng.sample_without_replacement(400, 120);
    const auto g = grouse::gate_check(u, omega);
    if (t < 20) {
      const Mat c = sampled(u.mat(), omega);
      const Vec ev = oracle::jacobi_eigenvalues(oracle::gram(c, c));
      EXPECT_NEAR(g.eigen_max, ev(0), 1e-12);
      EXPECT_NEAR(g.eigen_min, ev(4), 1e-12);
      EXPECT_EQ(g.passed, g.eigen_min >= g.lower_bound && g.eigen_max <= g.upper_bound);
    }
    if (g.passed) {
      ++passed;
      // ‖([U]_Ωᵀ[U]_Ω)⁻¹‖ ≤ 2n/|Ω| follows from the lower bound.
      EXPECT_LE(1.0 / g.eigen_min, 2.0 * 400 / 120 + 1e-12);
    }
  }
  EXPECT_GE(passed, 950);
}

TEST(PartialResidual, ExplainedObservationHasZeroResidual) {
  const Basis u = oracle::random_basis(40, 3, 4);
  const Vec c = Eigen::Vector3d(0.5, -1, 2);
  const Observation obs = observe(u, c, {1, 4, 7, 9, 20, 33});
  const auto res = grouse::partial_residual(u, obs);
  EXPECT_LT((res.w - c).norm(), 1e-12);
  EXPECT_LT(res.r.norm(), 1e-12);
}

TEST(PartialResidual, OrthogonalObservationIsAllResidual) {
  const Basis u = oracle::random_basis(40, 3, 5);
  const std::vector<std::size_t> omega = {0, 3, 6, 10, 15, 21, 28, 36};
  const Mat c = sampled(u.mat(), omega);
  grouse::Rng rng(5);
  Vec vals = rng.gaussian_vec(8);
  vals -= c * oracle::normal_equations(c, vals);
  Observation obs;
  obs.omega = omega;
  obs.values = vals;
  const auto res = grouse::partial_residual(u, obs);
  EXPECT_LT(res.w.norm(), 1e-12);
  EXPECT_LT(res.p.norm(), 1e-12);
  for (std::size_t i = 0; i < omega.size(); ++i) {
    EXPECT_NEAR(res.r(static_cast<Eigen::Index>(omega[i])), vals(static_cast<Eigen::Index>(i)), 1e-12);
  }
}

TEST(PartialResidual, MatchesNormalEquations) {
  const Basis u = oracle::random_basis(50, 3, 6);
  grouse::Rng rng(6);
  Observation obs;
  obs.omega = rng.sample_without_replacement(50, 20);
  obs.values = rng.gaussian_vec(20);
  const auto res = grouse::partial_residual(u, obs);
  const Vec w = oracle::normal_equations(sampled(u.mat(), obs.omega), obs.values);
  EXPECT_LT((res.w - w).cwiseAbs().maxCoeff(), 1e-9);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const bool in = std::find(obs.omega.begin(), obs.omega.end(), static_cast<std::size_t>(i)) !=
                    obs.omega.end();
    if (!in) EXPECT_EQ(res.r(i), 0.0);
  }
  EXPECT_LE(std::abs(res.p.dot(res.r)), 1e-9 * res.p.norm() * res.r.norm());
}

TEST(PartialResidual, SingularSampleIsReported) {
  const Basis spike(Mat::Identity(20, 3));
  Observation obs;
  obs.omega = {0, 1, 5, 6};
  obs.values = Vec::Ones(4);
  try {
    grouse::partial_residual(spike, obs);
    FAIL();
  } catch (const grouse::Error& e) {
    EXPECT_EQ(e.kind(), grouse::ErrorKind::gate_bypassed_singular);
  }
}

TEST(StepSize, Examples) {
  EXPECT_EQ(grouse::step_size(0.0, 0.0, 1.0, 1.0).angle, 0.0);
  EXPECT_EQ(grouse::step_size(0.0, 0.0, 1.0, 1.0).eta, 0.0);
  EXPECT_NEAR(grouse::step_size(4.0, 2.0, 2.0, 1.0).angle, std::numbers::pi / 2, 1e-15);
  const auto s = grouse::step_size(2.0, 1.0, 2.0, 1.0);
  EXPECT_NEAR(s.angle, std::numbers::pi / 6, 1e-15);
  EXPECT_NEAR(s.eta * 2.0, std::numbers::pi / 6, 1e-15);
  EXPECT_FALSE(s.clamped);
  EXPECT_TRUE(grouse::step_size(6.0, 3.0, 2.0, 1.0).clamped);
  EXPECT_THROW(grouse::step_size(1.0, 1.0, 0.0, 1.0), grouse::Error);
  EXPECT_THROW(grouse::step_size(1.0, 1.0, 1.0, 2.0), grouse::Error);
  EXPECT_THROW(grouse::step_size(1.0, 1.0, 1.0, 0.0), grouse::Error);
}

TEST(ApplyUpdate, SingleStepConvergenceForLines) {
  for (double a : {0.1, 0.7, 1.3}) {
    const Basis u(Mat(Vec::Unit(2, 0)));
    Observation obs;
    obs.omega = {0, 1};
    obs.values = Eigen::Vector2d(std::cos(a), std::sin(a));
    const Basis target(Mat(obs.values));
    const auto res = grouse::partial_residual(u, obs);
    grouse::StepRecord rec;
    rec.w = res.w;
    rec.p = res.p;
    rec.r = res.r;
    rec.taken = true;
    rec.sigma = res.r.norm() * res.p.norm();
    // Rotating by the full revealed angle lands on v.
    rec.eta = std::atan2(res.r.norm(), res.w.norm()) / rec.sigma;
    const Basis next = grouse::apply_update(u, rec);
    EXPECT_NEAR(std::abs(next.mat()(0, 0)), std::cos(a), 1e-15);
    EXPECT_NEAR(std::abs(next.mat()(1, 0)), std::sin(a), 1e-15);
    EXPECT_LE(grouse::epsilon(next, target), 1e-30);
  }
}

TEST(ApplyUpdate, UnitFudgeFactorOnLinesTurnsByArcsinOfTangent) {
  for (double a : {0.1, 0.7, 1.3}) {
    const Basis u(Mat(Vec::Unit(2, 0)));
    Observation obs;
    obs.omega = {0, 1};
    obs.values = Eigen::Vector2d(std::cos(a), std::sin(a));
    const auto out = grouse::grouse_step(u, obs);
    const double turn = std::asin(std::min(1.0, std::tan(a)));
    EXPECT_NEAR(out.basis.mat()(0, 0), std::cos(turn), 1e-15);
    EXPECT_NEAR(out.basis.mat()(1, 0), std::sin(turn), 1e-15);
    EXPECT_EQ(out.record.clamped, std::tan(a) > 1.0);
  }
}

TEST(ApplyUpdate, LeastChangeAndOrthonormality) {
  const Basis u = oracle::random_basis(50, 3, 7);
  const Basis ubar = oracle::random_basis(50, 3, 8);
  grouse::Rng rng(7);
  const auto obs = observe(ubar, rng.gaussian_vec(3), rng.sample_without_replacement(50, 25));
  const auto out = grouse::grouse_step(u, obs);
  ASSERT_TRUE(out.record.taken);
  EXPECT_LE(out.basis.drift(), 1e-12);
  const Mat z = oracle::complement_of(out.record.w);
  EXPECT_LE((out.basis.mat() * z - u.mat() * z).norm(), 1e-10);
}

TEST(ApplyUpdate, ZeroResidualAndZeroWeight) {
  const Basis u = oracle::random_basis(10, 2, 9);
  grouse::StepRecord rec;
  rec.w = Vec::Ones(2);
  rec.p = u.mat() * rec.w;
  rec.r = Vec::Zero(10);
  EXPECT_EQ(grouse::apply_update(u, rec).mat(), u.mat());
  rec.r = Vec::Unit(10, 0);
  rec.w = Vec::Zero(2);
  try {
    grouse::apply_update(u, rec);
    FAIL();
  } catch (const grouse::Error& e) {
    EXPECT_EQ(e.kind(), grouse::ErrorKind::no_revealed_direction);
  }
}

TEST(GrouseStep, GateFailureLeavesBasis) {
  const Basis spike(Mat::Identity(20, 3));
  Observation obs;
  obs.omega = {3, 4, 5, 6, 7, 8};
  obs.values = Vec::Ones(6);
  const auto out = grouse::grouse_step(spike, obs);
  EXPECT_FALSE(out.record.taken);
  EXPECT_EQ(out.basis.mat(), spike.mat());
  EXPECT_EQ(out.record.w, Vec::Zero(3));
  EXPECT_EQ(out.record.eta, 0.0);
}

TEST(GrouseStep, BypassOnSingularSampleSkips) {
  const Basis spike(Mat::Identity(20, 3));
  Observation obs;
  obs.omega = {3, 4, 5, 6, 7, 8};
  obs.values = Vec::Ones(6);
  const auto out = grouse::grouse_step(spike, obs, {.alpha = 1.0, .bypass_gate = true});
  EXPECT_FALSE(out.record.taken);
  EXPECT_EQ(out.basis.mat(), spike.mat());
}

TEST(GrouseStep, ObservationFromSameSubspaceIsIdentity) {
  const Basis ubar = oracle::random_basis(60, 4, 10);
  grouse::Rng rng(10);
  const auto obs = observe(ubar, rng.gaussian_vec(4), rng.sample_without_replacement(60, 30));
  const auto out = grouse::grouse_step(ubar, obs, {}, ubar);
  EXPECT_TRUE(out.record.taken);
  EXPECT_EQ(out.record.eta, 0.0);
  EXPECT_EQ(out.basis.mat(), ubar.mat());
  EXPECT_EQ(out.record.r.norm(), 0.0);
}

TEST(GrouseStep, DecreaseInequalityNearSolution) {
  const std::size_t n = 200, d = 5, q = 60;
  const Basis ubar = oracle::random_basis(n, d, 11);
  grouse::Rng rng(11);
  int checked = 0;
  for (std::uint64_t k = 0; k < 40; ++k) {
    const Basis u = grouse::basis_at_epsilon(ubar, 1e-4, k);
    const auto obs = observe(ubar, rng.gaussian_vec(d), rng.sample_without_replacement(n, q));
    const auto out = grouse::grouse_step(u, obs, {}, ubar);
    if (!out.record.taken) continue;
    ++checked;
    const double e0 = *out.record.epsilon_before;
    const double ratio = out.record.r.squaredNorm() / out.record.p.squaredNorm();
    const double rhs = e0 - ratio + 55 * std::sqrt(double(n) / q) * std::pow(e0, 1.5) + 1e-12;
    EXPECT_LE(*out.record.epsilon_after, rhs);
  }
  EXPECT_GT(checked, 30);
}

TEST(GrouseStep, PropertyStepInvariants) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto n = static_cast<std::size_t>(30 + seed % 50);
    const auto d = static_cast<std::size_t>(1 + seed % 4);
    const auto q = std::min(n, 4 * d + static_cast<std::size_t>(seed % 20));
    const Basis ubar = oracle::random_basis(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d), seed);
    const Basis u = grouse::basis_at_epsilon(ubar, 0.05, seed);
    grouse::Rng rng(seed);
    const auto obs = observe(ubar, rng.gaussian_vec(static_cast<Eigen::Index>(d)),
                             rng.sample_without_replacement(n, q));
    const auto out = grouse::grouse_step(u, obs, {}, ubar);
    const auto& rec = out.record;
    if (!rec.taken) {
      EXPECT_EQ(out.basis.mat(), u.mat());
      continue;
    }
    const double np = rec.p.norm(), nr = rec.r.norm();
    EXPECT_LE(std::abs(rec.p.dot(rec.r)), 1e-9 * np * nr + 1e-300);
    EXPECT_NEAR((rec.p + rec.r).squaredNorm(), np * np + nr * nr, 1e-9 * (np * np + nr * nr));
    EXPECT_NEAR(np, rec.w.norm(), 1e-10 * np);
    EXPECT_LE(out.basis.drift(), 1e-8);
    if (d > 1) {
      const Mat z = oracle::complement_of(rec.w);
      EXPECT_LE((out.basis.mat() * z - u.mat() * z).norm(), 1e-10);
    }
  }
}

TEST(GrouseStep, ExpectedRatioBelowOneNearSolution) {
  const std::size_t n = 400, d = 4, q = 80;
  const Basis ubar = oracle::random_basis(n, d, 12);
  const Basis u = grouse::basis_at_epsilon(ubar, 1e-5, 12);
  grouse::Rng rng(12);
  double sum = 0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    const auto obs = observe(ubar, rng.gaussian_vec(d), rng.sample_without_replacement(n, q));
    const auto out = grouse::grouse_step(u, obs, {}, ubar);
    sum += *out.record.epsilon_after / *out.record.epsilon_before;
  }
  EXPECT_LT(sum / trials, 1.0);
}

TEST(GrouseStep, ClampedStepsAreFlagged) {
  const Basis u = oracle::random_basis(30, 2, 13);
  grouse::Rng rng(13);
  Observation obs;
  obs.omega = rng.sample_without_replacement(30, 30);
  // Nearly orthogonal to range(u): ‖r‖ ≫ ‖p‖.
  Vec v = rng.gaussian_vec(30);
  v -= u.mat() * (u.mat().transpose() * v);
  v += 1e-3 * u.mat().col(0);
  obs.values = v;
  const auto out = grouse::grouse_step(u, obs);
  ASSERT_TRUE(out.record.taken);
  EXPECT_TRUE(out.record.clamped);
  EXPECT_NEAR(out.record.sigma * out.record.eta, std::numbers::pi / 2, 1e-12);
}

TEST(RunStream, EmptyAndGateFailingStreams) {
  const Basis u = oracle::random_basis(20, 2, 14);
  const Basis ubar = oracle::random_basis(20, 2, 15);
  const auto empty = grouse::run_stream(u, {}, {}, ubar);
  ASSERT_EQ(empty.epsilons.size(), 1u);
  EXPECT_EQ(empty.epsilons[0], grouse::epsilon(u, ubar));

  std::vector<Observation> bad(5);
  for (auto& o : bad) {
    o.omega = {0};
    o.values = Vec::Ones(1);
  }
  const auto r = grouse::run_stream(u, bad, {}, ubar);
  ASSERT_EQ(r.epsilons.size(), 6u);
  for (double e : r.epsilons) EXPECT_EQ(e, r.epsilons[0]);
  EXPECT_EQ(r.gate_skips, 5u);
  EXPECT_TRUE(grouse::run_stream(u, bad).epsilons.empty());
}

TEST(RunStream, ConvergesAndKeepsOrthonormality) {
  grouse::ProblemSpec spec;
  spec.n = 300;
  spec.d = 4;
  spec.q = 80;
  spec.iters = 1500;
  spec.seed = 16;
  const auto problem = grouse::generate_problem(spec);
  const auto stream = grouse::synthesize_stream(spec, problem.ubar);
  grouse::StreamOptions opts;
  opts.reortho_every = 50;
  const auto r = grouse::run_stream(problem.u0, stream, opts, problem.ubar);
  ASSERT_EQ(r.epsilons.size(), 1501u);
  EXPECT_LT(r.epsilons.back(), 1e-10);
  EXPECT_GT(r.reorthonormalizations, 0u);
  for (double e : r.epsilons) {
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, 4.0);
  }
}

TEST(ObservationCsv, RoundTripIsExact) {
  grouse::ProblemSpec spec;
  spec.n = 40;
  spec.d = 3;
  spec.q = 10;
  spec.iters = 7;
  spec.seed = 17;
  const auto problem = grouse::generate_problem(spec);
  const auto stream = grouse::synthesize_stream(spec, problem.ubar);
  const std::string path = "obs_roundtrip.csv";
  grouse::write_observations(path, stream, 40);
  Eigen::Index n = 0;
  const auto back = grouse::read_observations(path, &n);
  EXPECT_EQ(n, 40);
  ASSERT_EQ(back.size(), stream.size());
  for (std::size_t t = 0; t < stream.size(); ++t) {
    EXPECT_EQ(back[t].omega, stream[t].omega);
    EXPECT_EQ(back[t].values, stream[t].values);
  }
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header, "t,n,indices,values");
  EXPECT_EQ(first.rfind("1,40,", 0), 0u);
  // 1-based on disk.
  EXPECT_EQ(std::stoul(first.substr(5)), stream[0].omega[0] + 1);
  std::remove(path.c_str());
}

TEST(ObservationCsv, MalformedInputIsIoError) {
  const std::string path = "obs_bad.csv";
  {
    std::ofstream out(path);
    out << "1,5,0;2,1.0;2.0\n";
  }
  try {
    grouse::read_observations(path);
    FAIL();
  } catch (const grouse::Error& e) {
    EXPECT_EQ(e.kind(), grouse::ErrorKind::io);
  }
  {
    std::ofstream out(path);
    out << "1,5,1;2,1.0\n";
  }
  EXPECT_THROW(grouse::read_observations(path), grouse::Error);
  std::remove(path.c_str());
  EXPECT_THROW(grouse::read_observations("missing/dir/x.csv"), grouse::Error);
}
