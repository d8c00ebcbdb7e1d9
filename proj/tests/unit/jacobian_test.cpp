#include "lyapnet/jacobian.hpp"
#include "lyapnet/spectral.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace lyapnet;

TEST(LocalJacobian, PlainIdentityActivationIsWeights) {
  std::mt19937_64 rng(1);
  auto net = oracle::random_network(4, 1, Activation::identity(), 2.0, rng);
  EXPECT_EQ(local_jacobian(net, 0, oracle::random_vector(4, 1.0, rng)), net.layers[0].weights);
}

TEST(LocalJacobian, ResidualZeroDtIsIdentity) {
  std::mt19937_64 rng(2);
  auto net = oracle::random_network(5, 1, Activation::tanh(), 2.0, rng, UpdateForm::Residual, 0.0);
  EXPECT_EQ(local_jacobian(net, 0, oracle::random_vector(5, 1.0, rng)), Matrix::Identity(5, 5));
}

TEST(LocalJacobian, ReluNegativePreactivationIsZero) {
  NetworkSpec net;
  net.input_dim = 3;
  net.layers.emplace_back(Matrix::Identity(3, 3), Vector::Constant(3, -5.0), Activation::relu());
  EXPECT_EQ(local_jacobian(net, 0, Vector::Ones(3)), Matrix::Zero(3, 3));
}

TEST(LocalJacobian, ShapeErrors) {
  std::mt19937_64 rng(2);
  auto net = oracle::random_network(3, 2, Activation::tanh(), 1.0, rng);
  EXPECT_THROW(local_jacobian(net, 0, Vector::Zero(4)), DimensionError);
  EXPECT_THROW(local_jacobian(net, 2, Vector::Zero(3)), DimensionError);
}

TEST(Chain, DepthOneIsFirstLocalJacobian) {
  std::mt19937_64 rng(3);
  auto net = oracle::random_network(3, 4, Activation::tanh(), 1.0, rng);
  const Vector y0 = oracle::random_vector(3, 1.0, rng);
  const auto t = forward(net, y0);
  const auto c = chain(net, t, 1);
  ASSERT_EQ(c.depth(), 1u);
  EXPECT_EQ(c.factors[0], local_jacobian(net, 0, y0));
}

TEST(Chain, LinearNetworkFactorsAreWeights) {
  std::mt19937_64 rng(4);
  auto net = oracle::random_network(3, 5, Activation::identity(), 1.0, rng);
  const auto t = forward(net, oracle::random_vector(3, 1.0, rng));
  const auto c = chain(net, t, 5);
  for (std::size_t q = 0; q < 5; ++q) EXPECT_EQ(c.factors[q], net.layers[q].weights);
}

TEST(Chain, DepthOutOfRange) {
  std::mt19937_64 rng(4);
  auto net = oracle::random_network(3, 2, Activation::tanh(), 1.0, rng);
  const auto t = forward(net, oracle::random_vector(3, 1.0, rng));
  EXPECT_THROW(chain(net, t, 0), UsageError);
  EXPECT_THROW(chain(net, t, 3), UsageError);
}

TEST(Chain, ShapesTelescope) {
  NetworkSpec net;
  net.input_dim = 2;
  std::mt19937_64 rng(6);
  const Eigen::Index dims[] = {2, 5, 3, 4};
  for (int q = 0; q < 3; ++q)
    net.layers.emplace_back(oracle::uniform_matrix(dims[q + 1], dims[q], 1.0, rng), Vector::Zero(dims[q + 1]),
                            Activation::tanh());
  const auto c = chain(net, forward(net, Vector::Ones(2)), 3);
  for (std::size_t q = 1; q < c.depth(); ++q) EXPECT_EQ(c.factors[q].cols(), c.factors[q - 1].rows());
  const Matrix M = explicit_sensitivity(c);
  EXPECT_EQ(M.rows(), 4);
  EXPECT_EQ(M.cols(), 2);
}

TEST(Chain, FactorDependsOnlyOnItsOwnState) {
  std::mt19937_64 rng(7);
  auto net = oracle::random_network(4, 4, Activation::tanh(), 1.0, rng);
  Trajectory t = forward(net, oracle::random_vector(4, 1.0, rng));
  const auto before = chain(net, t, 4);
  t.states[3] += Vector::Constant(4, 0.3);
  t.states[4] += Vector::Constant(4, 9.0);
  const auto after = chain(net, t, 4);
  for (std::size_t q = 0; q < 3; ++q) EXPECT_EQ(before.factors[q], after.factors[q]);
  EXPECT_NE(before.factors[3], after.factors[3]);
}

TEST(FiniteDifference, LinearNetworkIsExact) {
  std::mt19937_64 rng(9);
  auto net = oracle::random_network(4, 3, Activation::identity(), 1.0, rng);
  const Vector y0 = oracle::random_vector(4, 1.0, rng);
  const Matrix exact = net.layers[2].weights * net.layers[1].weights * net.layers[0].weights;
  for (double h : {1e-2, 1e-5, 1.0}) {
    const Matrix fd = finite_difference_sensitivity(net, y0, 3, h);
    EXPECT_LE((fd - exact).cwiseAbs().maxCoeff(), 1e-9 * std::max(1.0, exact.cwiseAbs().maxCoeff())) << h;
  }
}

TEST(FiniteDifference, IdentityNetworkGivesIdentity) {
  NetworkSpec net;
  net.input_dim = 3;
  for (int q = 0; q < 4; ++q) net.layers.emplace_back(Matrix::Identity(3, 3), Vector::Zero(3), Activation::identity());
  EXPECT_LE((finite_difference_sensitivity(net, Vector::Ones(3), 4) - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(),
            1e-10);
}

TEST(FiniteDifference, TanhNetworkMatchesChainProduct) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 30; ++trial) {
    auto net = oracle::random_network(5, 4, Activation::tanh(), 1.0, rng);
    const Vector y0 = oracle::random_vector(5, 1.0, rng);
    const Matrix analytic = explicit_sensitivity(chain(net, forward(net, y0), 4));
    const Matrix fd = finite_difference_sensitivity(net, y0, 4, 1e-5);
    EXPECT_LE((fd - analytic).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(FiniteDifference, RejectsNonPositiveStep) {
  std::mt19937_64 rng(10);
  auto net = oracle::random_network(2, 1, Activation::tanh(), 1.0, rng);
  EXPECT_THROW(finite_difference_sensitivity(net, Vector::Zero(2), 1, 0.0), UsageError);
}
