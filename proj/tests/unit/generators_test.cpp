#include "lyapnet/generators.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace lyapnet;

namespace {

GeneratorConfig base(Eigen::Index D, std::size_t N, std::uint64_t seed) {
  GeneratorConfig g;
  g.width_D = D;
  g.depth_N = N;
  g.seed = seed;
  return g;
}

}  // namespace

TEST(Generate, ShapesAndDims) {
  auto g = base(6, 4, 1);
  g.input_dim = 2;
  g.output_dim = 3;
  const auto net = generate(g);
  ASSERT_EQ(net.transitions(), 3u);
  EXPECT_EQ(net.layers[0].weights.rows(), 6);
  EXPECT_EQ(net.layers[0].weights.cols(), 2);
  EXPECT_EQ(net.layers[1].weights.rows(), 6);
  EXPECT_EQ(net.layers[2].weights.rows(), 3);
  EXPECT_EQ(net.input_dim, 2);
  EXPECT_EQ(net.output_dim(), 3);
}

TEST(Generate, SeedDeterminismIsByteExact) {
  auto g = base(10, 5, 42);
  g.connectivity_p = 0.5;
  EXPECT_EQ(dump_network(generate(g)), dump_network(generate(g)));
  auto h = g;
  h.seed = 43;
  EXPECT_NE(dump_network(generate(g)), dump_network(generate(h)));
}

TEST(Generate, ColumnSum1ColumnsSumToOne) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto g = base(12, 4, seed);
    g.normalization = Normalization::ColumnSum1;
    g.connectivity_p = seed % 2 ? 1.0 : 0.3;
    for (const auto& L : generate(g).layers)
      for (Eigen::Index c = 0; c < L.weights.cols(); ++c) {
        EXPECT_NEAR(L.weights.col(c).sum(), 1.0, 1e-12);
        EXPECT_GE(L.weights.col(c).minCoeff(), 0.0);
      }
  }
}

TEST(Generate, ColumnSum1WithZeroScaleGivesUp) {
  auto g = base(4, 2, 0);
  g.normalization = Normalization::ColumnSum1;
  g.weight_scale_s = 0.0;
  EXPECT_THROW(generate(g), UsageError);
}

TEST(Generate, ZeroScaleReluIsZeroAfterFirstLayer) {
  auto g = base(5, 4, 3);
  g.weight_scale_s = 0.0;
  g.activation = Activation::relu();
  const auto net = generate(g);
  for (const auto& L : net.layers) EXPECT_EQ(L.weights.squaredNorm(), 0.0);
  std::mt19937_64 rng(1);
  const auto tr = forward(net, oracle::random_vector(5, 3.0, rng));
  for (std::size_t j = 1; j < tr.states.size(); ++j) EXPECT_EQ(tr.states[j], Vector::Zero(5));
}

TEST(Generate, ConnectivityFraction) {
  auto g = base(64, 2, 7);
  g.connectivity_p = 0.25;
  const Matrix W = generate(g).layers[0].weights;
  const double frac = static_cast<double>((W.array() != 0.0).count()) / static_cast<double>(W.size());
  EXPECT_GE(frac, 0.20);
  EXPECT_LE(frac, 0.30);
}

TEST(Generate, ScaleMatchesStandardDeviation) {
  auto g = base(200, 2, 8);
  g.weight_scale_s = 0.7;
  const Matrix W = generate(g).layers[0].weights;
  const double sd = std::sqrt(W.squaredNorm() / static_cast<double>(W.size()));
  EXPECT_NEAR(sd, 0.7, 0.01);
}

TEST(Generate, RejectsBadConfigs) {
  auto g = base(4, 1, 0);
  EXPECT_THROW(generate(g), UsageError);
  g = base(4, 2, 0);
  g.connectivity_p = 0.0;
  EXPECT_THROW(generate(g), UsageError);
  g = base(4, 2, 0);
  g.update_form = UpdateForm::Residual;
  g.input_dim = 2;
  EXPECT_THROW(generate(g), UsageError);
}

TEST(DelayEmbed, TrajectoryEqualityAndDelay) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto g = base(5, 6, seed);
    g.activation = seed % 2 ? Activation::tanh() : Activation::relu();
    const auto net = generate(g);
    const auto emb = delay_embed(net);
    ASSERT_EQ(emb.input_dim, 10);
    std::mt19937_64 rng(seed);
    const Vector y0 = oracle::random_vector(5, 1.0, rng);
    Vector z0(10);
    z0 << y0, Vector::Zero(5);
    const auto a = forward(net, y0), b = forward(emb, z0);
    for (std::size_t j = 0; j < a.states.size(); ++j) {
      EXPECT_EQ(b.states[j].head(5), a.states[j]);
      if (j > 0) { EXPECT_EQ(b.states[j].tail(5), b.states[j - 1].head(5)); }
    }
  }
}

TEST(DelayEmbed, Sparsity) {
  const auto net = generate(base(8, 3, 1));
  for (const auto& L : delay_embed(net).layers) {
    EXPECT_LE((L.weights.array() != 0.0).count(), 8 * 8 + 8);
    EXPECT_EQ(L.activation(9).type, ActivationType::Identity);
    EXPECT_EQ(L.activation(0).type, ActivationType::Tanh);
  }
}

TEST(DelayEmbed, FeedbackBlock) {
  const auto net = generate(base(3, 2, 2));
  const auto emb = delay_embed(net, 0.5);
  EXPECT_EQ(emb.layers[0].weights.topRightCorner(3, 3), Matrix(0.5 * Matrix::Identity(3, 3)));
}

TEST(DelayEmbed, RejectsResidualAndRaggedNetworks) {
  auto g = base(4, 3, 0);
  g.update_form = UpdateForm::Residual;
  EXPECT_THROW(delay_embed(generate(g)), UsageError);
  g = base(4, 3, 0);
  g.output_dim = 2;
  EXPECT_THROW(delay_embed(generate(g)), DimensionError);
}

TEST(Prune, Examples) {
  NetworkSpec net;
  net.input_dim = 4;
  Matrix w(1, 4);
  w << 3, -1, 2, 0.5;
  net.layers.emplace_back(w, Vector::Zero(1), Activation::tanh());
  const auto p = prune(net, 0.5);
  EXPECT_EQ(p.layers[0].weights, (Matrix(1, 4) << 3, 0, 2, 0).finished());
  EXPECT_EQ(dump_network(prune(net, 0.0)), dump_network(net));
}

TEST(Prune, TiesGoToLowerColumn) {
  NetworkSpec net;
  net.input_dim = 4;
  net.layers.emplace_back(Matrix::Ones(1, 4), Vector::Zero(1), Activation::tanh());
  EXPECT_EQ(prune(net, 0.5).layers[0].weights, (Matrix(1, 4) << 0, 0, 1, 1).finished());
}

TEST(Prune, RowCounts) {
  const auto net = generate(base(16, 4, 5));
  for (double f : {0.1, 0.25, 0.5, 0.75, 0.9375}) {
    const auto p = prune(net, f);
    const auto expect = static_cast<Eigen::Index>(std::ceil((1.0 - f) * 16 - 1e-9));
    for (std::size_t q = 0; q < p.layers.size(); ++q)
      for (Eigen::Index r = 0; r < 16; ++r) {
        EXPECT_EQ((p.layers[q].weights.row(r).array() != 0.0).count(), expect);
        for (Eigen::Index c = 0; c < 16; ++c)
          if (p.layers[q].weights(r, c) != 0.0) { EXPECT_EQ(p.layers[q].weights(r, c), net.layers[q].weights(r, c)); }
      }
  }
  EXPECT_THROW(prune(net, 1.0), UsageError);
}

TEST(BuildNetwork, AppliesPostProcessing) {
  auto g = base(6, 3, 9);
  g.prune_fraction = 0.5;
  g.delay_embed = true;
  const auto net = build_network(g);
  EXPECT_EQ(net.input_dim, 12);
  EXPECT_EQ((net.layers[0].weights.topLeftCorner(6, 6).row(0).array() != 0.0).count(), 3);
}

TEST(GeneratorJson, RoundTripAndErrors) {
  auto g = base(7, 3, 11);
  g.normalization = Normalization::ColumnSum1;
  g.activation = Activation::elu(0.5);
  g.input_dim = 2;
  const auto back = generator_config_from_json(to_json(g));
  EXPECT_EQ(dump_network(generate(back)), dump_network(generate(g)));
  EXPECT_THROW(generator_config_from_json(Json{{"width", 3}}), UsageError);
  EXPECT_THROW(generator_config_from_json(Json{{"normalization", "rows"}}), UsageError);
  EXPECT_THROW(generator_config_from_json(Json{{"weight_distribution", "uniform"}}), UsageError);
  EXPECT_THROW(generator_config_from_json(Json{{"seed", -1}}), UsageError);
}
