/*
Copyright 2026 The qvae Authors.

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles/oracles.hpp"
#include "qvae/reparam/latent.hpp"
#include "qvae/reparam/spike_exp.hpp"

namespace qvae::reparam {
namespace {

using diff::Tape;
using diff::Tensor;

// Mixture CDF by quadrature of the exponential density, independent of the closed form.
double cdf_by_quadrature(double zeta, double q, double beta) {
  std::vector<double> nodes, weights;
  oracle::gauss_legendre(40, nodes, weights);
  double mass = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double t = nodes[i] * zeta;
    mass += weights[i] * zeta * beta * std::exp(beta * t) / std::expm1(beta);
  }
  return 1.0 - q + q * mass;
}

TEST(InverseCdf, SpikeBranchGivesZero) {
  for (double beta : {0.5, 1.0, 5.0, 10.0}) EXPECT_EQ(spike_exp_inverse_cdf(0.3, 0.5, beta), 0.0);
}

TEST(InverseCdf, ClosedFormValue) {
  const double zeta = spike_exp_inverse_cdf(0.75, 0.5, 1.0);
  EXPECT_NEAR(zeta, 0.620115, 1e-6);
  EXPECT_NEAR(zeta, std::log(0.5 * (std::numbers::e - 1.0) + 1.0), 1e-15);
  // Invert the quadrature CDF by bisection.
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf_by_quadrature(mid, 0.5, 1.0) < 0.75 ? lo : hi) = mid;
  }
  EXPECT_NEAR(zeta, lo, 1e-10);
}

TEST(InverseCdf, EndpointIsOne) {
  for (double q : {0.01, 0.3, 0.99}) EXPECT_NEAR(spike_exp_inverse_cdf(1.0, q, 3.0), 1.0, 1e-12);
}

TEST(InverseCdf, ClipsProbabilities) {
  EXPECT_TRUE(std::isfinite(spike_exp_inverse_cdf(0.9, 0.0, 2.0)));
  EXPECT_TRUE(std::isfinite(spike_exp_inverse_cdf(0.9, 1.0, 2.0)));
  EXPECT_EQ(clip_probability(0.0), kProbabilityClip);
  EXPECT_EQ(clip_probability(1.0), 1.0 - kProbabilityClip);
}

TEST(InverseCdf, AnalyticCdfMatchesQuadrature) {
  for (double q : {0.1, 0.5, 0.9})
    for (double beta : {1.0, 5.0})
      for (double zeta : {0.0, 0.2, 0.7, 1.0})
        EXPECT_NEAR(spike_exp_cdf(zeta, q, beta), cdf_by_quadrature(zeta, q, beta), 1e-12);
}

TEST(InverseCdf, PartialInQMatchesDifferences) {
  for (double beta : {1.0, 8.0})
    for (double rho : {0.55, 0.8, 0.97}) {
      const double q = 0.6, h = 1e-6;
      const double numeric =
          (spike_exp_inverse_cdf(rho, q + h, beta) - spike_exp_inverse_cdf(rho, q - h, beta)) / (2 * h);
      EXPECT_NEAR(spike_exp_inverse_cdf_dq(rho, q, beta), numeric, 1e-6);
    }
  EXPECT_EQ(spike_exp_inverse_cdf_dq(0.2, 0.6, 3.0), 0.0);
}

TEST(DiscreteFromNoise, Threshold) {
  EXPECT_EQ(discrete_from_noise(0.2, 0.5), 0);
  EXPECT_EQ(discrete_from_noise(0.9, 0.5), 1);
}

TEST(DiscreteFromNoise, MarginalIsQ) {
  Rng rng(11);
  const std::size_t n = 1'000'000;
  const double q = 0.3;
  std::size_t ones = 0;
  for (std::size_t i = 0; i < n; ++i) ones += discrete_from_noise(uniform01(rng), q);
  const double mean = static_cast<double>(ones) / n;
  EXPECT_NEAR(mean, q, 3.0 * std::sqrt(q * (1 - q) / n));
}

double enumerated_entropy(const std::vector<double>& q) {
  double h = 0.0;
  for (std::uint64_t s = 0; s < (1u << q.size()); ++s) {
    double p = 1.0;
    for (std::size_t l = 0; l < q.size(); ++l) p *= (s >> l) & 1 ? q[l] : 1 - q[l];
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

TEST(BernoulliEntropy, Examples) {
  const std::vector<double> half{0.5}, tiny{1e-9}, quarter{0.25};
  EXPECT_NEAR(bernoulli_entropy(half), std::log(2.0), 1e-15);
  EXPECT_NEAR(bernoulli_entropy(tiny), 0.0, 1e-5);
  EXPECT_NEAR(bernoulli_entropy(quarter), 0.562335, 1e-6);
  EXPECT_NEAR(bernoulli_entropy(quarter), enumerated_entropy(quarter), 1e-14);
  const std::vector<double> mixed{0.1, 0.45, 0.8};
  EXPECT_NEAR(bernoulli_entropy(mixed), enumerated_entropy(mixed), 1e-14);
}

TEST(BernoulliCrossEntropy, Examples) {
  const std::vector<double> half{0.5}, almost_one{1 - 1e-7}, q{0.3}, p{0.7};
  EXPECT_NEAR(bernoulli_cross_entropy(half, half), std::log(2.0), 1e-15);
  EXPECT_NEAR(bernoulli_cross_entropy(almost_one, half), std::log(2.0), 1e-12);
  EXPECT_NEAR(bernoulli_cross_entropy(q, p), 0.949783, 1e-6);
  // Enumeration: -sum_z q(z) log p(z).
  EXPECT_NEAR(bernoulli_cross_entropy(q, p), -(0.3 * std::log(0.7) + 0.7 * std::log(0.3)), 1e-14);
}

TEST(GaussianKl, Examples) {
  const std::vector<double> zero{0.0}, one{1.0};
  EXPECT_EQ(gaussian_kl(zero, one), 0.0);
  EXPECT_NEAR(gaussian_kl(one, one), 0.5, 1e-15);
  const std::vector<double> bad{0.0};
  EXPECT_THROW(gaussian_kl(zero, bad), std::invalid_argument);
}

TEST(GaussianKl, MatchesMonteCarlo) {
  const std::vector<double> mu{0.7, -1.2}, sigma{0.5, 1.6};
  Rng rng(4);
  std::normal_distribution<double> normal;
  const std::size_t n = 400'000;
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    for (std::size_t l = 0; l < 2; ++l) {
      const double e = normal(rng), x = mu[l] + sigma[l] * e;
      v += -std::log(sigma[l]) - 0.5 * e * e + 0.5 * x * x;  // log q - log p
    }
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n, se = std::sqrt((sq / n - mean * mean) / n);
  EXPECT_NEAR(gaussian_kl(mu, sigma), mean, 3 * se);
}

TEST(GaussianReparam, Moments) {
  const std::vector<double> mu{1.5}, sigma{0.4}, zero{0.0};
  EXPECT_EQ(gaussian_reparam(zero, mu, sigma)[0], 1.5);
  const std::vector<double> no_spread{0.0};
  const std::vector<double> rho{2.3};
  EXPECT_EQ(gaussian_reparam(rho, mu, no_spread)[0], 1.5);
  Rng rng(5);
  std::normal_distribution<double> normal;
  const std::size_t n = 1'000'000;
  double sum = 0, sq = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> e{normal(rng)};
    const double z = gaussian_reparam(e, mu, sigma)[0];
    sum += z;
    sq += z * z;
  }
  const double mean = sum / n, var = sq / n - mean * mean;
  EXPECT_NEAR(mean, 1.5, 3 * 0.4 / std::sqrt(n));
  EXPECT_NEAR(var, 0.16, 3 * 0.16 * std::sqrt(2.0 / n));
}

TEST(DiscreteGradWeight, Examples) {
  EXPECT_EQ(discrete_grad_weight(1, 0.3), 0.0);
  EXPECT_NEAR(discrete_grad_weight(0, 0.3), 1.0 / 0.7, 1e-15);
}

// Estimator of d/dq E[f(z)] for one unit, averaged over n draws.
std::pair<double, double> estimator_mean(double q, double slope, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const Tensor rho = uniform_noise(n, 1, rng);
  Tensor qt = Tensor::filled({n, 1}, q, true);
  Tape tape;
  const Tensor z = discrete_latent(tape, rho, qt);
  tape.backward(tape.sum(tape.scale(z, slope)));
  double sum = 0, sq = 0;
  for (double g : qt.grad()) {
    sum += g;
    sq += g * g;
  }
  const double mean = sum / n;
  return {mean, std::sqrt((sq / n - mean * mean) / n)};
}

TEST(DiscreteGradient, UnbiasedForIdentity) {
  const auto [mean, se] = estimator_mean(0.5, 1.0, 1'000'000, 21);
  EXPECT_NEAR(mean, 1.0, 3 * se);
}

TEST(DiscreteGradient, ConstantHasZeroGradient) {
  Rng rng(1);
  Tensor qt = Tensor::filled({100, 1}, 0.4, true);
  Tape tape;
  const Tensor z = discrete_latent(tape, uniform_noise(100, 1, rng), qt);
  tape.backward(tape.sum(tape.scale(z, 0.0)));
  for (double g : qt.grad()) EXPECT_EQ(g, 0.0);
}

TEST(LatentSample, ConsistencyAndRange) {
  Rng rng(2);
  const std::size_t n = 500, l = 3;
  std::vector<double> qv(n * l);
  for (double& v : qv) v = uniform01(rng);
  const Tensor q = Tensor::from_values({n, l}, qv, true);
  const Tensor rho = uniform_noise(n, l, rng);
  Tape tape;
  const Tensor zeta = spike_exp_zeta(tape, rho, q, 4.0);
  const Tensor z = discrete_latent(tape, rho, q);
  for (std::size_t i = 0; i < n * l; ++i) {
    EXPECT_EQ(z[i] == 1.0, zeta[i] > 0.0) << i;
    EXPECT_EQ(z[i], discrete_from_noise(rho[i], qv[i]));
    EXPECT_GE(zeta[i], 0.0);
    EXPECT_LE(zeta[i], 1.0);
  }
}

TEST(Hierarchy, SingleGroupIsFactorial) {
  Rng rng(3);
  HierarchicalEncoder enc(4, HierarchySpec::uniform(3, 1), {}, false, rng);
  const Tensor x = Tensor::from_values({2, 4}, {1, 0, 1, 1, 0, 0, 1, 0});
  Tape tape;
  const auto s = enc.sample(tape, x, uniform_noise(2, 3, rng), 2.0, false);
  // q from a single affine map of x alone.
  const auto w = enc.networks()[0].parameters()[0];
  const auto b = enc.networks()[0].parameters()[1];
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t j = 0; j < 3; ++j) {
      double a = b[j];
      for (std::size_t i = 0; i < 4; ++i) a += x.at(r, i) * w[i * 3 + j];
      EXPECT_NEAR(s.q.at(r, j), sigmoid(a), 1e-12);
    }
}

TEST(Hierarchy, SecondGroupIgnoringFirstHasFactorialLaw) {
  Rng rng(4);
  HierarchicalEncoder enc(2, HierarchySpec::uniform(2, 2), {}, false, rng);
  // Zero the rows of group 1's weights that read zeta_0.
  auto w1 = enc.networks()[1].parameters()[0];
  w1[2] = 0.0;
  const Tensor x = Tensor::from_values({1, 2}, {1, 0});
  std::vector<double> q1;
  for (double rho0 : {0.01, 0.6, 0.99}) {
    Tape tape;
    const auto s = enc.sample(tape, x, Tensor::from_values({1, 2}, {rho0, 0.5}), 3.0, false);
    q1.push_back(s.q[1]);
  }
  EXPECT_EQ(q1[0], q1[1]);
  EXPECT_EQ(q1[1], q1[2]);
}

TEST(Hierarchy, JointLawMatchesChainRule) {
  Rng rng(5);
  HierarchicalEncoder enc(1, HierarchySpec::uniform(2, 2), {}, false, rng);
  auto p0 = enc.networks()[0].parameters();
  auto p1 = enc.networks()[1].parameters();
  p0[0][0] = 0.4;   // x -> logit_0
  p0[1][0] = -0.2;  // bias_0
  p1[0][0] = 0.3;   // x -> logit_1
  p1[0][1] = 2.5;   // zeta_0 -> logit_1
  p1[1][0] = -1.0;  // bias_1
  const double beta = 3.0;
  const std::size_t n = 1'000'000;
  const Tensor x = Tensor::filled({n, 1}, 1.0);
  Tape tape;
  const auto s = enc.sample(tape, x, uniform_noise(n, 2, rng), beta, false);
  std::array<double, 4> counts{};
  for (std::size_t r = 0; r < n; ++r) counts[static_cast<std::size_t>(s.z.at(r, 0) + 2 * s.z.at(r, 1))] += 1;

  // Exact: P(z0) * P(z1 | zeta_0) integrated over r(zeta_0 | z0).
  const double q0 = sigmoid(0.4 - 0.2);
  std::vector<double> nodes, weights;
  oracle::gauss_legendre(40, nodes, weights);
  double q1_given_one = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    q1_given_one += weights[i] * beta * std::exp(beta * nodes[i]) / std::expm1(beta) * sigmoid(-0.7 + 2.5 * nodes[i]);
  const double q1_given_zero = sigmoid(-0.7);
  const std::array<double, 4> exact{(1 - q0) * (1 - q1_given_zero), q0 * (1 - q1_given_one),
                                    (1 - q0) * q1_given_zero, q0 * q1_given_one};
  for (std::size_t k = 0; k < 4; ++k) {
    const double p = counts[k] / n;
    EXPECT_NEAR(p, exact[k], 3 * std::sqrt(exact[k] * (1 - exact[k]) / n)) << "outcome " << k;
  }
}

TEST(TapeOps, ZetaGradientMatchesPartial) {
  Tensor q = Tensor::from_values({1, 3}, {0.3, 0.6, 0.9}, true);
  const Tensor rho = Tensor::from_values({1, 3}, {0.95, 0.2, 0.5});
  Tape tape;
  tape.backward(tape.sum(spike_exp_zeta(tape, rho, q, 5.0)));
  for (std::size_t l = 0; l < 3; ++l) EXPECT_NEAR(q.grad()[l], spike_exp_inverse_cdf_dq(rho[l], q[l], 5.0), 1e-12);
  EXPECT_EQ(q.grad()[1], 0.0);
}

TEST(TapeOps, EntropyAndCrossEntropyRows) {
  const Tensor q = Tensor::from_values({2, 2}, {0.25, 0.5, 0.3, 0.9}, true);
  Tape tape;
  const Tensor h = entropy(tape, q);
  const std::vector<double> row0{0.25, 0.5};
  EXPECT_NEAR(h[0], bernoulli_entropy(row0), 1e-14);
  const Tensor logits = Tensor::from_values({2}, {std::log(0.7 / 0.3), 0.0});
  const Tensor ce = bernoulli_cross_entropy_logits(tape, q, logits);
  const std::vector<double> row1{0.3, 0.9}, p{0.7, 0.5};
  EXPECT_NEAR(ce[1], bernoulli_cross_entropy(row1, p), 1e-12);
}

TEST(Schedule, LinearEndpoints) {
  // Epochs are indexed 0 .. epochs - 1.
  EXPECT_EQ(linear_schedule(0, 10, 1.0, 10.0), 1.0);
  EXPECT_EQ(linear_schedule(9, 10, 1.0, 10.0), 10.0);
  EXPECT_NEAR(linear_schedule(3, 7, 1.0, 10.0), 5.5, 1e-15);
}

}  // namespace
}  // namespace qvae::reparam
