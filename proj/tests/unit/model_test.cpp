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
#include <filesystem>
#include <fstream>

#include "oracles/gradcheck.hpp"
#include "oracles/oracles.hpp"
#include "qvae/diff/checkpoint.hpp"
#include "qvae/model/train.hpp"

namespace qvae::model {
namespace {

using diff::Tape;
using diff::Tensor;

const std::vector<double> kPixels{1, 0, 1, 1, 0, 0};

VaeConfig tiny(PriorKind kind, double gamma = 0.0) {
  VaeConfig c;
  c.latent_size = 4;
  c.groups = 2;
  c.encoder_hidden = {};
  c.decoder_hidden = {};
  c.prior = kind;
  c.gamma = gamma;
  c.seed = 3;
  return c;
}

Tensor repeat(const std::vector<double>& row, std::size_t n) {
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) v.insert(v.end(), row.begin(), row.end());
  return Tensor::from_values({n, row.size()}, std::move(v));
}

// Fixed, non-trivial prior couplings so the cross-entropy matters.
void set_prior(Dvae& m, std::uint64_t seed) {
  auto* p = dynamic_cast<BoltzmannPrior*>(m.prior());
  ASSERT_NE(p, nullptr);
  Rng rng(seed);
  auto h = const_cast<Tensor&>(p->h()).values();
  auto w = const_cast<Tensor&>(p->w()).values();
  for (double& v : h) v = 2 * uniform01(rng) - 1;
  for (double& v : w) v = 2 * uniform01(rng) - 1;
  p->refresh_log_z();
  p->refresh_negative_phase();
}

// Larger encoder and decoder weights than the default initialisation.
void spread_weights(Dvae& m, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& net : m.encoder().networks())
    for (auto t : net.parameters())
      for (double& v : t.values()) v = 1.5 * (2 * uniform01(rng) - 1);
  for (auto t : m.decoder().parameters())
    for (double& v : t.values()) v = 1.5 * (2 * uniform01(rng) - 1);
}

struct MeanSe {
  double mean = 0.0, se = 0.0;
};

MeanSe batch_mean_se(const std::vector<double>& batch_means) {
  const double n = static_cast<double>(batch_means.size());
  MeanSe out;
  for (double v : batch_means) out.mean += v / n;
  double var = 0.0;
  for (double v : batch_means) var += (v - out.mean) * (v - out.mean) / (n - 1);
  out.se = std::sqrt(var / n);
  return out;
}

TEST(Config, ErrorsNameTheField) {
  auto expect_field = [](const nlohmann::json& j, const std::string& field) {
    try {
      VaeConfig::from_json(j);
      ADD_FAILURE() << "accepted " << j.dump();
    } catch (const ConfigError& e) {
      EXPECT_EQ(e.field(), field) << e.what();
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos);
    }
  };
  expect_field({{"prior", "rbm"}}, "latent_size");
  expect_field({{"latent_size", 8}}, "prior");
  expect_field({{"latent_size", 9}, {"groups", 2}, {"prior", "rbm"}}, "groups");
  expect_field({{"latent_size", 8}, {"prior", {{"kind", "rbm"}, {"gamma", 1.0}}}}, "prior.gamma");
  expect_field({{"latent_size", 8}, {"prior", "rbm"}, {"learning_rat", 0.1}}, "learning_rat");
  expect_field({{"latent_size", "eight"}, {"prior", "rbm"}}, "latent_size");
  expect_field({{"latent_size", 8}, {"prior", "boltzmann"}}, "prior.kind");
}

TEST(Config, JsonRoundTrip) {
  const auto c = VaeConfig::from_json({{"latent_size", 8},
                                       {"groups", 2},
                                       {"prior", {{"kind", "qbm"}, {"gamma", 0.5}, {"left", 3}}},
                                       {"beta", {{"start", 2.0}, {"end", 5.0}}}});
  const auto back = VaeConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(back.left_units(), 3u);
  EXPECT_EQ(back.gamma, 0.5);
  EXPECT_EQ(back.beta_end, 5.0);
}

TEST(Elbo, PerfectDecoderHasZeroAutoencoding) {
  Rng init(1);
  Dvae m(tiny(PriorKind::kBernoulli), 6, init);
  auto params = m.decoder().parameters();
  for (double& v : params.front().values()) v = 0.0;
  auto bias = params.back().values();
  for (std::size_t i = 0; i < 6; ++i) bias[i] = kPixels[i] ? 1000.0 : -1000.0;
  Tape tape;
  Rng rng(2);
  const auto b = m.elbo(tape, repeat(kPixels, 10), rng, 5.0, false);
  EXPECT_NEAR(b.autoencoding, 0.0, 1e-12);
}

TEST(Elbo, MatchingBernoulliPriorHasZeroKl) {
  auto c = tiny(PriorKind::kBernoulli);
  c.groups = 1;
  Rng init(1);
  Dvae m(c, 6, init);
  auto enc = m.encoder().networks().front().parameters();
  for (double& v : enc.front().values()) v = 0.0;
  const std::vector<double> logits{-1.0, 0.3, 2.0, -0.2};
  std::copy(logits.begin(), logits.end(), enc.back().values().begin());
  auto* prior = dynamic_cast<BernoulliPrior*>(m.prior());
  std::copy(logits.begin(), logits.end(), const_cast<Tensor&>(prior->logits()).values().begin());
  Tape tape;
  Rng rng(3);
  const auto b = m.elbo(tape, repeat(kPixels, 5), rng, 5.0, false);
  EXPECT_NEAR(b.entropy - b.cross_entropy, 0.0, 1e-12);
}

TEST(Elbo, AdditivityIsExact) {
  for (auto kind : {PriorKind::kGaussian, PriorKind::kBernoulli, PriorKind::kRbm}) {
    auto c = tiny(kind);
    if (kind == PriorKind::kGaussian) c.groups = 1;
    Rng init(4);
    Dvae m(c, 6, init);
    if (m.prior()) m.prior()->refresh_log_z();
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
      Tape tape;
      const auto b = m.elbo(tape, repeat(kPixels, 7), rng, 3.0, true);
      EXPECT_EQ(b.total, b.autoencoding + b.entropy - b.cross_entropy);
      double rows = 0.0;
      for (double v : b.rows.values()) rows += v / 7;
      EXPECT_NEAR(rows, b.total, 1e-12);
      EXPECT_NEAR(b.loss.item(), -b.total, 1e-12);
    }
  }
}

TEST(Elbo, TinyModelMatchesQuadrature) {
  Rng init(6);
  Dvae m(tiny(PriorKind::kRbm), 6, init);
  spread_weights(m, 7);
  set_prior(m, 8);
  const double beta = 5.0;
  const double exact = oracle::TinyVae(m, beta).elbo(kPixels);
  Rng rng(9);
  std::vector<double> means;
  for (int b = 0; b < 20; ++b) {
    Tape tape;
    means.push_back(m.elbo(tape, repeat(kPixels, 5000), rng, beta, false).total);
  }
  const auto s = batch_mean_se(means);
  EXPECT_NEAR(s.mean, exact, 3 * s.se) << "se " << s.se;
}

TEST(Elbo, SmoothTermsMatchFiniteDifferences) {
  Rng init(10);
  Dvae m(tiny(PriorKind::kRbm), 6, init);
  spread_weights(m, 11);
  Rng rng(12);
  const Tensor noise = m.draw_noise(8, rng);
  const Tensor x = repeat(kPixels, 8);
  auto loss = [&](Tape& tape) {
    const auto latent = m.encoder().sample(tape, x, noise, 4.0, false);
    const auto ae = tape.bernoulli_log_likelihood(x, m.decode(tape, latent.zeta, false));
    return tape.scale(tape.mean(tape.add(ae, reparam::entropy(tape, latent.q))), -1.0);
  };
  std::vector<Tensor> params = m.encoder().parameters();
  for (const auto& t : m.decoder().parameters()) params.push_back(t);
  const auto r = oracle::grad_check(loss, params);
  EXPECT_LE(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Elbo, PriorGradientIsPositiveMinusNegativePhase) {
  Rng init(13);
  Dvae m(tiny(PriorKind::kRbm), 6, init);
  set_prior(m, 14);
  auto* p = dynamic_cast<BoltzmannPrior*>(m.prior());
  for (auto& t : m.parameters()) t.zero_grad();
  Tape tape;
  Rng rng(15);
  const auto b = m.elbo(tape, repeat(kPixels, 50), rng, 4.0, false);
  tape.backward(b.loss);
  const auto exact = rbm::exact_moments(p->params().classical);
  const auto z = b.latent.z.values();
  for (std::size_t l = 0; l < 4; ++l) {
    double mean = 0.0;
    for (std::size_t r = 0; r < 50; ++r) mean += z[r * 4 + l] / 50;
    // loss = -ELBO, so its gradient is +dCE/dh.
    EXPECT_NEAR(p->h().grad()[l], mean - exact.first[l], 1e-12) << l;
  }
}

TEST(Elbo, GradientIsUnbiased) {
  Rng init(16);
  Dvae m(tiny(PriorKind::kRbm), 6, init);
  spread_weights(m, 17);
  set_prior(m, 18);
  auto* p = dynamic_cast<BoltzmannPrior*>(m.prior());
  const double beta = 4.0;
  struct Probe {
    std::string name;
    Tensor t;
    std::size_t i;
  };
  const std::vector<Probe> probes{{"decoder bias", m.decoder().parameters().back(), 2},
                                  {"encoder group 0 bias", m.encoder().networks()[0].parameters().back(), 1},
                                  {"encoder group 1 weight", m.encoder().networks()[1].parameters().front(), 3},
                                  {"prior h", p->h(), 0},
                                  {"prior w", p->w(), 1}};
  std::vector<std::vector<double>> batch_grads(probes.size());
  Rng rng(19);
  for (int b = 0; b < 40; ++b) {
    for (auto& t : m.parameters()) t.zero_grad();
    Tape tape;
    tape.backward(m.elbo(tape, repeat(kPixels, 5000), rng, beta, false).loss);
    for (std::size_t k = 0; k < probes.size(); ++k) batch_grads[k].push_back(-probes[k].t.grad()[probes[k].i]);
  }
  for (std::size_t k = 0; k < probes.size(); ++k) {
    auto values = Tensor(probes[k].t).values();
    const double saved = values[probes[k].i];
    const double step = 1e-4;
    values[probes[k].i] = saved + step;
    const double up = oracle::TinyVae(m, beta).elbo(kPixels);
    values[probes[k].i] = saved - step;
    const double down = oracle::TinyVae(m, beta).elbo(kPixels);
    values[probes[k].i] = saved;
    const double numeric = (up - down) / (2 * step);
    const auto s = batch_mean_se(batch_grads[k]);
    EXPECT_NEAR(s.mean, numeric, 3 * s.se + 1e-6) << probes[k].name << " se " << s.se;
  }
}

TEST(Elbo, KlEstimateIsRarelyNegative) {
  Rng init(20);
  Dvae m(tiny(PriorKind::kRbm), 6, init);
  spread_weights(m, 21);
  set_prior(m, 22);
  Rng rng(23);
  int violations = 0;
  const int batches = 300;
  for (int b = 0; b < batches; ++b) {
    Tape tape;
    const auto r = m.elbo(tape, repeat(kPixels, 10000), rng, 4.0, false);
    if (r.entropy - r.cross_entropy > 0.0) ++violations;
  }
  EXPECT_LE(violations, 1);  // 0.3% of 300
}

TEST(Qelbo, BoundsTheTrueElboRowByRow) {
  Rng init(24);
  auto c = tiny(PriorKind::kQbm, 1.0);
  Dvae m(c, 6, init);
  spread_weights(m, 25);
  set_prior(m, 26);
  auto* p = dynamic_cast<BoltzmannPrior*>(m.prior());
  ASSERT_EQ(p->log_z_method(), LogZMethod::kExact);
  const auto oracle = qbm::exact_quantum_oracle(p->params());
  EXPECT_NEAR(p->log_z(), oracle.log_z, 1e-10);
  Rng rng(27);
  for (int batch = 0; batch < 10; ++batch) {
    Tape tape;
    const auto b = m.qelbo(tape, repeat(kPixels, 20), m.draw_noise(20, rng), 4.0, false);
    const auto z = b.latent.z.values();
    double true_total = 0.0;
    for (std::size_t r = 0; r < 20; ++r) {
      rbm::State s(z.begin() + r * 4, z.begin() + (r + 1) * 4);
      const double bound = qbm::classical_energy_of_state(p->params(), s) + p->log_z();
      const double log_p = std::log(oracle.diagonal[rbm::index_from_state(s)]);
      EXPECT_NEAR(p->log_prob(s), log_p, 1e-10);
      const double true_row = b.rows.values()[r] + bound + log_p;
      EXPECT_LE(b.rows.values()[r], true_row + 1e-12);
      true_total += true_row / 20;
    }
    EXPECT_LE(b.total, true_total);
  }
}

TEST(Qelbo, WeakFieldMatchesClassical) {
  Rng init_a(28), init_b(28);
  Dvae classical(tiny(PriorKind::kRbm), 6, init_a);
  Dvae quantum(tiny(PriorKind::kQbm, 1e-4), 6, init_b);
  set_prior(classical, 29);
  set_prior(quantum, 29);
  Rng rng(30);
  const Tensor noise = classical.draw_noise(100, rng);
  Tape ta, tb;
  const double a = classical.elbo(ta, repeat(kPixels, 100), noise, 4.0, false).total;
  const double b = quantum.qelbo(tb, repeat(kPixels, 100), noise, 4.0, false).total;
  EXPECT_NEAR(a, b, 1e-6);
  EXPECT_THROW(classical.qelbo(ta, repeat(kPixels, 1), noise, 4.0, false), std::logic_error);
}

TEST(Elbo, SameSeedSameLoss) {
  for (auto kind : {PriorKind::kRbm, PriorKind::kQbm}) {
    double losses[2];
    for (double& loss : losses) {
      Rng init(31);
      Dvae m(tiny(kind, kind == PriorKind::kQbm ? 1.0 : 0.0), 6, init);
      m.prior()->refresh_log_z();
      Rng rng(32);
      Tape tape;
      loss = m.elbo(tape, repeat(kPixels, 9), rng, 2.0, true).loss.item();
    }
    EXPECT_EQ(losses[0], losses[1]);
  }
}

TEST(Schedule, BetaAndLearningRate) {
  VaeConfig c = tiny(PriorKind::kRbm);
  c.epochs = 50;
  c.learning_rate = 0.01;
  EXPECT_EQ(beta_at(c, 1), 1.0);
  EXPECT_EQ(beta_at(c, 50), 10.0);
  EXPECT_LT(beta_at(c, 10), beta_at(c, 11));
  EXPECT_EQ(learning_rate_at(c, 1), 0.01);
  EXPECT_NEAR(learning_rate_at(c, 11), 0.01 * std::pow(0.995, 10), 1e-15);
}

class TrainTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("qvae_model_test_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    Rng rng(40);
    train_ = data::bars_and_stripes(3, 60, rng);
    valid_ = data::bars_and_stripes(3, 20, rng);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  VaeConfig config(std::size_t epochs) const {
    VaeConfig c;
    c.latent_size = 4;
    c.groups = 2;
    c.encoder_hidden = {8};
    c.decoder_hidden = {8};
    c.prior = PriorKind::kRbm;
    c.batch_size = 20;
    c.epochs = epochs;
    c.learning_rate = 0.01;
    return c;
  }

  std::filesystem::path dir_;
  data::Dataset train_, valid_;
};

TEST_F(TrainTest, ZeroEpochsKeepsInitialisation) {
  Rng init(1);
  Dvae m(config(0), 9, init);
  std::vector<std::vector<double>> before;
  for (const auto& t : m.named_state()) before.emplace_back(t.tensor.values().begin(), t.tensor.values().end());
  const auto r = train(m, train_, valid_, {dir_, nullptr});
  EXPECT_TRUE(r.history.empty());
  ASSERT_TRUE(std::filesystem::exists(r.checkpoint));
  Rng other(2);
  Dvae restored(config(0), 9, other);
  load_model(restored, r.checkpoint);
  const auto after = restored.named_state();
  for (std::size_t k = 0; k < after.size(); ++k)
    EXPECT_TRUE(std::equal(before[k].begin(), before[k].end(), after[k].tensor.values().begin())) << after[k].name;
}

TEST_F(TrainTest, SameSeedSameMetrics) {
  std::vector<EpochMetrics> runs[2];
  for (auto& h : runs) {
    Rng init(3);
    Dvae m(config(3), 9, init);
    h = train(m, train_, valid_).history;
  }
  ASSERT_EQ(runs[0].size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    auto a = runs[0][e].to_json(), b = runs[1][e].to_json();
    a.erase("wallclock");
    b.erase("wallclock");
    EXPECT_EQ(a, b);
  }
  EXPECT_EQ(runs[0][0].beta, 1.0);
  EXPECT_EQ(runs[0][2].beta, 10.0);
}

TEST_F(TrainTest, WritesMetricsAndImproves) {
  Rng init(4);
  Dvae m(config(30), 9, init);
  const auto r = train(m, train_, valid_, {dir_, nullptr});
  ASSERT_FALSE(r.diverged) << r.divergence;
  EXPECT_GT(r.history.back().train_elbo, r.history.front().train_elbo);
  std::ifstream in(dir_ / "metrics.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"epoch", "elbo", "autoenc", "kl_or_bound", "logz", "beta", "lr", "wallclock"})
      EXPECT_TRUE(j.contains(key)) << key;
    ++lines;
  }
  EXPECT_EQ(lines, 30u);
}

TEST_F(TrainTest, DivergenceKeepsLastGoodCheckpoint) {
  auto c = config(5);
  c.prior = PriorKind::kBernoulli;
  Rng init(5);
  Dvae m(c, 9, init);
  // Finite parameters whose batch sum overflows.
  m.decoder().parameters().back().values()[0] = 1e308;
  const auto r = train(m, train_, valid_, {dir_, nullptr});
  EXPECT_TRUE(r.diverged);
  EXPECT_NE(r.divergence.find("epoch 1"), std::string::npos) << r.divergence;
  EXPECT_TRUE(r.history.empty());
  const auto cp = diff::load_checkpoint(r.checkpoint);
  EXPECT_EQ(cp.metadata.at("epoch"), 0);
}

}  // namespace
}  // namespace qvae::model
