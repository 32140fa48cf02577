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

#include "oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace qvae::oracle {

namespace {

double log_add(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double log_sigmoid(double a) { return a > 0 ? -std::log1p(std::exp(-a)) : a - std::log1p(std::exp(a)); }

bool bit(std::uint64_t s, std::size_t l) { return (s >> l) & 1u; }

}  // namespace

double Boltzmann::energy(std::uint64_t s) const {
  double e = 0.0;
  for (std::size_t l = 0; l < size(); ++l)
    if (bit(s, l)) e += h[l];
  for (std::size_t i = 0; i < left; ++i)
    for (std::size_t j = 0; j < right; ++j)
      if (bit(s, i) && bit(s, left + j)) e += w[i * right + j];
  return e;
}

double brute_log_z(const Boltzmann& b) {
  double acc = -INFINITY;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << b.size()); ++s) acc = log_add(acc, -b.energy(s));
  return acc;
}

std::vector<double> brute_probabilities(const Boltzmann& b) {
  const double lz = brute_log_z(b);
  std::vector<double> p(std::size_t{1} << b.size());
  for (std::uint64_t s = 0; s < p.size(); ++s) p[s] = std::exp(-b.energy(s) - lz);
  return p;
}

std::vector<double> brute_moments(const Boltzmann& b) {
  const auto p = brute_probabilities(b);
  std::vector<double> m(b.size() + b.left * b.right, 0.0);
  for (std::uint64_t s = 0; s < p.size(); ++s) {
    for (std::size_t l = 0; l < b.size(); ++l)
      if (bit(s, l)) m[l] += p[s];
    for (std::size_t i = 0; i < b.left; ++i)
      for (std::size_t j = 0; j < b.right; ++j)
        if (bit(s, i) && bit(s, b.left + j)) m[b.size() + i * b.right + j] += p[s];
  }
  return m;
}

DenseQuantum dense_quantum(const Boltzmann& b, double gamma) {
  using Eigen::MatrixXd;
  const std::size_t n = b.size();
  MatrixXd sx(2, 2), num(2, 2), id = MatrixXd::Identity(2, 2);
  sx << 0, 1, 1, 0;
  num << 0, 0, 0, 1;
  // Operator acting as `op` on each site in `sites` and as the identity elsewhere;
  // site 0 is the least significant bit of the basis index.
  auto embed = [&](const std::vector<std::pair<std::size_t, const MatrixXd*>>& ops) {
    MatrixXd m = MatrixXd::Identity(1, 1);
    for (std::size_t site = n; site-- > 0;) {
      const MatrixXd* factor = &id;
      for (const auto& [s, op] : ops)
        if (s == site) factor = op;
      m = Eigen::kroneckerProduct(m, *factor).eval();
    }
    return m;
  };
  const std::size_t dim = std::size_t{1} << n;
  MatrixXd h = MatrixXd::Zero(dim, dim);
  for (std::size_t l = 0; l < n; ++l) {
    h += gamma * embed({{l, &sx}});
    h += b.h[l] * embed({{l, &num}});
  }
  for (std::size_t i = 0; i < b.left; ++i)
    for (std::size_t j = 0; j < b.right; ++j) h += b.w[i * b.right + j] * embed({{i, &num}, {b.left + j, &num}});
  // Shift by the smallest diagonal entry so the exponential stays in range.
  const double shift = h.diagonal().minCoeff() - n * gamma;
  const MatrixXd rho = (-(h - shift * MatrixXd::Identity(dim, dim))).exp();
  DenseQuantum out;
  const double trace = rho.trace();
  out.log_z = std::log(trace) - shift;
  out.diagonal.resize(dim);
  out.first.assign(n, 0.0);
  for (std::size_t s = 0; s < dim; ++s) {
    out.diagonal[s] = rho(s, s) / trace;
    for (std::size_t l = 0; l < n; ++l)
      if (bit(s, l)) out.first[l] += out.diagonal[s];
  }
  return out;
}

double trotter_log_z(const Boltzmann& b, double gamma, std::size_t slices) {
  using Eigen::MatrixXd;
  const std::size_t n = b.size(), dim = std::size_t{1} << n;
  const double eps = gamma / static_cast<double>(slices);
  MatrixXd site(2, 2);
  site << std::cosh(eps), -std::sinh(eps), -std::sinh(eps), std::cosh(eps);
  MatrixXd k = MatrixXd::Identity(1, 1);
  for (std::size_t l = 0; l < n; ++l) k = Eigen::kroneckerProduct(k, site).eval();
  double shift = INFINITY;
  for (std::uint64_t s = 0; s < dim; ++s) shift = std::min(shift, b.energy(s));
  MatrixXd t = k;
  for (std::uint64_t s = 0; s < dim; ++s) t.row(s) *= std::exp(-(b.energy(s) - shift) / static_cast<double>(slices));
  MatrixXd p = MatrixXd::Identity(dim, dim);
  double log_scale = 0.0;
  for (std::size_t a = 0; a < slices; ++a) {
    p = (p * t).eval();
    const double m = p.cwiseAbs().maxCoeff();
    p /= m;
    log_scale += std::log(m);
  }
  return std::log(p.trace()) + log_scale - shift;
}

std::vector<double> single_site_path_law(double gamma, double h, std::size_t slices) {
  if (slices > 20) throw std::invalid_argument("single_site_path_law: too many slices to enumerate");
  const double eps = gamma / static_cast<double>(slices);
  std::vector<double> law(slices + 1, 0.0);
  double total = 0.0;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << slices); ++s) {
    double weight = 1.0;
    std::size_t up = 0;
    for (std::size_t a = 0; a < slices; ++a) {
      const bool here = bit(s, a), next = bit(s, (a + 1) % slices);
      weight *= here == next ? std::cosh(eps) : std::sinh(eps);
      if (here) {
        weight *= std::exp(-h / static_cast<double>(slices));
        ++up;
      }
    }
    law[up] += weight;
    total += weight;
  }
  for (double& p : law) p /= total;
  return law;
}

void gauss_legendre(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = 0.5 * (1.0 - x);
    weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);  // 2/((1-x^2)P'^2) scaled to [0, 1]
  }
}

TinyVae::Mlp TinyVae::read(const diff::Network& net) {
  const auto params = net.parameters();
  if (params.size() % 2) throw std::invalid_argument("TinyVae: expected weight/bias pairs (no batch norm)");
  Mlp mlp;
  for (std::size_t k = 0; k < params.size(); k += 2) {
    Layer layer;
    layer.in = params[k].shape()[0];
    layer.out = params[k].shape()[1];
    layer.w.assign(params[k].values().begin(), params[k].values().end());
    layer.b.assign(params[k + 1].values().begin(), params[k + 1].values().end());
    mlp.push_back(std::move(layer));
  }
  return mlp;
}

std::vector<double> TinyVae::run(const Mlp& net, const std::vector<double>& input) {
  std::vector<double> a = input;
  for (std::size_t k = 0; k < net.size(); ++k) {
    const auto& layer = net[k];
    std::vector<double> out(layer.b);
    for (std::size_t i = 0; i < layer.in; ++i)
      for (std::size_t o = 0; o < layer.out; ++o) out[o] += a[i] * layer.w[i * layer.out + o];
    if (k + 1 < net.size())
      for (double& v : out) v = std::max(v, 0.0);
    a = std::move(out);
  }
  return a;
}

TinyVae::TinyVae(const model::Dvae& m, double beta, std::size_t nodes) : beta_(beta) {
  auto& model = const_cast<model::Dvae&>(m);
  if (model.config().batch_norm || model.gaussian()) throw std::invalid_argument("TinyVae: unsupported model");
  latent_ = model.latent_size();
  groups_ = model.encoder().spec().group_sizes;
  for (const auto& net : model.encoder().networks()) encoder_.push_back(read(net));
  decoder_ = read(model.decoder());
  if (auto* b = dynamic_cast<const model::BoltzmannPrior*>(model.prior())) {
    if (b->gamma() != 0.0) throw std::invalid_argument("TinyVae: quantum priors are not supported");
    boltzmann_ = true;
    prior_.left = model.config().left_units();
    prior_.right = model.config().right_units();
    prior_.h.assign(b->h().values().begin(), b->h().values().end());
    prior_.w.assign(b->w().values().begin(), b->w().values().end());
    log_z_ = brute_log_z(prior_);
  } else if (auto* p = dynamic_cast<const model::BernoulliPrior*>(model.prior())) {
    logits_.assign(p->logits().values().begin(), p->logits().values().end());
  } else {
    throw std::invalid_argument("TinyVae: unsupported prior");
  }
  gauss_legendre(nodes, nodes_, weights_);
}

template <class Body>
void TinyVae::integrate(std::uint64_t state, Body&& body) const {
  std::vector<std::size_t> active;
  for (std::size_t l = 0; l < latent_; ++l)
    if (bit(state, l)) active.push_back(l);
  const double norm = beta_ / std::expm1(beta_);
  std::vector<std::size_t> idx(active.size(), 0);
  std::vector<double> zeta(latent_, 0.0);
  while (true) {
    double w = 1.0;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const double t = nodes_[idx[k]];
      zeta[active[k]] = t;
      w *= weights_[idx[k]] * norm * std::exp(beta_ * t);
    }
    body(zeta, w);
    std::size_t k = 0;
    while (k < idx.size() && ++idx[k] == nodes_.size()) idx[k++] = 0;
    if (k == idx.size()) break;
  }
}

double TinyVae::log_prior(std::uint64_t state) const {
  if (boltzmann_) return -prior_.energy(state) - log_z_;
  double lp = 0.0;
  for (std::size_t l = 0; l < latent_; ++l) lp += log_sigmoid(bit(state, l) ? logits_[l] : -logits_[l]);
  return lp;
}

double TinyVae::log_likelihood(const std::vector<double>& x, const std::vector<double>& zeta) const {
  const auto a = run(decoder_, zeta);
  double ll = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) ll += x[d] * a[d] - (a[d] > 0 ? a[d] + std::log1p(std::exp(-a[d])) : std::log1p(std::exp(a[d])));
  return ll;
}

double TinyVae::log_posterior(const std::vector<double>& x, const std::vector<double>& zeta,
                              std::uint64_t state) const {
  std::vector<double> input = x;
  double lq = 0.0;
  std::size_t offset = 0;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    const auto logits = run(encoder_[g], input);
    for (std::size_t j = 0; j < groups_[g]; ++j)
      lq += log_sigmoid(bit(state, offset + j) ? logits[j] : -logits[j]);
    for (std::size_t j = 0; j < groups_[g]; ++j) input.push_back(zeta[offset + j]);
    offset += groups_[g];
  }
  return lq;
}

double TinyVae::elbo(const std::vector<double>& x) const {
  double total = 0.0;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << latent_); ++s) {
    const double lp = log_prior(s);
    integrate(s, [&](const std::vector<double>& zeta, double w) {
      const double lq = log_posterior(x, zeta, s);
      total += w * std::exp(lq) * (log_likelihood(x, zeta) + lp - lq);
    });
  }
  return total;
}

double TinyVae::log_marginal(const std::vector<double>& x) const {
  double acc = -INFINITY;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << latent_); ++s) {
    double inner = 0.0;
    integrate(s, [&](const std::vector<double>& zeta, double w) { inner += w * std::exp(log_likelihood(x, zeta)); });
    acc = log_add(acc, log_prior(s) + std::log(inner));
  }
  return acc;
}

}  // namespace qvae::oracle
