/*
 * Copyright 2026 The attrimix Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// Shared helpers for the unit and acceptance tests: random schemes and
// networks, a plain Eigen reference forward that never touches the tape, and
// central finite differences.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "attrimix/masked_network.hpp"
#include "attrimix/random.hpp"
#include "attrimix/scheme.hpp"

namespace attrimix::testing {

inline std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
  return boost::random::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return boost::random::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Tensor random_tensor(Rng& rng, Index rows, Index cols, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) t(r, c) = uniform_real(rng, lo, hi);
  }
  return t;
}

// Contiguous groups G0.. of 1-3 features, up to max_h distinct subsets.
inline InterpretationScheme random_scheme(Rng& rng, std::size_t max_h = 4,
                                          std::size_t max_groups = 3) {
  const std::size_t groups = uniform_index(rng, 1, max_groups);
  std::vector<std::pair<std::string, std::size_t>> sizes;
  for (std::size_t g = 0; g < groups; ++g) {
    sizes.emplace_back("G" + std::to_string(g), uniform_index(rng, 1, 3));
  }
  const std::size_t possible = (std::size_t{1} << groups) - 1;
  const std::size_t h = uniform_index(rng, 1, std::min(max_h, possible));
  std::vector<std::size_t> codes;
  for (std::size_t c = 1; c <= possible; ++c) codes.push_back(c);
  shuffle(codes, rng);
  codes.resize(h);
  std::vector<GroupSet> subsets;
  for (std::size_t code : codes) {
    GroupSet s;
    for (std::size_t g = 0; g < groups; ++g) {
      if (code & (std::size_t{1} << g)) s.push_back(g);
    }
    subsets.push_back(s);
  }
  return build_scheme(FeaturePartition::contiguous(sizes), subsets);
}

inline std::vector<std::vector<std::size_t>> random_widths(Rng& rng, std::size_t h,
                                                           std::size_t max_layers = 3,
                                                           std::size_t max_width = 8) {
  const std::size_t layers = uniform_index(rng, 1, max_layers);
  std::vector<std::vector<std::size_t>> widths(layers);
  for (auto& layer : widths) {
    for (std::size_t i = 0; i < h; ++i) layer.push_back(uniform_index(rng, 1, max_width));
  }
  return widths;
}

// Subset inclusion recomputed from the group lists.
inline bool strictly_inside(const InterpretationScheme& s, std::size_t child,
                            std::size_t parent) {
  const auto& c = s.subset(child);
  const auto& p = s.subset(parent);
  return c.size() < p.size() && std::includes(p.begin(), p.end(), c.begin(), c.end());
}

inline bool feature_in_subset(const InterpretationScheme& s, std::size_t i,
                              std::size_t feature) {
  for (std::size_t g : s.subset(i)) {
    const auto& f = s.partition().group(g).features;
    if (std::find(f.begin(), f.end(), feature) != f.end()) return true;
  }
  return false;
}

inline Tensor act(const Tensor& z, Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return z;
    case Activation::kRelu:
      return z.cwiseMax(0.0);
    case Activation::kTanh:
      return z.array().tanh().matrix();
  }
  return z;
}

inline Tensor with_bias(const Tensor& h) {
  Tensor out(h.rows(), h.cols() + 1);
  out << h, Tensor::Ones(h.rows(), 1);
  return out;
}

// Plain reference of the stacked network. `live` weights are applied to own
// blocks and cross blocks; cross-block inputs come from a second pass that
// uses `frozen` weights. With live == frozen this is the ordinary forward;
// differentiating w.r.t. live alone reproduces the gradient-stop semantics.
inline Tensor reference_forward(const InterpretationScheme& scheme,
                                const std::vector<std::vector<std::size_t>>& hidden,
                                Activation hidden_act,
                                const std::vector<Tensor>& live,
                                const std::vector<Tensor>& frozen, const Tensor& x) {
  const std::size_t h = scheme.num_subsets();
  std::vector<std::vector<std::size_t>> widths = hidden;
  widths.emplace_back(h, 1);
  const auto offsets = [](const std::vector<std::size_t>& w) {
    std::vector<Index> off{0};
    for (std::size_t v : w) off.push_back(off.back() + static_cast<Index>(v));
    return off;
  };

  Tensor a_live, a_frozen;
  for (std::size_t k = 0; k < widths.size(); ++k) {
    const auto rows = offsets(widths[k]);
    const Activation a = k + 1 == widths.size() ? Activation::kTanh : hidden_act;
    if (k == 0) {
      Tensor z_live(x.rows(), rows.back()), z_frozen(x.rows(), rows.back());
      for (std::size_t i = 0; i < h; ++i) {
        Tensor xm = x;
        for (Index d = 0; d < x.cols(); ++d) {
          if (!feature_in_subset(scheme, i, static_cast<std::size_t>(d))) xm.col(d).setZero();
        }
        const auto blk = [&](const Tensor& w) {
          return w.middleRows(rows[i], rows[i + 1] - rows[i]);
        };
        z_live.middleCols(rows[i], rows[i + 1] - rows[i]) =
            with_bias(xm) * blk(live[0]).transpose();
        z_frozen.middleCols(rows[i], rows[i + 1] - rows[i]) =
            with_bias(xm) * blk(frozen[0]).transpose();
      }
      a_live = act(z_live, a);
      a_frozen = act(z_frozen, a);
      continue;
    }
    const auto cols = offsets(widths[k - 1]);
    const Index bias_col = cols.back();
    Tensor z_live(x.rows(), rows.back()), z_frozen(x.rows(), rows.back());
    for (std::size_t i = 0; i < h; ++i) {
      const Index r0 = rows[i], nr = rows[i + 1] - rows[i];
      Eigen::RowVectorXd b_live = live[k].block(r0, bias_col, nr, 1).transpose();
      Eigen::RowVectorXd b_frozen = frozen[k].block(r0, bias_col, nr, 1).transpose();
      Tensor zl = b_live.replicate(x.rows(), 1);
      Tensor zf = b_frozen.replicate(x.rows(), 1);
      for (std::size_t j = 0; j < h; ++j) {
        if (j != i && !strictly_inside(scheme, j, i)) continue;
        const Index c0 = cols[j], nc = cols[j + 1] - cols[j];
        const Tensor wl = live[k].block(r0, c0, nr, nc);
        const Tensor wf = frozen[k].block(r0, c0, nr, nc);
        // Own blocks read live activations; cross blocks the frozen ones.
        const Tensor& input = j == i ? a_live : a_frozen;
        zl += input.middleCols(c0, nc) * wl.transpose();
        zf += a_frozen.middleCols(c0, nc) * wf.transpose();
      }
      z_live.middleCols(r0, nr) = zl;
      z_frozen.middleCols(r0, nr) = zf;
    }
    a_live = act(z_live, a);
    a_frozen = act(z_frozen, a);
  }
  return a_live;
}

inline std::vector<Tensor> weights_of(const InterpretableMLP& mlp) {
  std::vector<Tensor> w;
  for (const auto& layer : mlp.layers()) w.push_back(layer.weight.value);
  return w;
}

// Central differences of a scalar function over every entry of `x`.
inline Tensor finite_difference(const std::function<double(const Tensor&)>& f,
                                const Tensor& x, double step = 1e-5) {
  Tensor g(x.rows(), x.cols());
  Tensor probe = x;
  for (Index r = 0; r < x.rows(); ++r) {
    for (Index c = 0; c < x.cols(); ++c) {
      const double orig = probe(r, c);
      probe(r, c) = orig + step;
      const double up = f(probe);
      probe(r, c) = orig - step;
      const double down = f(probe);
      probe(r, c) = orig;
      g(r, c) = (up - down) / (2.0 * step);
    }
  }
  return g;
}

// Largest elementwise relative error; `floor` keeps near-zero pairs from
// dividing by rounding noise.
inline double max_relative_error(const Tensor& a, const Tensor& b, double floor = 1e-6) {
  double worst = 0.0;
  for (Index r = 0; r < a.rows(); ++r) {
    for (Index c = 0; c < a.cols(); ++c) {
      const double denom = std::max({std::abs(a(r, c)), std::abs(b(r, c)), floor});
      worst = std::max(worst, std::abs(a(r, c) - b(r, c)) / denom);
    }
  }
  return worst;
}

// Textbook multi-head attention with dense weights (bias in the last column).
inline Tensor reference_mha(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& wq,
                            const Tensor& wk, const Tensor& wv, const Tensor& wo, std::size_t heads,
                            std::size_t dh) {
  const Tensor Q = with_bias(q) * wq.transpose();
  const Tensor K = with_bias(k) * wk.transpose();
  const Tensor V = with_bias(v) * wv.transpose();
  Tensor concat(q.rows(), static_cast<Index>(heads * dh));
  const auto d = static_cast<Index>(dh);
  for (std::size_t h = 0; h < heads; ++h) {
    const Index at = static_cast<Index>(h) * d;
    Tensor s = Q.middleCols(at, d) * K.middleCols(at, d).transpose() / std::sqrt(double(dh));
    for (Index r = 0; r < s.rows(); ++r) {
      const double m = s.row(r).maxCoeff();
      s.row(r) = (s.row(r).array() - m).exp().matrix();
      s.row(r) /= s.row(r).sum();
    }
    concat.middleCols(at, d) = s * V.middleCols(at, d);
  }
  return with_bias(concat) * wo.transpose();
}

}  // namespace attrimix::testing
