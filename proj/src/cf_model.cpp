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

#include "attrimix/cf_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "attrimix/errors.hpp"
#include "attrimix/random.hpp"

namespace attrimix {

FeaturePartition cf_partition(std::size_t embedding_dim,
                              std::size_t content_dim) {
  return FeaturePartition::contiguous({{kUserContent, content_dim},
                                       {kUserEmbedding, embedding_dim},
                                       {kItemContent, content_dim},
                                       {kItemEmbedding, embedding_dim}});
}

namespace {

struct GroupLayout {
  std::size_t offset = 0;
  std::size_t width = 0;
};

std::map<std::string, GroupLayout> cf_layout(const InterpretationScheme& scheme) {
  std::map<std::string, GroupLayout> layout;
  for (const auto& g : scheme.partition().groups()) {
    const auto [lo, hi] = std::minmax_element(g.features.begin(), g.features.end());
    if (*hi - *lo + 1 != g.features.size()) {
      throw ConfigError("collaborative-filtering group '" + g.name +
                        "' must cover a contiguous feature range");
    }
    layout[g.name] = {*lo, g.features.size()};
  }
  for (const char* name : {kUserContent, kUserEmbedding, kItemContent, kItemEmbedding}) {
    if (!layout.contains(name)) {
      throw ConfigError(std::string("collaborative-filtering scheme lacks group '") +
                        name + "'");
    }
  }
  if (layout.size() != 4) {
    throw ConfigError(
        "collaborative-filtering scheme must have exactly the groups c_u, p_u, "
        "c_i, q_i");
  }
  if (layout[kUserContent].width != layout[kItemContent].width) {
    throw ConfigError("c_u and c_i must have the same width");
  }
  return layout;
}

Parameter normal_parameter(std::string name, Index rows, Index cols,
                           double stddev, Rng& rng) {
  boost::random::normal_distribution<double> normal(0.0, stddev);
  Parameter p{std::move(name), Tensor(rows, cols), true};
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) p.value(r, c) = normal(rng);
  }
  return p;
}

Parameter glorot_parameter(std::string name, Index rows, Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  boost::random::uniform_real_distribution<double> dist(-limit, limit);
  Parameter p{std::move(name), Tensor(rows, cols), true};
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) p.value(r, c) = dist(rng);
  }
  return p;
}

}  // namespace

CfModel::CfModel(const InteractionDataset& data, InterpretationScheme scheme,
                 std::vector<std::vector<std::size_t>> hidden_widths,
                 Activation activation, std::uint64_t seed)
    : user_features_(data.user_features),
      item_features_(data.item_features),
      mlp_(scheme, std::move(hidden_widths), activation, seed) {
  const auto layout = cf_layout(mlp_.scheme());
  std::vector<std::pair<std::size_t, std::string>> order;
  for (const auto& [name, g] : layout) order.emplace_back(g.offset, name);
  std::sort(order.begin(), order.end());
  for (const auto& [offset, name] : order) group_order_.push_back(name);

  Rng rng = make_rng(seed ^ 0x9E3779B97F4A7C15ULL);
  const auto emb_u = static_cast<Index>(layout.at(kUserEmbedding).width);
  const auto emb_i = static_cast<Index>(layout.at(kItemEmbedding).width);
  const auto content = static_cast<Index>(layout.at(kUserContent).width);
  user_embedding_ = normal_parameter("user_embedding",
                                     static_cast<Index>(data.num_users), emb_u, 0.01, rng);
  item_embedding_ = normal_parameter("item_embedding",
                                     static_cast<Index>(data.num_items), emb_i, 0.01, rng);
  user_content_ = glorot_parameter("user_content", user_features_.cols(), content, rng);
  item_content_ = glorot_parameter("item_content", item_features_.cols(), content, rng);
}

Var CfModel::embed(Tape& tape, const Batch& batch, bool trainable) const {
  if (batch.users.size() != batch.items.size() || batch.users.size() != batch.size()) {
    throw DimensionError("CfModel: users, items and labels differ in length");
  }
  auto bind = [&](const Parameter& p) {
    return trainable ? tape.parameter(p) : tape.constant(p.value);
  };
  const Var pu = gather_rows(bind(user_embedding_), std::span<const std::size_t>(batch.users));
  const Var qi = gather_rows(bind(item_embedding_), std::span<const std::size_t>(batch.items));
  const Var cu = matmul(gather_rows(tape.constant(user_features_),
                                    std::span<const std::size_t>(batch.users)),
                        bind(user_content_));
  const Var ci = matmul(gather_rows(tape.constant(item_features_),
                                    std::span<const std::size_t>(batch.items)),
                        bind(item_content_));
  std::vector<Var> parts;
  for (const auto& name : group_order_) {
    if (name == kUserContent) parts.push_back(cu);
    if (name == kUserEmbedding) parts.push_back(pu);
    if (name == kItemContent) parts.push_back(ci);
    if (name == kItemEmbedding) parts.push_back(qi);
  }
  return concat_cols(std::span<const Var>(parts));
}

Var CfModel::forward(Tape& tape, const Batch& batch) const {
  return mlp_.forward(tape, embed(tape, batch, true));
}

Tensor CfModel::forward(const Batch& batch) const {
  Tape tape;
  return mlp_.forward(embed(tape, batch, false).value());
}

std::vector<Parameter*> CfModel::parameters() {
  std::vector<Parameter*> out = {&user_embedding_, &item_embedding_,
                                 &user_content_, &item_content_};
  for (Parameter* p : mlp_.parameters()) out.push_back(p);
  return out;
}

std::size_t CfModel::parameter_count() const {
  return static_cast<std::size_t>(user_embedding_.value.size() +
                                  item_embedding_.value.size() +
                                  user_content_.value.size() +
                                  item_content_.value.size()) +
         mlp_.parameter_count();
}

std::size_t count_mlp_parameters(
    const InterpretationScheme& scheme,
    const std::vector<std::vector<std::size_t>>& hidden_widths) {
  const std::size_t h = scheme.num_subsets();
  auto reach = [&](const std::vector<std::size_t>& widths, std::size_t i) {
    std::size_t cols = widths[i];
    for (std::size_t j : scheme.children(i)) cols += widths[j];
    return cols;
  };
  std::size_t n = 0;
  for (std::size_t i = 0; i < h; ++i) {
    n += hidden_widths.front()[i] * (scheme.support_size(i) + 1);
  }
  for (std::size_t k = 1; k < hidden_widths.size(); ++k) {
    for (std::size_t i = 0; i < h; ++i) {
      n += hidden_widths[k][i] * (reach(hidden_widths[k - 1], i) + 1);
    }
  }
  for (std::size_t i = 0; i < h; ++i) n += reach(hidden_widths.back(), i) + 1;
  return n;
}

std::size_t count_cf_parameters(
    std::size_t num_users, std::size_t num_items, std::size_t user_feature_dim,
    std::size_t item_feature_dim, const InterpretationScheme& scheme,
    const std::vector<std::vector<std::size_t>>& hidden_widths) {
  const auto layout = cf_layout(scheme);
  return num_users * layout.at(kUserEmbedding).width +
         num_items * layout.at(kItemEmbedding).width +
         (user_feature_dim + item_feature_dim) * layout.at(kUserContent).width +
         count_mlp_parameters(scheme, hidden_widths);
}

CfTrainingData::CfTrainingData(const EvalSplit& split, std::size_t num_items,
                               std::size_t negatives_per_positive)
    : split_(split),
      num_items_(num_items),
      negatives_per_positive_(negatives_per_positive) {}

void CfTrainingData::begin_epoch(Rng& rng) {
  users_.clear();
  items_.clear();
  labels_.clear();
  boost::random::uniform_int_distribution<std::size_t> item(0, num_items_ - 1);
  std::vector<std::size_t> order;
  for (const auto& us : split_.users) {
    for (std::size_t i : us.train_items) {
      users_.push_back(us.user);
      items_.push_back(i);
      labels_.push_back(1.0);
      for (std::size_t k = 0; k < negatives_per_positive_; ++k) {
        std::size_t j = item(rng);
        while (is_positive(split_, us.user, j)) j = item(rng);
        users_.push_back(us.user);
        items_.push_back(j);
        labels_.push_back(0.0);
      }
    }
  }
  order.resize(users_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);
  std::vector<std::size_t> u(order.size()), it(order.size());
  std::vector<double> y(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    u[k] = users_[order[k]];
    it[k] = items_[order[k]];
    y[k] = labels_[order[k]];
  }
  users_ = std::move(u);
  items_ = std::move(it);
  labels_ = std::move(y);
}

std::size_t CfTrainingData::num_batches(std::size_t batch_size) const {
  return (users_.size() + batch_size - 1) / batch_size;
}

Batch CfTrainingData::batch(std::size_t index, std::size_t batch_size) const {
  const std::size_t begin = index * batch_size;
  const std::size_t end = std::min(users_.size(), begin + batch_size);
  Batch b;
  b.users.assign(users_.begin() + static_cast<std::ptrdiff_t>(begin),
                 users_.begin() + static_cast<std::ptrdiff_t>(end));
  b.items.assign(items_.begin() + static_cast<std::ptrdiff_t>(begin),
                 items_.begin() + static_cast<std::ptrdiff_t>(end));
  b.labels = Eigen::Map<const Eigen::VectorXd>(labels_.data() + begin,
                                               static_cast<Index>(end - begin));
  return b;
}

double CfTrainingData::validate(const ExpertModel& model,
                                const SelectionConfig& inference) const {
  return evaluate_ranking(model, split_, inference, HeldOut::kValidation).hr;
}

RankingReport evaluate_ranking(const ExpertModel& model, const EvalSplit& split,
                               const SelectionConfig& inference, HeldOut which,
                               std::size_t k) {
  RankingReport report;
  if (split.users.empty()) return report;
  const std::size_t per_user = 1 + split.users.front().negatives.size();
  // Score users in chunks to bound memory.
  constexpr std::size_t kUsersPerChunk = 64;
  std::vector<Tensor> positive_raw;
  double hr = 0.0;
  double ndcg = 0.0;
  for (std::size_t begin = 0; begin < split.users.size(); begin += kUsersPerChunk) {
    const std::size_t end = std::min(split.users.size(), begin + kUsersPerChunk);
    Batch b;
    for (std::size_t u = begin; u < end; ++u) {
      const auto& us = split.users[u];
      if (us.negatives.size() + 1 != per_user) {
        throw ContractError("evaluate_ranking: users have different negative counts");
      }
      b.users.push_back(us.user);
      b.items.push_back(which == HeldOut::kTest ? us.test_item : us.validation_item);
      for (std::size_t j : us.negatives) {
        b.users.push_back(us.user);
        b.items.push_back(j);
      }
    }
    b.labels = Eigen::VectorXd::Zero(static_cast<Index>(b.users.size()));
    const Tensor raw = model.forward(b);
    const MixturePrediction pred = mixture_from_raw(raw, model.scheme(), inference);
    Tensor pos(static_cast<Index>(end - begin), raw.cols());
    for (std::size_t u = begin; u < end; ++u) {
      const std::size_t base = (u - begin) * per_user;
      const auto& us = split.users[u];
      std::vector<double> neg_scores(per_user - 1);
      for (std::size_t q = 1; q < per_user; ++q) {
        neg_scores[q - 1] = pred.y_hat(static_cast<Index>(base + q));
      }
      const std::size_t item = b.items[base];
      const std::size_t rank =
          rank_of_positive(pred.y_hat(static_cast<Index>(base)), item, neg_scores,
                           us.negatives);
      report.ranks.push_back(rank);
      hr += hr_at_k(rank, k);
      ndcg += ndcg_at_k(rank, k);
      pos.row(static_cast<Index>(u - begin)) = raw.row(static_cast<Index>(base));
    }
    positive_raw.push_back(std::move(pos));
  }
  const auto n = static_cast<double>(split.users.size());
  report.hr = hr / n;
  report.ndcg = ndcg / n;
  Index rows = 0;
  for (const auto& t : positive_raw) rows += t.rows();
  Tensor all(rows, positive_raw.front().cols());
  Index at = 0;
  for (const auto& t : positive_raw) {
    all.middleRows(at, t.rows()) = t;
    at += t.rows();
  }
  report.positives = mixture_from_raw(all, model.scheme(), inference);
  return report;
}

}  // namespace attrimix
