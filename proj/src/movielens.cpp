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

#include "attrimix/movielens.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "attrimix/errors.hpp"
#include "attrimix/random.hpp"

namespace attrimix {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t at = 0;
  while (true) {
    const std::size_t next = line.find("::", at);
    if (next == std::string::npos) {
      fields.push_back(line.substr(at));
      break;
    }
    fields.push_back(line.substr(at, next - at));
    at = next + 2;
  }
  return fields;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

template <typename Int>
Int parse_int(const std::string& text, const char* file, std::size_t line,
              const char* what) {
  Int value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(file, line, std::string("bad ") + what + " '" + text + "'");
  }
  return value;
}

struct UserMeta {
  std::string gender;
  int age = 0;
  std::string occupation;
};

struct MovieMeta {
  std::string decade;
  std::vector<std::string> genres;
};

// "Title (1995)" -> "1990"; "unknown" when no trailing year.
std::string decade_of(const std::string& title) {
  const auto close = title.find_last_of(')');
  const auto open = title.find_last_of('(');
  if (close == std::string::npos || open == std::string::npos || open > close ||
      close - open != 5) {
    return "unknown";
  }
  const std::string year = title.substr(open + 1, 4);
  if (!std::all_of(year.begin(), year.end(),
                   [](char c) { return c >= '0' && c <= '9'; })) {
    return "unknown";
  }
  return std::to_string(std::stoi(year) / 10 * 10);
}

std::vector<std::string> split_genres(const std::string& text) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (at <= text.size()) {
    const std::size_t next = text.find('|', at);
    std::string g = text.substr(at, next == std::string::npos ? std::string::npos
                                                              : next - at);
    if (!g.empty()) out.push_back(std::move(g));
    if (next == std::string::npos) break;
    at = next + 1;
  }
  return out;
}

std::ifstream open_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  return in;
}

}  // namespace

int age_bucket(int age) {
  if (age < 18) return 1;
  if (age < 25) return 18;
  if (age < 35) return 25;
  if (age < 45) return 35;
  if (age < 50) return 45;
  if (age < 56) return 50;
  return 56;
}

InteractionDataset load_movielens(const std::filesystem::path& dir) {
  auto ratings = open_file(dir / "ratings.dat");
  auto users = open_file(dir / "users.dat");
  auto movies = open_file(dir / "movies.dat");
  return load_movielens(ratings, users, movies);
}

InteractionDataset load_movielens(std::istream& ratings, std::istream& users,
                                  std::istream& movies) {
  InteractionDataset data;
  std::unordered_map<std::int64_t, std::size_t> user_index;
  std::unordered_map<std::int64_t, std::size_t> item_index;
  // (user, item) -> position in data.positives
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> seen;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ratings, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 4) {
      throw ParseError("ratings.dat", line_no,
                       "expected UserID::MovieID::Rating::Timestamp");
    }
    const auto uid = parse_int<std::int64_t>(f[0], "ratings.dat", line_no, "user id");
    const auto iid = parse_int<std::int64_t>(f[1], "ratings.dat", line_no, "movie id");
    parse_int<int>(f[2], "ratings.dat", line_no, "rating");  // value unused
    const auto ts = parse_int<std::int64_t>(f[3], "ratings.dat", line_no, "timestamp");

    auto [u_it, u_new] = user_index.try_emplace(uid, data.user_ids.size());
    if (u_new) data.user_ids.push_back(uid);
    auto [i_it, i_new] = item_index.try_emplace(iid, data.item_ids.size());
    if (i_new) data.item_ids.push_back(iid);

    Interaction x{u_it->second, i_it->second, ts, line_no};
    auto [s_it, fresh] = seen.try_emplace({x.user, x.item}, data.positives.size());
    if (fresh) {
      data.positives.push_back(x);
    } else {
      ++data.duplicates_removed;
      Interaction& kept = data.positives[s_it->second];
      if (x.timestamp >= kept.timestamp) kept = x;
    }
  }
  data.num_users = data.user_ids.size();
  data.num_items = data.item_ids.size();

  std::unordered_map<std::int64_t, UserMeta> user_meta;
  line_no = 0;
  while (std::getline(users, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 5) {
      throw ParseError("users.dat", line_no,
                       "expected UserID::Gender::Age::Occupation::Zip-code");
    }
    const auto uid = parse_int<std::int64_t>(f[0], "users.dat", line_no, "user id");
    UserMeta m;
    m.gender = f[1];
    m.age = parse_int<int>(f[2], "users.dat", line_no, "age");
    m.occupation = f[3];
    user_meta[uid] = std::move(m);
  }

  std::unordered_map<std::int64_t, MovieMeta> movie_meta;
  line_no = 0;
  while (std::getline(movies, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 3) {
      throw ParseError("movies.dat", line_no,
                       "expected MovieID::Title::Genres");
    }
    const auto iid = parse_int<std::int64_t>(f[0], "movies.dat", line_no, "movie id");
    movie_meta[iid] = MovieMeta{decade_of(f[1]), split_genres(f[2])};
  }

  // Vocabularies over the referenced ids only, sorted for stable layouts.
  static constexpr int kAges[] = {1, 18, 25, 35, 45, 50, 56};
  std::set<std::string> genders, occupations, decades, genres;
  for (std::int64_t uid : data.user_ids) {
    auto it = user_meta.find(uid);
    if (it == user_meta.end()) {
      throw ReferenceError("user " + std::to_string(uid) +
                           " has ratings but no entry in users.dat");
    }
    genders.insert(it->second.gender);
    occupations.insert(it->second.occupation);
  }
  for (std::int64_t iid : data.item_ids) {
    auto it = movie_meta.find(iid);
    if (it == movie_meta.end()) {
      throw ReferenceError("movie " + std::to_string(iid) +
                           " has ratings but no entry in movies.dat");
    }
    decades.insert(it->second.decade);
    genres.insert(it->second.genres.begin(), it->second.genres.end());
  }

  std::map<std::string, Index> user_col;
  for (int a : kAges) {
    user_col.emplace("age=" + std::to_string(a), static_cast<Index>(user_col.size()));
    data.user_feature_names.push_back("age=" + std::to_string(a));
  }
  for (const auto& g : genders) {
    user_col.emplace("gender=" + g, static_cast<Index>(user_col.size()));
    data.user_feature_names.push_back("gender=" + g);
  }
  for (const auto& o : occupations) {
    user_col.emplace("occupation=" + o, static_cast<Index>(user_col.size()));
    data.user_feature_names.push_back("occupation=" + o);
  }
  std::map<std::string, Index> item_col;
  for (const auto& d : decades) {
    item_col.emplace("decade=" + d, static_cast<Index>(item_col.size()));
    data.item_feature_names.push_back("decade=" + d);
  }
  for (const auto& g : genres) {
    item_col.emplace("genre=" + g, static_cast<Index>(item_col.size()));
    data.item_feature_names.push_back("genre=" + g);
  }

  data.user_features = Tensor::Zero(static_cast<Index>(data.num_users),
                                    static_cast<Index>(user_col.size()));
  for (std::size_t u = 0; u < data.num_users; ++u) {
    const auto& m = user_meta.at(data.user_ids[u]);
    const auto r = static_cast<Index>(u);
    data.user_features(r, user_col.at("age=" + std::to_string(age_bucket(m.age)))) = 1.0;
    data.user_features(r, user_col.at("gender=" + m.gender)) = 1.0;
    data.user_features(r, user_col.at("occupation=" + m.occupation)) = 1.0;
  }
  data.item_features = Tensor::Zero(static_cast<Index>(data.num_items),
                                    static_cast<Index>(item_col.size()));
  for (std::size_t i = 0; i < data.num_items; ++i) {
    const auto& m = movie_meta.at(data.item_ids[i]);
    const auto r = static_cast<Index>(i);
    data.item_features(r, item_col.at("decade=" + m.decade)) = 1.0;
    for (const auto& g : m.genres) data.item_features(r, item_col.at("genre=" + g)) = 1.0;
  }
  return data;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_mix(std::uint64_t& h, std::uint64_t value) {
  for (int b = 0; b < 8; ++b) {
    h ^= (value >> (8 * b)) & 0xFFu;
    h *= kFnvPrime;
  }
}

}  // namespace

EvalSplit make_split(const InteractionDataset& data, std::uint64_t seed,
                     std::size_t num_negatives) {
  EvalSplit split;
  split.seed = seed;
  std::vector<std::vector<const Interaction*>> by_user(data.num_users);
  for (const auto& x : data.positives) by_user[x.user].push_back(&x);
  split.positives.resize(data.num_users);
  for (std::size_t u = 0; u < data.num_users; ++u) {
    for (const auto* x : by_user[u]) split.positives[u].push_back(x->item);
    std::sort(split.positives[u].begin(), split.positives[u].end());
  }

  Rng rng = make_rng(seed);
  for (std::size_t u = 0; u < data.num_users; ++u) {
    auto& mine = by_user[u];
    if (mine.size() < 3) {
      ++split.dropped_users;
      continue;
    }
    const std::size_t pool = data.num_items - split.positives[u].size();
    if (pool < num_negatives) {
      throw SamplingError("user " + std::to_string(data.user_ids[u]) + " has " +
                          std::to_string(pool) + " candidate negatives, needs " +
                          std::to_string(num_negatives));
    }
    // Stable order: by timestamp, then by file position.
    std::sort(mine.begin(), mine.end(), [](const Interaction* a, const Interaction* b) {
      return a->timestamp != b->timestamp ? a->timestamp < b->timestamp
                                          : a->line < b->line;
    });
    UserSplit us;
    us.user = u;
    us.test_item = mine.back()->item;
    boost::random::uniform_int_distribution<std::size_t> pick(0, mine.size() - 2);
    const std::size_t v = pick(rng);
    us.validation_item = mine[v]->item;
    for (std::size_t k = 0; k + 1 < mine.size(); ++k) {
      if (k != v) us.train_items.push_back(mine[k]->item);
    }
    boost::random::uniform_int_distribution<std::size_t> item(0, data.num_items - 1);
    std::set<std::size_t> chosen;
    while (chosen.size() < num_negatives) {
      const std::size_t j = item(rng);
      if (std::binary_search(split.positives[u].begin(), split.positives[u].end(), j)) {
        continue;
      }
      chosen.insert(j);
    }
    us.negatives.assign(chosen.begin(), chosen.end());
    split.users.push_back(std::move(us));
  }

  std::uint64_t h = kFnvOffset;
  fnv_mix(h, seed);
  for (const auto& us : split.users) {
    fnv_mix(h, us.user);
    fnv_mix(h, us.test_item);
    fnv_mix(h, us.validation_item);
    fnv_mix(h, us.train_items.size());
    for (std::size_t i : us.train_items) fnv_mix(h, i);
    for (std::size_t i : us.negatives) fnv_mix(h, i);
  }
  split.hash = h;
  return split;
}

bool is_positive(const EvalSplit& split, std::size_t user, std::size_t item) {
  const auto& p = split.positives.at(user);
  return std::binary_search(p.begin(), p.end(), item);
}

}  // namespace attrimix
