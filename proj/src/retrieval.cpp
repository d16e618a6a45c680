#include "traitscore/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "traitscore/hashing.hpp"
#include "traitscore/rng.hpp"

namespace traitscore {

Result<EmbeddingRecord> make_embedding_record(std::string transcript_id,
                                              std::vector<double> vector) {
  if (vector.empty()) {
    return make_error("empty_vector", "embedding vector has no components");
  }
  double sq = 0.0;
  for (double v : vector) sq += v * v;
  const double norm = std::sqrt(sq);
  if (norm == 0.0 || !std::isfinite(norm)) {
    return make_error("zero_vector", "embedding for '" + transcript_id +
                                         "' has zero or non-finite norm");
  }
  EmbeddingRecord record;
  record.transcript_id = std::move(transcript_id);
  record.vector = std::move(vector);
  record.norm = norm;
  return record;
}

Result<std::vector<std::vector<double>>> HashEmbeddingClient::embed(
    const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::vector<double> vec(static_cast<std::size_t>(dimension_));
    for (int i = 0; i < dimension_; ++i) {
      StableHash h;
      h.field(model_id_).field(text).field(std::to_string(i));
      // Map to [-1, 1] with ~1e-6 resolution.
      const auto bucket = h.digest() % 2000001ULL;
      vec[static_cast<std::size_t>(i)] =
          static_cast<double>(bucket) / 1000000.0 - 1.0;
    }
    out.push_back(std::move(vec));
  }
  return out;
}

Result<std::vector<EmbeddingBatchEntry>> embed_batch(
    const std::vector<std::pair<std::string, std::string>>& id_texts,
    EmbeddingClient& client) {
  if (id_texts.empty()) {
    return make_error("empty_batch", "no texts to embed");
  }
  std::vector<EmbeddingBatchEntry> entries(id_texts.size());

  std::vector<std::string> payload;
  std::vector<std::size_t> payload_slots;
  for (std::size_t i = 0; i < id_texts.size(); ++i) {
    if (id_texts[i].second.empty()) {
      entries[i].ok = false;
      entries[i].error = make_error(
          "empty_text", "transcript '" + id_texts[i].first + "' has no text");
      continue;
    }
    payload.push_back(id_texts[i].second);
    payload_slots.push_back(i);
  }

  if (!payload.empty()) {
    auto vectors = client.embed(payload);
    if (!vectors.ok()) {
      for (std::size_t slot : payload_slots) {
        entries[slot].ok = false;
        entries[slot].error = vectors.error();
      }
    } else {
      if (vectors.value().size() != payload.size()) {
        return make_error("protocol",
                          "embedding client returned " +
                              std::to_string(vectors.value().size()) +
                              " vectors for " + std::to_string(payload.size()) +
                              " texts");
      }
      for (std::size_t j = 0; j < payload_slots.size(); ++j) {
        const std::size_t slot = payload_slots[j];
        auto& vec = vectors.value()[j];
        if (static_cast<int>(vec.size()) != client.dimension()) {
          return make_error("dimension_mismatch",
                            "client declared dimension " +
                                std::to_string(client.dimension()) +
                                " but returned " + std::to_string(vec.size()));
        }
        auto record =
            make_embedding_record(id_texts[slot].first, std::move(vec));
        if (record.ok()) {
          entries[slot].ok = true;
          entries[slot].record = record.take();
        } else {
          entries[slot].ok = false;
          entries[slot].error = record.error();
        }
      }
    }
  }
  return entries;
}

const EmbeddingRecord* VectorStore::find(const std::string& id) const {
  auto it = records_.find(id);
  return it == records_.end() ? nullptr : &it->second;
}

Status VectorStore::add(EmbeddingRecord record) {
  if (static_cast<int>(record.vector.size()) != dimension_) {
    return make_error("dimension_mismatch",
                      "record '" + record.transcript_id + "' has dimension " +
                          std::to_string(record.vector.size()) +
                          ", store expects " + std::to_string(dimension_));
  }
  if (record.norm <= 0.0) {
    return make_error("zero_vector",
                      "record '" + record.transcript_id + "' has zero norm");
  }
  std::string id = record.transcript_id;
  if (!records_.emplace(std::move(id), std::move(record)).second) {
    return make_error("duplicate_id", "record id already present in store");
  }
  return Status::success();
}

Result<double> cosine_similarity(const std::vector<double>& u,
                                 const std::vector<double>& v) {
  if (u.size() != v.size() || u.empty()) {
    return make_error("dimension_mismatch", "vectors differ in dimension");
  }
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) {
    return make_error("zero_vector", "cosine undefined for zero vectors");
  }
  double sim = dot / (std::sqrt(nu) * std::sqrt(nv));
  // Guard rounding just past the ends.
  if (sim > 1.0) sim = 1.0;
  if (sim < -1.0) sim = -1.0;
  return sim;
}

Result<NeighborResult> nearest_neighbors(
    const std::vector<double>& query, const VectorStore& store, std::size_t k,
    const std::vector<std::string>& exclude) {
  if (k < 1) {
    return make_error("config", "k must be at least 1");
  }
  auto query_record = make_embedding_record("query", query);
  if (!query_record.ok()) return query_record.error();
  if (static_cast<int>(query.size()) != store.dimension()) {
    return make_error("dimension_mismatch", "query dimension differs");
  }

  std::vector<std::pair<std::string, double>> scored;
  for (const auto& [id, record] : store.records()) {
    if (std::find(exclude.begin(), exclude.end(), id) != exclude.end()) {
      continue;
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < query.size(); ++i) {
      dot += query[i] * record.vector[i];
    }
    scored.emplace_back(id, dot / (query_record.value().norm * record.norm));
  }
  if (scored.empty()) {
    return make_error("empty_pool", "no candidates remain after exclusion");
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  NeighborResult result;
  if (scored.size() < k) {
    result.fewer_than_k = true;
    result.neighbors = std::move(scored);
  } else {
    result.neighbors.assign(scored.begin(),
                            scored.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return result;
}

Status validate_rag_strategy(const RagStrategy& strategy) {
  if (strategy.variant == RagVariant::TopK &&
      (strategy.k < 1 || strategy.k > 4)) {
    return make_error("config", "TopK retrieval tested for k in 1..4 only");
  }
  return Status::success();
}

namespace {

Result<TierAnchors> anchors_from_base(const std::vector<Exemplar>& base) {
  if (base.size() != 3 || base[0].tier != Tier::Low ||
      base[1].tier != Tier::Medium || base[2].tier != Tier::High) {
    return make_error("config",
                      "strategy requires a base of exactly [L,M,H] exemplars");
  }
  TierAnchors anchors;
  anchors.low = base[0].score;
  anchors.medium = base[1].score;
  anchors.high = base[2].score;
  return anchors;
}

Result<Exemplar> exemplar_from_item(const Dataset& train,
                                    const std::string& transcript_id,
                                    const std::string& criterion_id, Tier tier,
                                    bool use_cleaned_text) {
  const DatasetItem* item = train.find_item(transcript_id);
  if (!item) {
    return make_error("missing_transcript",
                      "retrieved id '" + transcript_id + "' not in train set");
  }
  auto score = item->gold.scores.find(criterion_id);
  if (score == item->gold.scores.end()) {
    return make_error("missing_score", "retrieved transcript lacks score for " +
                                           criterion_id);
  }
  Exemplar exemplar;
  exemplar.transcript_id = transcript_id;
  exemplar.text = item->transcript.best_text(use_cleaned_text);
  exemplar.criterion_id = criterion_id;
  exemplar.score = score->second;
  exemplar.tier = tier;
  return exemplar;
}

}  // namespace

Result<std::vector<Exemplar>> apply_rag_strategy(
    const RagStrategy& strategy, const std::vector<Exemplar>& base,
    const Dataset& train, const VectorStore& store, const Transcript& query,
    const std::string& criterion_id, bool use_cleaned_text) {
  if (Status status = validate_rag_strategy(strategy); !status.ok()) {
    return status.error();
  }
  if (strategy.variant == RagVariant::None) {
    return base;
  }

  const EmbeddingRecord* query_embedding = store.find(query.id);
  if (!query_embedding) {
    return make_error("missing_embedding",
                      "no embedding for query transcript '" + query.id + "'");
  }
  for (const auto& item : train.items) {
    if (item.transcript.id != query.id && !store.contains(item.transcript.id)) {
      return make_error("missing_embedding", "no embedding for train transcript '" +
                                                 item.transcript.id + "'");
    }
  }

  const std::size_t want =
      strategy.variant == RagVariant::TopK
          ? static_cast<std::size_t>(strategy.k)
          : 1;
  auto neighbors = nearest_neighbors(query_embedding->vector, store, want,
                                     {query.id});
  if (!neighbors.ok()) return neighbors.error();

  switch (strategy.variant) {
    case RagVariant::TopK: {
      // Anchor-relative tier labels are informational here; TopK keeps the
      // retrieved set regardless of score.
      auto anchors = anchors_from_base(base);
      std::vector<Exemplar> out;
      for (const auto& [id, sim] : neighbors.value().neighbors) {
        (void)sim;
        Tier tier = Tier::Medium;
        if (anchors.ok()) {
          const DatasetItem* item = train.find_item(id);
          if (item) {
            auto it = item->gold.scores.find(criterion_id);
            if (it != item->gold.scores.end()) {
              tier = assign_tier(it->second, anchors.value());
            }
          }
        }
        auto exemplar =
            exemplar_from_item(train, id, criterion_id, tier, use_cleaned_text);
        if (!exemplar.ok()) return exemplar.error();
        out.push_back(exemplar.take());
      }
      return out;
    }
    case RagVariant::BasePlusOne: {
      auto anchors = anchors_from_base(base);
      if (!anchors.ok()) return anchors.error();
      const auto& [id, sim] = neighbors.value().neighbors.front();
      (void)sim;
      const DatasetItem* item = train.find_item(id);
      Tier tier = Tier::Medium;
      if (item) {
        auto it = item->gold.scores.find(criterion_id);
        if (it != item->gold.scores.end()) {
          tier = assign_tier(it->second, anchors.value());
        }
      }
      auto exemplar =
          exemplar_from_item(train, id, criterion_id, tier, use_cleaned_text);
      if (!exemplar.ok()) return exemplar.error();
      std::vector<Exemplar> out = base;
      out.push_back(exemplar.take());
      return out;
    }
    case RagVariant::IntegratedCalibration: {
      auto anchors = anchors_from_base(base);
      if (!anchors.ok()) return anchors.error();
      const auto& [id, sim] = neighbors.value().neighbors.front();
      (void)sim;
      const DatasetItem* item = train.find_item(id);
      if (!item) {
        return make_error("missing_transcript",
                          "retrieved id '" + id + "' not in train set");
      }
      auto score = item->gold.scores.find(criterion_id);
      if (score == item->gold.scores.end()) {
        return make_error("missing_score",
                          "retrieved transcript lacks score for " +
                              criterion_id);
      }
      const Tier slot = assign_tier(score->second, anchors.value());
      auto exemplar =
          exemplar_from_item(train, id, criterion_id, slot, use_cleaned_text);
      if (!exemplar.ok()) return exemplar.error();

      // Replace only the matching tier slot; the other two stay fixed.
      std::vector<Exemplar> out = base;
      for (auto& entry : out) {
        if (entry.tier == slot) {
          entry = exemplar.value();
          break;
        }
      }
      return out;
    }
    case RagVariant::None:
      break;
  }
  return base;
}

namespace {

double squared_distance(const std::vector<double>& a,
                        const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

}  // namespace

Result<KmeansResult> kmeans_clusters(
    const std::vector<std::vector<double>>& points, std::size_t k,
    std::uint64_t seed, std::size_t max_iters) {
  const std::size_t n = points.size();
  if (k < 1) return make_error("config", "k must be at least 1");
  if (k > n) {
    return make_error("config", "k (" + std::to_string(k) +
                                    ") exceeds point count (" +
                                    std::to_string(n) + ")");
  }
  const std::size_t dim = points.front().size();
  for (const auto& p : points) {
    if (p.size() != dim) {
      return make_error("dimension_mismatch", "points differ in dimension");
    }
  }

  SeededRng rng(seed);
  KmeansResult result;
  for (std::size_t idx : rng.sample_distinct(k, n)) {
    result.centroids.push_back(points[idx]);
  }
  result.assignments.assign(n, 0);

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    double objective = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dist = squared_distance(points[i], result.centroids[c]);
        if (dist < best_dist) {
          best_dist = dist;
          best = c;
        }
      }
      if (result.assignments[i] != best) {
        result.assignments[i] = best;
        changed = true;
      }
      objective += best_dist;
    }
    result.iterations = iter + 1;
    result.objective = objective;
    if (!changed && iter > 0) break;

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = result.assignments[i];
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t d = 0; d < dim; ++d) {
        result.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
      }
    }
  }
  return result;
}

}  // namespace traitscore
