#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "traitscore/core.hpp"
#include "traitscore/exemplars.hpp"
#include "traitscore/result.hpp"

namespace traitscore {

struct EmbeddingRecord {
  std::string transcript_id;
  std::vector<double> vector;
  double norm = 0.0;  // cached Euclidean norm; zero vectors are rejected
};

Result<EmbeddingRecord> make_embedding_record(std::string transcript_id,
                                              std::vector<double> vector);

// Pluggable embedding provider with a declared dimension.
class EmbeddingClient {
 public:
  virtual ~EmbeddingClient() = default;
  virtual int dimension() const = 0;
  virtual std::string model_id() const = 0;
  // One vector per input text; a transport-level failure fails the batch.
  virtual Result<std::vector<std::vector<double>>> embed(
      const std::vector<std::string>& texts) = 0;
};

// Deterministic test double: every component is a stable hash of
// (model_id, text, component index) mapped into [-1, 1].
class HashEmbeddingClient : public EmbeddingClient {
 public:
  HashEmbeddingClient(std::string model_id, int dimension)
      : model_id_(std::move(model_id)), dimension_(dimension) {}
  int dimension() const override { return dimension_; }
  std::string model_id() const override { return model_id_; }
  Result<std::vector<std::vector<double>>> embed(
      const std::vector<std::string>& texts) override;

 private:
  std::string model_id_;
  int dimension_;
};

struct EmbeddingBatchEntry {
  bool ok = false;
  EmbeddingRecord record;
  Error error;
};

// One entry per (id, text) input; empty texts and dimension mismatches are
// reported per item without failing the batch.
Result<std::vector<EmbeddingBatchEntry>> embed_batch(
    const std::vector<std::pair<std::string, std::string>>& id_texts,
    EmbeddingClient& client);

class VectorStore {
 public:
  explicit VectorStore(int dimension) : dimension_(dimension) {}

  int dimension() const { return dimension_; }
  std::size_t size() const { return records_.size(); }
  bool contains(const std::string& id) const { return records_.count(id) > 0; }
  const EmbeddingRecord* find(const std::string& id) const;

  Status add(EmbeddingRecord record);

  const std::map<std::string, EmbeddingRecord>& records() const {
    return records_;
  }

 private:
  int dimension_;
  std::map<std::string, EmbeddingRecord> records_;
};

Result<double> cosine_similarity(const std::vector<double>& u,
                                 const std::vector<double>& v);

struct NeighborResult {
  std::vector<std::pair<std::string, double>> neighbors;  // similarity desc
  bool fewer_than_k = false;
};

// Exhaustive top-k cosine scan. Ties break by ascending id; ids in `exclude`
// never appear (callers add the query's own transcript id).
Result<NeighborResult> nearest_neighbors(
    const std::vector<double>& query, const VectorStore& store, std::size_t k,
    const std::vector<std::string>& exclude);

enum class RagVariant { None, TopK, BasePlusOne, IntegratedCalibration };

struct RagStrategy {
  RagVariant variant = RagVariant::None;
  int k = 1;  // TopK only, 1..4
};

Status validate_rag_strategy(const RagStrategy& strategy);

// Exemplar-set transformation driven by retrieval:
//   None                  -> base unchanged
//   TopK(k)               -> the k most similar train responses, any score
//   BasePlusOne           -> base (L,M,H) + 1 most similar (4 exemplars)
//   IntegratedCalibration -> retrieve 1 most similar, tier it against the
//                            base anchors, replace exactly that slot
Result<std::vector<Exemplar>> apply_rag_strategy(
    const RagStrategy& strategy, const std::vector<Exemplar>& base,
    const Dataset& train, const VectorStore& store, const Transcript& query,
    const std::string& criterion_id, bool use_cleaned_text);

struct KmeansResult {
  std::vector<std::size_t> assignments;       // point -> cluster
  std::vector<std::vector<double>> centroids;
  std::size_t iterations = 0;
  double objective = 0.0;  // sum of squared distances to assigned centroid
};

// Lloyd's algorithm, centroids seeded from k distinct points chosen by the
// seeded RNG. Assignment ties go to the lowest cluster index; empty clusters
// keep their previous centroid.
Result<KmeansResult> kmeans_clusters(
    const std::vector<std::vector<double>>& points, std::size_t k,
    std::uint64_t seed, std::size_t max_iters);

}  // namespace traitscore
