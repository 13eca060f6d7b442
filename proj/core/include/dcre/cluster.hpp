#pragma once

#include <span>
#include <string>
#include <vector>

#include "dcre/config.hpp"
#include "dcre/numerics.hpp"
#include "dcre/rng.hpp"

namespace dcre {

/// C = H·Lᵀ + b, with b broadcast over rows.
Matrix project_relation_space(const Matrix& reps, const Matrix& relation, const Matrix& bias);

/// Student-t kernel (one degree of freedom), row-normalized:
/// q_ij ∝ (1 + ||c_i − μ_j||²)⁻¹.
Matrix soft_assign(const Matrix& projected, const Matrix& centers);

/// Sharpened targets: p_ij ∝ q_ij² / f_j with f_j = Σ_i q_ij, row-normalized.
Matrix target_distribution(const Matrix& q);

/// KL(P || Q) = Σ_ij p_ij log(p_ij / q_ij); terms with p_ij = 0 contribute 0.
double kl_divergence(const Matrix& p, const Matrix& q);

struct ClusterGradients {
  double loss = 0.0;
  Matrix projected;   // d/dC
  Matrix centers;     // d/dμ
  Matrix relation;    // d/dL
  Matrix bias;        // d/db
};

/// KL(P || Q(C(H; L, b), μ)) summed over rows, with gradients w.r.t. C, μ, L and b.
/// P is held constant.
ClusterGradients kl_loss(const Matrix& p, const Matrix& reps, const Matrix& relation,
                         const Matrix& bias, const Matrix& centers);

struct KMeansResult {
  Matrix centers;
  std::vector<int> assignment;
  /// Inertia after each assignment step.
  std::vector<double> inertia;
  int iterations = 0;
};

/// Label-seeded Lloyd iterations. Center j starts at the mean of rows whose
/// seed label is j; a label without rows falls back to the point farthest
/// from the centers placed so far. Stops at an assignment fixed point or
/// after max_iter iterations.
KMeansResult init_centers_kmeans(const Matrix& points, int num_clusters,
                                 std::span<const int> seed_labels, int max_iter, Rng& rng);

/// Per group, draws without replacement down to c_max and tops up with
/// replacement to c_min. `group` holds a group index per item (or -1 to
/// drop the item). Returns item indices, grouped, in a deterministic order.
std::vector<std::size_t> resample(std::span<const int> group, int num_groups, int c_min, int c_max,
                                  Rng& rng);

struct ClusterState {
  Matrix centers;          // n_c × k
  Matrix relation;         // L (k × d_s), fine-tuned copy
  Matrix bias;             // b (1 × k)
  Matrix q;                // n × n_c for the clustered rows
  Matrix p;                // n × n_c
  std::vector<double> epoch_losses;
  std::vector<double> kmeans_inertia;

  std::size_t num_clusters() const { return centers.rows(); }
};

/// k-means initialization followed by `epochs` rounds of: refresh P from the
/// current Q, then minibatch SGD on the KL loss over μ, L and b. The encoder
/// (and therefore `reps`) is frozen. Throws NumericError on divergence.
ClusterState run_clustering(const Matrix& reps, std::span<const int> seed_labels,
                            const Matrix& relation, const Matrix& bias, int num_clusters,
                            const ClusterConfig& config, double lr, Rng& rng);

/// Relations whose training sentence count reaches `min_count`, in index order.
/// Cluster j corresponds to relation retained[j].
std::vector<int> retained_relations(std::span<const int> sentence_labels, std::size_t num_relations,
                                    int min_count);

enum class RelabelOutcome { Kept, Relabeled, Removed, Ignored };

const char* outcome_name(RelabelOutcome o);
RelabelOutcome parse_outcome(const std::string& name);

struct RelabelRecord {
  std::string id;
  int original = -1;
  RelabelOutcome outcome = RelabelOutcome::Ignored;
  int new_label = -1;
  double confidence = 0.0;
  /// Whether the noise detector flagged the sentence.
  bool noisy = false;
};

/// Majority vote over runs. run_q[r] holds one row per noisy sentence (n_c
/// columns). Ties go to the label with the higher mean q across runs, then
/// to the lower cluster index. Confidence is the winning label's mean q.
std::vector<RelabelRecord> vote_labels(const std::vector<Matrix>& run_q,
                                       std::span<const int> cluster_relations,
                                       std::span<const std::string> ids,
                                       std::span<const int> original_labels, int na_index);

}  // namespace dcre
