#include "dcre/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dcre/error.hpp"

namespace dcre {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

Matrix project_relation_space(const Matrix& reps, const Matrix& relation, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != relation.rows()) {
    throw ContractViolation("project_relation_space: bias shape " + shape_string(bias) +
                            " does not match relation matrix " + shape_string(relation));
  }
  Matrix c = matmul_transposed(reps, relation);
  for (std::size_t i = 0; i < c.rows(); ++i) axpy(1.0, bias.row(0), c.row(i));
  return c;
}

Matrix soft_assign(const Matrix& projected, const Matrix& centers) {
  if (centers.rows() < 2) throw ContractViolation("soft_assign: need at least two centers");
  if (projected.cols() != centers.cols()) {
    throw ContractViolation("soft_assign: points " + shape_string(projected) + " vs centers " +
                            shape_string(centers));
  }
  Matrix q(projected.rows(), centers.rows());
  for (std::size_t i = 0; i < projected.rows(); ++i) {
    auto row = q.row(i);
    double total = 0.0;
    for (std::size_t j = 0; j < centers.rows(); ++j) {
      row[j] = 1.0 / (1.0 + squared_distance(projected.row(i), centers.row(j)));
      total += row[j];
    }
    for (double& v : row) v /= total;
  }
  return q;
}

Matrix target_distribution(const Matrix& q) {
  std::vector<double> freq(q.cols(), 0.0);
  for (std::size_t i = 0; i < q.rows(); ++i)
    for (std::size_t j = 0; j < q.cols(); ++j) freq[j] += q(i, j);
  for (double f : freq) {
    if (!(f > 0.0)) throw NumericError("target_distribution: empty cluster frequency");
  }
  Matrix p(q.rows(), q.cols());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    auto row = p.row(i);
    double total = 0.0;
    for (std::size_t j = 0; j < q.cols(); ++j) {
      row[j] = q(i, j) * q(i, j) / freq[j];
      total += row[j];
    }
    for (double& v : row) v /= total;
  }
  return p;
}

double kl_divergence(const Matrix& p, const Matrix& q) {
  if (!p.same_shape(q)) {
    throw ContractViolation("kl_divergence: P " + shape_string(p) + " vs Q " + shape_string(q));
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < p.values().size(); ++i) {
    const double pij = p.values()[i];
    if (pij > 0.0) loss += pij * std::log(pij / q.values()[i]);
  }
  return loss;
}

ClusterGradients kl_loss(const Matrix& p, const Matrix& reps, const Matrix& relation,
                         const Matrix& bias, const Matrix& centers) {
  const Matrix c = project_relation_space(reps, relation, bias);
  const Matrix q = soft_assign(c, centers);
  if (!p.same_shape(q)) {
    throw ContractViolation("kl_loss: P " + shape_string(p) + " vs Q " + shape_string(q));
  }
  ClusterGradients g;
  g.loss = kl_divergence(p, q);
  g.projected = Matrix(c.rows(), c.cols());
  g.centers = Matrix(centers.rows(), centers.cols());
  std::vector<double> diff(c.cols());
  for (std::size_t i = 0; i < c.rows(); ++i) {
    auto gc = g.projected.row(i);
    for (std::size_t j = 0; j < centers.rows(); ++j) {
      const auto ci = c.row(i);
      const auto mj = centers.row(j);
      double d2 = 0.0;
      for (std::size_t t = 0; t < diff.size(); ++t) {
        diff[t] = ci[t] - mj[t];
        d2 += diff[t] * diff[t];
      }
      // dKL/d(d2_ij) = u_ij (p_ij - q_ij), u_ij = 1 / (1 + d2_ij)
      const double coef = 2.0 * (p(i, j) - q(i, j)) / (1.0 + d2);
      axpy(coef, diff, gc);
      axpy(-coef, diff, g.centers.row(j));
    }
  }
  // C = H Lᵀ + b  =>  dL = (dC)ᵀ H,  db = column sums of dC
  g.relation = matmul(transpose(g.projected), reps);
  g.bias = Matrix(1, c.cols());
  for (std::size_t i = 0; i < c.rows(); ++i) axpy(1.0, g.projected.row(i), g.bias.row(0));
  return g;
}

KMeansResult init_centers_kmeans(const Matrix& points, int num_clusters,
                                 std::span<const int> seed_labels, int max_iter, Rng& rng) {
  const std::size_t n = points.rows();
  const auto kc = static_cast<std::size_t>(num_clusters);
  if (num_clusters < 1 || n < kc) {
    throw ConfigError("k-means: " + std::to_string(n) + " points cannot seed " +
                      std::to_string(num_clusters) + " clusters");
  }
  if (!seed_labels.empty() && seed_labels.size() != n) {
    throw ContractViolation("k-means: seed label count does not match point count");
  }
  KMeansResult res;
  res.centers = Matrix(kc, points.cols());

  std::vector<std::size_t> counts(kc, 0);
  for (std::size_t i = 0; i < seed_labels.size(); ++i) {
    const int l = seed_labels[i];
    if (l < 0 || l >= num_clusters) continue;
    axpy(1.0, points.row(i), res.centers.row(static_cast<std::size_t>(l)));
    ++counts[static_cast<std::size_t>(l)];
  }
  std::vector<bool> placed(kc, false);
  bool any_placed = false;
  for (std::size_t j = 0; j < kc; ++j) {
    if (counts[j] == 0) continue;
    for (double& v : res.centers.row(j)) v /= static_cast<double>(counts[j]);
    placed[j] = any_placed = true;
  }
  for (std::size_t j = 0; j < kc; ++j) {
    if (placed[j]) continue;
    std::size_t pick = 0;
    if (!any_placed) {
      pick = rng.below(n);
    } else {
      double best = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < kc; ++m) {
          if (placed[m]) nearest = std::min(nearest, squared_distance(points.row(i), res.centers.row(m)));
        }
        if (nearest > best) {
          best = nearest;
          pick = i;
        }
      }
    }
    std::copy(points.row(pick).begin(), points.row(pick).end(), res.centers.row(j).begin());
    placed[j] = any_placed = true;
  }

  res.assignment.assign(n, -1);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = squared_distance(points.row(i), res.centers.row(0));
      for (std::size_t j = 1; j < kc; ++j) {
        const double d = squared_distance(points.row(i), res.centers.row(j));
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(j);
        }
      }
      if (res.assignment[i] != best) changed = true;
      res.assignment[i] = best;
      inertia += best_d;
    }
    res.inertia.push_back(inertia);
    res.iterations = iter + 1;
    if (!changed) break;

    Matrix sums(kc, points.cols());
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = static_cast<std::size_t>(res.assignment[i]);
      axpy(1.0, points.row(i), sums.row(a));
      ++counts[a];
    }
    for (std::size_t j = 0; j < kc; ++j) {
      if (counts[j] == 0) continue;  // empty cluster keeps its center
      auto dst = res.centers.row(j);
      auto src = sums.row(j);
      for (std::size_t t = 0; t < dst.size(); ++t) dst[t] = src[t] / static_cast<double>(counts[j]);
    }
  }

  return res;
}

std::vector<std::size_t> resample(std::span<const int> group, int num_groups, int c_min, int c_max,
                                  Rng& rng) {
  if (c_min < 1 || c_min > c_max) throw ContractViolation("resample: need 1 <= c_min <= c_max");
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(num_groups));
  for (std::size_t i = 0; i < group.size(); ++i) {
    if (group[i] >= 0 && group[i] < num_groups) members[static_cast<std::size_t>(group[i])].push_back(i);
  }
  std::vector<std::size_t> out;
  for (std::size_t g = 0; g < members.size(); ++g) {
    auto items = members[g];
    if (items.empty()) continue;
    Rng grng = rng.split(static_cast<std::uint64_t>(g));
    const auto cap = static_cast<std::size_t>(c_max);
    const auto floor = static_cast<std::size_t>(c_min);
    if (items.size() > cap) {
      grng.shuffle(items);
      items.resize(cap);
      std::sort(items.begin(), items.end());
    }
    const std::size_t original = items.size();
    while (items.size() < floor) items.push_back(items[grng.below(original)]);
    out.insert(out.end(), items.begin(), items.end());
  }
  return out;
}

ClusterState run_clustering(const Matrix& reps, std::span<const int> seed_labels,
                            const Matrix& relation, const Matrix& bias, int num_clusters,
                            const ClusterConfig& config, double lr, Rng& rng) {
  if (num_clusters < 2) throw ConfigError("clustering needs at least two clusters");
  ClusterState st;
  st.relation = relation;
  st.bias = bias;
  Rng init_rng = rng.split("kmeans");
  const Matrix c0 = project_relation_space(reps, relation, bias);
  KMeansResult km = init_centers_kmeans(c0, num_clusters, seed_labels, config.kmeans_max_iter, init_rng);
  st.centers = std::move(km.centers);
  st.kmeans_inertia = std::move(km.inertia);

  const std::size_t n = reps.rows();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  Rng order_rng = rng.split("order");
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Matrix targets =
        target_distribution(soft_assign(project_relation_space(reps, st.relation, st.bias), st.centers));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng erng = order_rng.split(static_cast<std::uint64_t>(epoch));
    erng.shuffle(order);

    double total = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      Matrix h_b(end - start, reps.cols());
      Matrix p_b(end - start, targets.cols());
      for (std::size_t r = start; r < end; ++r) {
        std::copy(reps.row(order[r]).begin(), reps.row(order[r]).end(), h_b.row(r - start).begin());
        std::copy(targets.row(order[r]).begin(), targets.row(order[r]).end(), p_b.row(r - start).begin());
      }
      const ClusterGradients g = kl_loss(p_b, h_b, st.relation, st.bias, st.centers);
      if (!std::isfinite(g.loss)) {
        throw NumericError("clustering diverged: non-finite KL loss in epoch " + std::to_string(epoch + 1));
      }
      total += g.loss;
      const double step = lr / static_cast<double>(end - start);
      sgd_update(st.centers, g.centers, step);
      sgd_update(st.relation, g.relation, step);
      sgd_update(st.bias, g.bias, step);
    }
    st.epoch_losses.push_back(total / static_cast<double>(n));
    if (!st.centers.all_finite() || !st.relation.all_finite()) {
      throw NumericError("clustering diverged: non-finite parameters after epoch " + std::to_string(epoch + 1));
    }
  }
  st.q = soft_assign(project_relation_space(reps, st.relation, st.bias), st.centers);
  st.p = target_distribution(st.q);
  return st;
}

std::vector<int> retained_relations(std::span<const int> sentence_labels, std::size_t num_relations,
                                    int min_count) {
  std::vector<int> counts(num_relations, 0);
  for (int l : sentence_labels) {
    if (l >= 0 && static_cast<std::size_t>(l) < num_relations) ++counts[static_cast<std::size_t>(l)];
  }
  std::vector<int> kept;
  for (std::size_t r = 0; r < num_relations; ++r) {
    if (counts[r] >= min_count) kept.push_back(static_cast<int>(r));
  }
  return kept;
}

const char* outcome_name(RelabelOutcome o) {
  switch (o) {
    case RelabelOutcome::Kept: return "kept";
    case RelabelOutcome::Relabeled: return "relabeled";
    case RelabelOutcome::Removed: return "removed";
    case RelabelOutcome::Ignored: return "ignored";
  }
  return "?";
}

RelabelOutcome parse_outcome(const std::string& name) {
  if (name == "kept") return RelabelOutcome::Kept;
  if (name == "relabeled") return RelabelOutcome::Relabeled;
  if (name == "removed") return RelabelOutcome::Removed;
  if (name == "ignored") return RelabelOutcome::Ignored;
  throw DataError("unknown relabel outcome '" + name + "'");
}

std::vector<RelabelRecord> vote_labels(const std::vector<Matrix>& run_q,
                                       std::span<const int> cluster_relations,
                                       std::span<const std::string> ids,
                                       std::span<const int> original_labels, int na_index) {
  if (run_q.empty()) throw ContractViolation("vote_labels: no clustering runs");
  const std::size_t n = ids.size();
  const std::size_t nc = cluster_relations.size();
  if (original_labels.size() != n) throw ContractViolation("vote_labels: id/label count mismatch");
  for (const auto& q : run_q) {
    if (q.rows() != n || q.cols() != nc) {
      throw ContractViolation("vote_labels: run assignment shape " + shape_string(q) + " expected " +
                              std::to_string(n) + "x" + std::to_string(nc));
    }
  }
  std::vector<RelabelRecord> out;
  out.reserve(n);
  std::vector<int> votes(nc);
  std::vector<double> mean_q(nc);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(votes.begin(), votes.end(), 0);
    std::fill(mean_q.begin(), mean_q.end(), 0.0);
    for (const auto& q : run_q) {
      const auto row = q.row(i);
      const auto top = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      ++votes[top];
      for (std::size_t j = 0; j < nc; ++j) mean_q[j] += row[j] / static_cast<double>(run_q.size());
    }
    std::size_t winner = 0;
    for (std::size_t j = 1; j < nc; ++j) {
      if (votes[j] > votes[winner] || (votes[j] == votes[winner] && mean_q[j] > mean_q[winner])) {
        winner = j;
      }
    }
    RelabelRecord rec;
    rec.id = ids[i];
    rec.original = original_labels[i];
    rec.noisy = true;
    const int label = cluster_relations[winner];
    if (label == rec.original) {
      rec.outcome = RelabelOutcome::Kept;
    } else if (label == na_index) {
      rec.outcome = RelabelOutcome::Removed;
    } else {
      if (rec.original == na_index) {
        throw ContractViolation("vote_labels: NA-labeled sentence " + rec.id + " cannot be relabeled");
      }
      rec.outcome = RelabelOutcome::Relabeled;
      rec.new_label = label;
      rec.confidence = mean_q[winner];
    }
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace dcre
