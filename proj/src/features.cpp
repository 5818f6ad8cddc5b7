#include "txtopo/features.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include "txtopo/errors.hpp"

namespace txtopo {

namespace {

// Hop distances on the undirected view. -1 marks unreachable nodes.
std::vector<int> bfs_hops(const std::vector<std::vector<Arc>>& adj, int source) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> queue;
  dist[static_cast<std::size_t>(source)] = 0;
  queue.push_back(source);
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (const Arc& a : adj[static_cast<std::size_t>(v)]) {
      if (dist[static_cast<std::size_t>(a.node)] < 0) {
        dist[static_cast<std::size_t>(a.node)] = dist[static_cast<std::size_t>(v)] + 1;
        queue.push_back(a.node);
      }
    }
  }
  return dist;
}

// Connected component of `root` on the undirected view, in ascending order.
std::vector<int> component_of(const std::vector<std::vector<Arc>>& adj, int root) {
  const auto dist = bfs_hops(adj, root);
  std::vector<int> members;
  for (std::size_t v = 0; v < dist.size(); ++v) {
    if (dist[v] >= 0) members.push_back(static_cast<int>(v));
  }
  return members;
}

}  // namespace

Vector in_degree_column(const DirectedGraph& g) {
  Vector col(g.node_count());
  for (int v = 0; v < g.node_count(); ++v) col(v) = g.in_degree(v);
  return col;
}

Vector out_degree_column(const DirectedGraph& g) {
  Vector col(g.node_count());
  for (int v = 0; v < g.node_count(); ++v) col(v) = g.out_degree(v);
  return col;
}

Vector closeness_column(const DirectedGraph& g) {
  const int n = g.node_count();
  const auto adj = symmetrized_adjacency(g);
  Vector col = Vector::Zero(n);
  if (n < 2) return col;
  for (int v = 0; v < n; ++v) {
    const auto dist = bfs_hops(adj, v);
    double total = 0.0;
    int reachable = 0;  // not counting v
    for (int u = 0; u < n; ++u) {
      if (u != v && dist[static_cast<std::size_t>(u)] > 0) {
        total += dist[static_cast<std::size_t>(u)];
        ++reachable;
      }
    }
    if (reachable == 0) continue;
    const double r = reachable;
    col(v) = (r / (n - 1)) * (r / total);
  }
  return col;
}

Vector betweenness_column(const DirectedGraph& g) {
  const int n = g.node_count();
  Vector col = Vector::Zero(n);
  if (n < 3) return col;
  const auto adj = symmetrized_adjacency(g);

  // Brandes accumulation; undirected, so each pair is seen twice.
  for (int s = 0; s < n; ++s) {
    std::vector<std::vector<int>> preds(static_cast<std::size_t>(n));
    std::vector<double> sigma(static_cast<std::size_t>(n), 0.0);
    std::vector<int> dist(static_cast<std::size_t>(n), -1);
    std::vector<int> stack;
    std::deque<int> queue;
    sigma[static_cast<std::size_t>(s)] = 1.0;
    dist[static_cast<std::size_t>(s)] = 0;
    queue.push_back(s);
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      stack.push_back(v);
      for (const Arc& a : adj[static_cast<std::size_t>(v)]) {
        const auto w = static_cast<std::size_t>(a.node);
        if (dist[w] < 0) {
          dist[w] = dist[static_cast<std::size_t>(v)] + 1;
          queue.push_back(a.node);
        }
        if (dist[w] == dist[static_cast<std::size_t>(v)] + 1) {
          sigma[w] += sigma[static_cast<std::size_t>(v)];
          preds[w].push_back(v);
        }
      }
    }
    std::vector<double> delta(static_cast<std::size_t>(n), 0.0);
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      const auto w = static_cast<std::size_t>(*it);
      for (const int v : preds[w]) {
        delta[static_cast<std::size_t>(v)] +=
            sigma[static_cast<std::size_t>(v)] / sigma[w] * (1.0 + delta[w]);
      }
      if (*it != s) col(*it) += delta[w];
    }
  }
  col /= 2.0;  // each unordered pair counted from both endpoints
  col /= static_cast<double>(n - 1) * (n - 2) / 2.0;
  return col;
}

Vector harmonic_column(const DirectedGraph& g) {
  const int n = g.node_count();
  const auto adj = symmetrized_adjacency(g);
  Vector col = Vector::Zero(n);
  if (n < 2) return col;
  for (int v = 0; v < n; ++v) {
    const auto dist = bfs_hops(adj, v);
    double sum = 0.0;
    for (int u = 0; u < n; ++u) {
      if (u != v && dist[static_cast<std::size_t>(u)] > 0) {
        sum += 1.0 / dist[static_cast<std::size_t>(u)];
      }
    }
    col(v) = sum / (n - 1);
  }
  return col;
}

Vector second_order_return_std(const DirectedGraph& g) {
  const int n = g.node_count();
  const auto adj = symmetrized_adjacency(g);
  Vector col = Vector::Zero(n);

  std::vector<bool> done(static_cast<std::size_t>(n), false);
  for (int root = 0; root < n; ++root) {
    if (done[static_cast<std::size_t>(root)]) continue;
    const auto members = component_of(adj, root);
    for (const int v : members) done[static_cast<std::size_t>(v)] = true;
    const int m = static_cast<int>(members.size());
    if (m < 2) continue;  // no walk to speak of

    // Walk transition probabilities inside the component, weight
    // proportional.
    std::vector<int> local(static_cast<std::size_t>(n), -1);
    for (int i = 0; i < m; ++i) local[static_cast<std::size_t>(members[i])] = i;
    Matrix p = Matrix::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      double total = 0.0;
      for (const Arc& a : adj[static_cast<std::size_t>(members[i])]) total += a.weight;
      for (const Arc& a : adj[static_cast<std::size_t>(members[i])]) {
        p(i, local[static_cast<std::size_t>(a.node)]) = a.weight / total;
      }
    }

    for (int i = 0; i < m; ++i) {
      // Hitting times of node i from everywhere else: (I-Q)h = 1, then
      // second moments (I-Q)s = 1 + 2Qh, with Q the walk restricted to the
      // complement of i.
      Matrix q(m - 1, m - 1);
      std::vector<int> rest;
      for (int j = 0; j < m; ++j) {
        if (j != i) rest.push_back(j);
      }
      for (int a = 0; a < m - 1; ++a) {
        for (int b = 0; b < m - 1; ++b) {
          q(a, b) = p(rest[static_cast<std::size_t>(a)], rest[static_cast<std::size_t>(b)]);
        }
      }
      const Matrix lhs = Matrix::Identity(m - 1, m - 1) - q;
      const Vector ones = Vector::Ones(m - 1);
      const Eigen::PartialPivLU<Matrix> lu(lhs);
      const Vector h = lu.solve(ones);
      const Vector s = lu.solve(ones + 2.0 * (q * h));

      double mean = 1.0;
      double second = 1.0;
      for (int a = 0; a < m - 1; ++a) {
        const double pia = p(i, rest[static_cast<std::size_t>(a)]);
        mean += pia * h(a);
        second += pia * (2.0 * h(a) + s(a));
      }
      const double var = std::max(0.0, second - mean * mean);
      col(members[static_cast<std::size_t>(i)]) = std::sqrt(var);
    }
  }
  return col;
}

Vector second_order_column(const DirectedGraph& g) {
  Vector raw = second_order_return_std(g);
  if (raw.size() == 0) return raw;
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  if (hi - lo <= 0.0) return Vector::Zero(raw.size());
  return (raw.array() - lo) / (hi - lo);
}

Vector laplacian_centrality_column(const DirectedGraph& g) {
  const int n = g.node_count();
  const auto adj = symmetrized_adjacency(g);

  // trace(L^2) = sum of squared weighted degrees + sum of squared weights
  // over ordered pairs.
  const auto energy = [&](int skip) {
    double e = 0.0;
    for (int v = 0; v < n; ++v) {
      if (v == skip) continue;
      double deg = 0.0;
      for (const Arc& a : adj[static_cast<std::size_t>(v)]) {
        if (a.node == skip) continue;
        deg += a.weight;
        e += static_cast<double>(a.weight) * a.weight;
      }
      e += deg * deg;
    }
    return e;
  };

  Vector col = Vector::Zero(n);
  const double total = energy(-1);
  if (total <= 0.0) return col;
  for (int v = 0; v < n; ++v) col(v) = (total - energy(v)) / total;
  return col;
}

Vector burt_constraint_column(const DirectedGraph& g) {
  const int n = g.node_count();
  const auto adj = symmetrized_adjacency(g);

  std::vector<double> strength(static_cast<std::size_t>(n), 0.0);
  for (int v = 0; v < n; ++v) {
    for (const Arc& a : adj[static_cast<std::size_t>(v)]) {
      strength[static_cast<std::size_t>(v)] += a.weight;
    }
  }
  const auto proportion = [&](int i, int j) {
    if (strength[static_cast<std::size_t>(i)] <= 0.0) return 0.0;
    for (const Arc& a : adj[static_cast<std::size_t>(i)]) {
      if (a.node == j) return a.weight / strength[static_cast<std::size_t>(i)];
    }
    return 0.0;
  };

  Vector col = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    double c = 0.0;
    for (const Arc& ja : adj[static_cast<std::size_t>(i)]) {
      const int j = ja.node;
      double indirect = 0.0;
      for (const Arc& qa : adj[static_cast<std::size_t>(i)]) {
        const int q = qa.node;
        if (q == j) continue;
        indirect += proportion(i, q) * proportion(q, j);
      }
      const double pij = proportion(i, j) + indirect;
      c += pij * pij;
    }
    col(i) = c;
  }
  return col;
}

Vector reciprocity_column(const DirectedGraph& g) {
  const int n = g.node_count();
  Vector col = Vector::Zero(n);
  for (int v = 0; v < n; ++v) {
    const int deg = g.out_degree(v) + g.in_degree(v);
    if (deg == 0) continue;
    int reciprocated = 0;
    for (const Arc& a : g.out(v)) {
      if (g.has_edge(a.node, v)) ++reciprocated;
    }
    for (const Arc& a : g.in(v)) {
      if (g.has_edge(v, a.node)) ++reciprocated;
    }
    col(v) = static_cast<double>(reciprocated) / deg;
  }
  return col;
}

Matrix node_feature_values(const DirectedGraph& g) {
  const int n = g.node_count();
  Matrix values(n, kFeatureCount);
  values.col(0) = in_degree_column(g);
  values.col(1) = out_degree_column(g);
  values.col(2) = closeness_column(g);
  values.col(3) = betweenness_column(g);
  values.col(4) = harmonic_column(g);
  values.col(5) = second_order_column(g);
  values.col(6) = laplacian_centrality_column(g);
  values.col(7) = burt_constraint_column(g);
  values.col(8) = reciprocity_column(g);
  if (!values.allFinite()) {
    throw NumericalError("non-finite node feature value");
  }
  return values;
}

NodeFeatureMatrix node_features(const Community& c) {
  NodeFeatureMatrix out;
  out.community = c.id;
  out.order = c.subgraph.node_ids();
  out.values = node_feature_values(c.subgraph);
  return out;
}

namespace {

void require_feature_columns(const Matrix& m) {
  if (m.cols() != kFeatureCount) {
    throw DataError("feature matrix has " + std::to_string(m.cols()) +
                    " columns, expected " + std::to_string(kFeatureCount));
  }
}

}  // namespace

TrainingStats fit_training_stats(const std::vector<const Matrix*>& matrices) {
  TrainingStats stats;
  std::int64_t rows = 0;
  Vector sum = Vector::Zero(kFeatureCount);
  for (const Matrix* m : matrices) {
    require_feature_columns(*m);
    sum += m->colwise().sum().transpose();
    rows += m->rows();
  }
  if (rows == 0) throw DataError("cannot fit feature stats on an empty corpus");
  stats.mean = sum / static_cast<double>(rows);
  Vector sq = Vector::Zero(kFeatureCount);
  for (const Matrix* m : matrices) {
    for (int c = 0; c < kFeatureCount; ++c) {
      sq(c) += (m->col(c).array() - stats.mean(c)).square().sum();
    }
  }
  stats.stddev = (sq / static_cast<double>(rows)).array().sqrt().max(1e-12);
  return stats;
}

Matrix standardize(const Matrix& values, const TrainingStats& stats) {
  require_feature_columns(values);
  Matrix out(values.rows(), values.cols());
  for (int c = 0; c < kFeatureCount; ++c) {
    out.col(c) = (values.col(c).array() - stats.mean(c)) / stats.stddev(c);
  }
  return out;
}

Matrix destandardize(const Matrix& standardized, const TrainingStats& stats) {
  require_feature_columns(standardized);
  Matrix out(standardized.rows(), standardized.cols());
  for (int c = 0; c < kFeatureCount; ++c) {
    out.col(c) = standardized.col(c).array() * stats.stddev(c) + stats.mean(c);
  }
  return out;
}

}  // namespace txtopo
