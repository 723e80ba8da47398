#include "pzos/routing.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <optional>
#include <span>

#include <fmt/format.h>

#include "pzos/errors.hpp"

namespace pzos::routing {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Adjacency {
  std::vector<std::vector<int>> out;
  std::vector<std::vector<int>> in;

  explicit Adjacency(const RoutingInstance& inst)
      : out(static_cast<std::size_t>(inst.vertices)), in(static_cast<std::size_t>(inst.vertices)) {
    for (std::size_t e = 0; e < inst.edges.size(); ++e) {
      out[static_cast<std::size_t>(inst.edges[e].tail)].push_back(static_cast<int>(e));
      in[static_cast<std::size_t>(inst.edges[e].head)].push_back(static_cast<int>(e));
    }
  }
};

struct ShortestPathTree {
  std::vector<double> dist;
  std::vector<int> pred_edge;
};

// Queue-based label correcting (Bellman-Ford). Handles negative arc costs and
// reports negative cycles. With `reverse`, distances are to `root`.
ShortestPathTree label_correcting(const RoutingInstance& inst, const Adjacency& adj, int root,
                                  std::span<const double> cost, bool reverse, int class_index) {
  const auto n = static_cast<std::size_t>(inst.vertices);
  ShortestPathTree tree{std::vector<double>(n, kInf), std::vector<int>(n, -1)};
  std::vector<int> relabels(n, 0);
  std::vector<char> queued(n, 0);
  std::deque<int> queue;
  tree.dist[static_cast<std::size_t>(root)] = 0.0;
  queue.push_back(root);
  queued[static_cast<std::size_t>(root)] = 1;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    queued[static_cast<std::size_t>(u)] = 0;
    const double du = tree.dist[static_cast<std::size_t>(u)];
    const auto& arcs = reverse ? adj.in[static_cast<std::size_t>(u)] : adj.out[static_cast<std::size_t>(u)];
    for (int e : arcs) {
      const Edge& edge = inst.edges[static_cast<std::size_t>(e)];
      const int v = reverse ? edge.tail : edge.head;
      const double cand = du + cost[static_cast<std::size_t>(e)];
      auto& dv = tree.dist[static_cast<std::size_t>(v)];
      if (cand < dv - 1e-14 * (1.0 + std::abs(cand))) {
        dv = cand;
        tree.pred_edge[static_cast<std::size_t>(v)] = e;
        if (++relabels[static_cast<std::size_t>(v)] > inst.vertices) {
          throw SolverError(
              fmt::format("negative-cost cycle in perceived costs of class {}", class_index));
        }
        if (!queued[static_cast<std::size_t>(v)]) {
          queued[static_cast<std::size_t>(v)] = 1;
          queue.push_back(v);
        }
      }
    }
  }
  return tree;
}

std::vector<int> extract_path(const RoutingInstance& inst, const ShortestPathTree& tree, int origin,
                              int destination) {
  std::vector<int> path;
  int v = destination;
  while (v != origin) {
    const int e = tree.pred_edge[static_cast<std::size_t>(v)];
    if (e < 0) {
      throw SolverError(fmt::format("vertex {} unreachable from {}", destination, origin));
    }
    path.push_back(e);
    v = inst.edges[static_cast<std::size_t>(e)].tail;
    if (path.size() > inst.edges.size()) {
      throw SolverError("shortest-path tree contains a cycle");
    }
  }
  std::reverse(path.begin(), path.end());
  return path;
}

struct PathFlow {
  std::vector<int> edges;
  double flow = 0.0;
};

// Path-based state of the pairwise Frank-Wolfe solver.
class EquilibriumSolver {
 public:
  EquilibriumSolver(const RoutingInstance& inst, const Vec& tolls, const WardropOptions& opts)
      : inst_(inst),
        tolls_(tolls),
        opts_(opts),
        adj_(inst),
        flow_(inst.edges.size(), 0.0),
        cost_(inst.edges.size(), 0.0),
        mark_(inst.edges.size(), 0),
        paths_(inst.commodities.size()) {}

  EquilibriumFlow solve() {
    initial_assignment();
    EquilibriumFlow out;
    for (int it = 0;; ++it) {
      const auto [gap, excess] = measure();
      const double phi = potential();
      if (opts_.record_potential) out.potential_history.push_back(phi);
      if (gap <= opts_.tol * (1.0 + std::abs(phi)) && excess <= opts_.tol) {
        out.duality_gap = gap;
        out.potential = phi;
        out.iterations = it;
        break;
      }
      if (it >= opts_.max_iterations) {
        throw SolverError(fmt::format(
            "equilibrium solver did not converge in {} sweeps (gap {:.3e}, excess {:.3e})",
            opts_.max_iterations, gap, excess));
      }
      for (std::size_t i = 0; i < inst_.commodities.size(); ++i) {
        equilibrate_class(i);
      }
      exchange_between_classes();
    }
    out.aggregate = Eigen::Map<const Vec>(flow_.data(), static_cast<Index>(flow_.size()));
    out.per_class = Mat::Zero(static_cast<Index>(inst_.edges.size()),
                              static_cast<Index>(inst_.commodities.size()));
    for (std::size_t i = 0; i < paths_.size(); ++i) {
      for (const PathFlow& p : paths_[i]) {
        for (int e : p.edges) out.per_class(e, static_cast<Index>(i)) += p.flow;
      }
    }
    return out;
  }

 private:
  void update_costs(std::size_t cls) {
    const double inv_s = 1.0 / inst_.commodities[cls].sensitivity;
    for (std::size_t e = 0; e < inst_.edges.size(); ++e) {
      const Edge& edge = inst_.edges[e];
      cost_[e] = edge.a * flow_[e] + edge.b + tolls_[static_cast<Index>(e)] * inv_s;
    }
  }

  double path_cost(const std::vector<int>& edges) const {
    double c = 0.0;
    for (int e : edges) c += cost_[static_cast<std::size_t>(e)];
    return c;
  }

  std::vector<int> shortest_path(std::size_t cls) {
    const Commodity& com = inst_.commodities[cls];
    const auto tree =
        label_correcting(inst_, adj_, com.origin, cost_, false, static_cast<int>(cls));
    return extract_path(inst_, tree, com.origin, com.destination);
  }

  void shift(std::vector<int> const& edges, double amount) {
    for (int e : edges) flow_[static_cast<std::size_t>(e)] += amount;
  }

  void initial_assignment() {
    for (std::size_t i = 0; i < inst_.commodities.size(); ++i) {
      if (opts_.start == InitialAssignment::free_flow) {
        // Costs at zero flow regardless of classes already loaded.
        const double inv_s = 1.0 / inst_.commodities[i].sensitivity;
        for (std::size_t e = 0; e < inst_.edges.size(); ++e) {
          cost_[e] = inst_.edges[e].b + tolls_[static_cast<Index>(e)] * inv_s;
        }
      } else {
        update_costs(i);
      }
      PathFlow p{shortest_path(i), inst_.commodities[i].demand};
      shift(p.edges, p.flow);
      paths_[i].push_back(std::move(p));
    }
  }

  // Duality gap and largest used-path cost excess at the current flow.
  std::pair<double, double> measure() {
    double gap = 0.0;
    double excess = 0.0;
    for (std::size_t i = 0; i < inst_.commodities.size(); ++i) {
      update_costs(i);
      const double best = path_cost(shortest_path(i));
      for (const PathFlow& p : paths_[i]) {
        const double over = path_cost(p.edges) - best;
        gap += p.flow * over;
        if (p.flow > 0.0) excess = std::max(excess, over);
      }
    }
    return {std::max(gap, 0.0), excess};
  }

  double potential() const {
    double phi = 0.0;
    for (std::size_t e = 0; e < inst_.edges.size(); ++e) {
      const Edge& edge = inst_.edges[e];
      phi += 0.5 * edge.a * flow_[e] * flow_[e] + edge.b * flow_[e];
    }
    for (std::size_t i = 0; i < paths_.size(); ++i) {
      const double inv_s = 1.0 / inst_.commodities[i].sensitivity;
      for (const PathFlow& p : paths_[i]) {
        for (int e : p.edges) phi += tolls_[e] * inv_s * p.flow;
      }
    }
    return phi;
  }

  // Moves flow from every costlier active path of the class onto its cheapest
  // path, each move an exact line search along the pairwise direction.
  void equilibrate_class(std::size_t cls) {
    auto& active = paths_[cls];
    update_costs(cls);
    std::vector<int> sp = shortest_path(cls);
    auto found = std::find_if(active.begin(), active.end(),
                              [&](const PathFlow& p) { return p.edges == sp; });
    std::size_t best = 0;
    if (found == active.end()) {
      active.push_back(PathFlow{std::move(sp), 0.0});
      best = active.size() - 1;
    } else {
      best = static_cast<std::size_t>(found - active.begin());
    }

    for (std::size_t p = 0; p < active.size(); ++p) {
      if (p == best || active[p].flow <= 0.0) continue;
      update_costs(cls);
      const double diff = path_cost(active[p].edges) - path_cost(active[best].edges);
      if (diff <= 0.0) continue;
      double curvature = 0.0;
      for (int e : active[best].edges) mark_[static_cast<std::size_t>(e)] += 1;
      for (int e : active[p].edges) mark_[static_cast<std::size_t>(e)] -= 1;
      for (int e : active[best].edges) {
        if (mark_[static_cast<std::size_t>(e)] != 0) curvature += inst_.edges[static_cast<std::size_t>(e)].a;
      }
      for (int e : active[p].edges) {
        if (mark_[static_cast<std::size_t>(e)] != 0) curvature += inst_.edges[static_cast<std::size_t>(e)].a;
      }
      for (int e : active[best].edges) mark_[static_cast<std::size_t>(e)] = 0;
      for (int e : active[p].edges) mark_[static_cast<std::size_t>(e)] = 0;
      if (curvature <= 0.0) continue;
      double step = diff / curvature;
      const double dust = 1e-13 * inst_.commodities[cls].demand;
      if (step >= active[p].flow - dust) step = active[p].flow;
      active[p].flow -= step;
      active[best].flow += step;
      shift(active[p].edges, -step);
      shift(active[best].edges, step);
    }
    std::erase_if(active, [](const PathFlow& p) { return p.flow <= 0.0; });
  }

  double path_toll(const std::vector<int>& edges) const {
    double t = 0.0;
    for (int e : edges) t += tolls_[e];
    return t;
  }

  // Index of the class's path with these edges, appending an empty one if absent.
  std::size_t find_or_add(std::size_t cls, const std::vector<int>& edges) {
    auto& active = paths_[cls];
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (active[k].edges == edges) return k;
    }
    active.push_back(PathFlow{edges, 0.0});
    return active.size() - 1;
  }

  std::vector<int> path_nodes(const std::vector<int>& edges) const {
    std::vector<int> nodes{inst_.edges[static_cast<std::size_t>(edges.front())].tail};
    for (int e : edges) nodes.push_back(inst_.edges[static_cast<std::size_t>(e)].head);
    return nodes;
  }

  static bool simple(const std::vector<int>& nodes) {
    std::vector<int> sorted = nodes;
    std::sort(sorted.begin(), sorted.end());
    return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
  }

  struct Swap {
    std::vector<int> new_p;
    std::vector<int> new_q;
  };

  // First segment exchange between P (class i) and Q (class j) that lowers
  // the toll part of the potential: both paths visit u then v, and the
  // classes trade their u-v segments.
  std::optional<Swap> find_swap(const std::vector<int>& P, const std::vector<int>& Q, double kij) const {
    const auto np = path_nodes(P);
    const auto nq = path_nodes(Q);
    for (std::size_t a = 0; a < np.size(); ++a) {
      const auto qa_it = std::find(nq.begin(), nq.end(), np[a]);
      if (qa_it == nq.end()) continue;
      const auto qa = static_cast<std::size_t>(qa_it - nq.begin());
      for (std::size_t b = a + 1; b < np.size(); ++b) {
        const auto qb_it = std::find(nq.begin() + static_cast<std::ptrdiff_t>(qa) + 1, nq.end(), np[b]);
        if (qb_it == nq.end()) continue;
        const auto qb = static_cast<std::size_t>(qb_it - nq.begin());
        const std::vector<int> seg_p(P.begin() + static_cast<std::ptrdiff_t>(a), P.begin() + static_cast<std::ptrdiff_t>(b));
        const std::vector<int> seg_q(Q.begin() + static_cast<std::ptrdiff_t>(qa), Q.begin() + static_cast<std::ptrdiff_t>(qb));
        if (seg_p == seg_q) continue;
        const double change = (path_toll(seg_q) - path_toll(seg_p)) * kij;
        if (!(change < -1e-12)) continue;
        Swap s;
        s.new_p.assign(P.begin(), P.begin() + static_cast<std::ptrdiff_t>(a));
        s.new_p.insert(s.new_p.end(), seg_q.begin(), seg_q.end());
        s.new_p.insert(s.new_p.end(), P.begin() + static_cast<std::ptrdiff_t>(b), P.end());
        s.new_q.assign(Q.begin(), Q.begin() + static_cast<std::ptrdiff_t>(qa));
        s.new_q.insert(s.new_q.end(), seg_p.begin(), seg_p.end());
        s.new_q.insert(s.new_q.end(), Q.begin() + static_cast<std::ptrdiff_t>(qb), Q.end());
        if (simple(path_nodes(s.new_p)) && simple(path_nodes(s.new_q))) return s;
      }
    }
    return std::nullopt;
  }

  // Two classes perceiving tolls differently trade path segments between
  // shared nodes: i moves from P to P' while j moves from Q to Q', leaving
  // every edge flow, and so the latency part of the potential, unchanged.
  // The toll part drops linearly, so each trade runs to the boundary.
  // Per-class sweeps alone zig-zag along these zero-curvature directions.
  void exchange_between_classes() {
    const auto& com = inst_.commodities;
    const std::size_t cap = 8 * (paths_.size() + 1);
    std::size_t trades = 0;
    for (std::size_t i = 0; i < com.size(); ++i) {
      for (std::size_t j = 0; j < com.size(); ++j) {
        if (i == j) continue;
        const double kij = 1.0 / com[i].sensitivity - 1.0 / com[j].sensitivity;
        if (kij == 0.0) continue;
        for (std::size_t p = 0; p < paths_[i].size() && trades < cap; ++p) {
          for (std::size_t q = 0; q < paths_[j].size() && trades < cap; ++q) {
            if (paths_[i][p].flow <= 0.0) break;
            if (paths_[j][q].flow <= 0.0) continue;
            const auto swap = find_swap(paths_[i][p].edges, paths_[j][q].edges, kij);
            if (!swap) continue;
            const double move = std::min(paths_[i][p].flow, paths_[j][q].flow);
            const std::size_t ip = find_or_add(i, swap->new_p);
            const std::size_t jq = find_or_add(j, swap->new_q);
            paths_[i][p].flow -= move;
            paths_[i][ip].flow += move;
            paths_[j][q].flow -= move;
            paths_[j][jq].flow += move;
            ++trades;
          }
        }
      }
    }
    for (auto& active : paths_) {
      std::erase_if(active, [](const PathFlow& f) { return f.flow <= 0.0; });
    }
  }

  const RoutingInstance& inst_;
  const Vec& tolls_;
  const WardropOptions& opts_;
  Adjacency adj_;
  std::vector<double> flow_;
  std::vector<double> cost_;
  std::vector<int> mark_;
  std::vector<std::vector<PathFlow>> paths_;
};

bool reachable(const Adjacency& adj, const RoutingInstance& inst, int from, int to) {
  std::vector<char> seen(static_cast<std::size_t>(inst.vertices), 0);
  std::vector<int> stack{from};
  seen[static_cast<std::size_t>(from)] = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    if (u == to) return true;
    for (int e : adj.out[static_cast<std::size_t>(u)]) {
      const int v = inst.edges[static_cast<std::size_t>(e)].head;
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = 1;
        stack.push_back(v);
      }
    }
  }
  return false;
}

Vec net_supply(const RoutingInstance& inst) {
  Vec s = Vec::Zero(inst.vertices);
  for (const Commodity& c : inst.commodities) {
    s[c.origin] += c.demand;
    s[c.destination] -= c.demand;
  }
  return s;
}

}  // namespace

double RoutingInstance::total_demand() const {
  double d = 0.0;
  for (const Commodity& c : commodities) d += c.demand;
  return d;
}

void RoutingInstance::validate() const {
  if (vertices < 2) throw InvalidArgument("routing instance needs at least two vertices");
  if (edges.empty()) throw InvalidArgument("routing instance has no edges");
  if (commodities.empty()) throw InvalidArgument("routing instance has no commodities");
  if (!(lambda >= 0.0)) throw InvalidArgument("lambda must be nonnegative");
  for (const Edge& e : edges) {
    if (e.tail < 0 || e.tail >= vertices || e.head < 0 || e.head >= vertices || e.tail == e.head) {
      throw InvalidArgument(fmt::format("bad edge {} -> {}", e.tail, e.head));
    }
    if (!(e.a > 0.0) || !(e.b > 0.0)) {
      throw InvalidArgument("edge latency coefficients must be positive");
    }
  }
  const Adjacency adj(*this);
  for (const Commodity& c : commodities) {
    if (c.origin < 0 || c.origin >= vertices || c.destination < 0 || c.destination >= vertices ||
        c.origin == c.destination) {
      throw InvalidArgument("bad commodity endpoints");
    }
    if (!(c.demand > 0.0) || !(c.sensitivity > 0.0)) {
      throw InvalidArgument("commodity demand and sensitivity must be positive");
    }
    if (!reachable(adj, *this, c.origin, c.destination)) {
      throw InvalidArgument(
          fmt::format("destination {} unreachable from origin {}", c.destination, c.origin));
    }
  }
}

RoutingInstance generate_routing_instance(RngStream& rng, const GeneratorParams& params) {
  if (params.min_vertices < 2 || params.max_vertices < params.min_vertices ||
      params.min_commodities < 1 || params.max_commodities < params.min_commodities ||
      params.max_edges < params.min_edges) {
    throw InvalidArgument("empty routing generator range");
  }
  RoutingInstance inst;
  inst.seed = rng.seed();
  inst.vertices = static_cast<int>(rng.next_int(params.min_vertices, params.max_vertices));
  const int v = inst.vertices;
  const int max_forward = v * (v - 1) / 2;
  const int hi = std::min(params.max_edges, max_forward);
  const int lo = std::min(hi, std::max(params.min_edges, (3 * v) / 2));
  if (hi < v - 1) {
    throw GenerationError(fmt::format("{} edges cannot connect {} vertices", hi, v));
  }
  const int m = static_cast<int>(rng.next_int(std::max(lo, v - 1), hi));

  std::vector<int> order(static_cast<std::size_t>(v));
  std::iota(order.begin(), order.end(), 0);
  for (int i = v - 1; i > 0; --i) {
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.next_int(0, i))]);
  }
  std::vector<int> rank(static_cast<std::size_t>(v));
  for (int i = 0; i < v; ++i) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i;

  std::vector<std::pair<int, int>> arcs;
  for (int i = 1; i < v; ++i) {
    arcs.emplace_back(order[static_cast<std::size_t>(i - 1)], order[static_cast<std::size_t>(i)]);
  }
  std::vector<std::pair<int, int>> extra;
  for (int i = 0; i < v; ++i) {
    for (int j = i + 2; j < v; ++j) {
      extra.emplace_back(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
  }
  // Partial Fisher-Yates: first (m - v + 1) entries become the extra arcs.
  const auto n_extra = static_cast<std::size_t>(m - (v - 1));
  for (std::size_t k = 0; k < n_extra; ++k) {
    const auto pick = static_cast<std::size_t>(rng.next_int(static_cast<std::int64_t>(k),
                                                            static_cast<std::int64_t>(extra.size()) - 1));
    std::swap(extra[k], extra[pick]);
    arcs.push_back(extra[k]);
  }
  for (const auto& [t, h] : arcs) {
    Edge e;
    e.tail = t;
    e.head = h;
    e.a = rng.next_uniform(1.0, 5.0);
    e.b = rng.next_uniform(1.0, 10.0);
    inst.edges.push_back(e);
  }

  const int k = static_cast<int>(rng.next_int(params.min_commodities, params.max_commodities));
  const Adjacency adj(inst);
  for (int c = 0; c < k; ++c) {
    Commodity com;
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      com.origin = static_cast<int>(rng.next_int(0, v - 1));
      com.destination = static_cast<int>(rng.next_int(0, v - 1));
      ok = com.origin != com.destination && reachable(adj, inst, com.origin, com.destination);
    }
    if (!ok) {
      throw GenerationError("could not draw a reachable origin-destination pair");
    }
    com.demand = static_cast<double>(rng.next_int(3, 12));
    com.sensitivity = rng.next_uniform(0.1, 2.0);
    inst.commodities.push_back(com);
  }
  inst.lambda = 1.0;
  (void)rank;
  inst.validate();
  return inst;
}

EquilibriumFlow wardrop_equilibrium(const RoutingInstance& instance, const Vec& tolls,
                                    const WardropOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("equilibrium tolerance must be positive");
  if (tolls.size() != instance.edge_count()) {
    throw InvalidArgument(fmt::format("toll vector has length {}, instance has {} edges",
                                      tolls.size(), instance.edge_count()));
  }
  if (!tolls.allFinite()) throw InvalidArgument("tolls must be finite");
  EquilibriumSolver solver(instance, tolls, options);
  return solver.solve();
}

double beckmann_potential(const RoutingInstance& instance, const Vec& tolls, const Mat& per_class) {
  double phi = 0.0;
  const Vec agg = per_class.rowwise().sum();
  for (Index e = 0; e < instance.edge_count(); ++e) {
    const Edge& edge = instance.edges[static_cast<std::size_t>(e)];
    phi += 0.5 * edge.a * agg[e] * agg[e] + edge.b * agg[e];
    for (Index i = 0; i < per_class.cols(); ++i) {
      phi += tolls[e] / instance.commodities[static_cast<std::size_t>(i)].sensitivity * per_class(e, i);
    }
  }
  return phi;
}

CertificateReport equilibrium_certificate(const RoutingInstance& instance, const Vec& tolls,
                                          const EquilibriumFlow& flow, double tol) {
  const Adjacency adj(instance);
  CertificateReport rep;
  rep.min_class_flow = flow.per_class.size() > 0 ? flow.per_class.minCoeff() : 0.0;
  std::vector<double> cost(instance.edges.size());
  for (std::size_t i = 0; i < instance.commodities.size(); ++i) {
    const Commodity& com = instance.commodities[i];
    const auto col = static_cast<Index>(i);
    for (std::size_t e = 0; e < instance.edges.size(); ++e) {
      const Edge& edge = instance.edges[e];
      cost[e] = edge.a * flow.aggregate[static_cast<Index>(e)] + edge.b +
                tolls[static_cast<Index>(e)] / com.sensitivity;
    }
    const auto fwd = label_correcting(instance, adj, com.origin, cost, false, static_cast<int>(i));
    const auto bwd = label_correcting(instance, adj, com.destination, cost, true, static_cast<int>(i));
    const double best = fwd.dist[static_cast<std::size_t>(com.destination)];
    for (std::size_t e = 0; e < instance.edges.size(); ++e) {
      if (flow.per_class(static_cast<Index>(e), col) <= 1e-6) continue;
      const Edge& edge = instance.edges[e];
      const double through = fwd.dist[static_cast<std::size_t>(edge.tail)] + cost[e] +
                             bwd.dist[static_cast<std::size_t>(edge.head)];
      rep.max_cost_excess = std::max(rep.max_cost_excess, through - best);
    }
    Vec balance = Vec::Zero(instance.vertices);
    for (std::size_t e = 0; e < instance.edges.size(); ++e) {
      const double f = flow.per_class(static_cast<Index>(e), col);
      balance[instance.edges[e].tail] += f;
      balance[instance.edges[e].head] -= f;
    }
    balance[com.origin] -= com.demand;
    balance[com.destination] += com.demand;
    rep.max_conservation_residual =
        std::max(rep.max_conservation_residual, balance.cwiseAbs().maxCoeff() / com.demand);
  }
  rep.ok = rep.max_cost_excess <= 10.0 * tol && rep.max_conservation_residual <= 1e-6 &&
           rep.min_class_flow >= -1e-12;
  return rep;
}

LeaderEvaluation revenue_objective_and_grads(const RoutingInstance& instance, const Vec& tolls,
                                             const Vec& flow) {
  if (tolls.size() != instance.edge_count() || flow.size() != instance.edge_count()) {
    throw InvalidArgument("revenue: toll and flow vectors must have one entry per edge");
  }
  LeaderEvaluation out;
  out.value = tolls.dot(flow) - instance.lambda * tolls.squaredNorm();
  out.grad_x = flow - 2.0 * instance.lambda * tolls;
  out.grad_y = tolls;
  return out;
}

Vec initial_tolls(const RoutingInstance& instance) { return Vec::Zero(instance.edge_count()); }

RoutingOracle::RoutingOracle(std::shared_ptr<const RoutingInstance> instance, WardropOptions options)
    : FollowerOracle(instance->edge_count(), instance->edge_count()),
      instance_(std::move(instance)),
      options_(options),
      net_supply_(net_supply(*instance_)) {}

bool RoutingOracle::is_feasible(const Vec& y) const {
  if (y.size() != instance_->edge_count() || !y.allFinite()) return false;
  if (y.minCoeff() < -kFeasibilityTol) return false;
  Vec balance = -net_supply_;
  for (std::size_t e = 0; e < instance_->edges.size(); ++e) {
    balance[instance_->edges[e].tail] += y[static_cast<Index>(e)];
    balance[instance_->edges[e].head] -= y[static_cast<Index>(e)];
  }
  return balance.cwiseAbs().maxCoeff() <= kFeasibilityTol * (1.0 + instance_->total_demand());
}

Vec RoutingOracle::solve(const Vec& tolls) const {
  return wardrop_equilibrium(*instance_, tolls, options_).aggregate;
}

RevenueObjective::RevenueObjective(std::shared_ptr<const RoutingInstance> instance)
    : instance_(std::move(instance)) {}

double RevenueObjective::eval(const Vec& tolls, const Vec& flow) const {
  return tolls.dot(flow) - instance_->lambda * tolls.squaredNorm();
}

Vec RevenueObjective::grad_x(const Vec& tolls, const Vec& flow) const {
  return flow - 2.0 * instance_->lambda * tolls;
}

Vec RevenueObjective::grad_y(const Vec& tolls, const Vec&) const { return tolls; }

Problem make_routing_problem(std::shared_ptr<const RoutingInstance> instance, WardropOptions options) {
  Problem p;
  p.leader = std::make_shared<RevenueObjective>(instance);
  p.oracle = std::make_shared<RoutingOracle>(instance, options);
  p.x0 = initial_tolls(*instance);
  p.name = "routing";
  return p;
}

}  // namespace pzos::routing
