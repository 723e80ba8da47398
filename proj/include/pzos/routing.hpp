#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "pzos/problem.hpp"

namespace pzos::routing {

/// Directed arc with affine latency a * f + b.
struct Edge {
  int tail = 0;
  int head = 0;
  double a = 1.0;
  double b = 1.0;
};

/// User group: fixed OD pair, demand and toll sensitivity.
struct Commodity {
  int origin = 0;
  int destination = 0;
  double demand = 1.0;
  double sensitivity = 1.0;
};

struct RoutingInstance {
  int vertices = 0;
  std::vector<Edge> edges;
  std::vector<Commodity> commodities;
  double lambda = 1.0;
  std::uint64_t seed = 0;

  Index edge_count() const { return static_cast<Index>(edges.size()); }
  double total_demand() const;
  /// Throws InvalidArgument on bad indices, non-positive parameters or an
  /// unreachable destination.
  void validate() const;
};

struct GeneratorParams {
  int min_vertices = 6;
  int max_vertices = 25;
  int min_edges = 12;
  int max_edges = 119;
  int min_commodities = 2;
  int max_commodities = 5;
};

/// Random acyclic network: a Hamiltonian spine along a random vertex order
/// plus uniformly chosen extra forward arcs. Edge count is drawn from
/// [max(min_edges, 3V/2), min(max_edges, V(V-1)/2)].
RoutingInstance generate_routing_instance(RngStream& rng, const GeneratorParams& params = {});

enum class InitialAssignment {
  /// Every class on its shortest path at zero flow.
  free_flow,
  /// Classes loaded one after another on costs that include earlier classes.
  incremental,
};

struct WardropOptions {
  double tol = 1e-6;
  int max_iterations = 5000;
  InitialAssignment start = InitialAssignment::free_flow;
  bool record_potential = false;
};

struct EquilibriumFlow {
  Vec aggregate;
  /// edges x classes
  Mat per_class;
  double duality_gap = 0.0;
  double potential = 0.0;
  int iterations = 0;
  /// Potential after each sweep, when requested.
  std::vector<double> potential_history;
};

/// Multi-class Wardrop equilibrium under tolls: minimizes the Beckmann
/// potential with a pairwise (away-step) Frank-Wolfe method whose linear
/// oracle is a per-class label-correcting shortest path. Stops when the
/// duality gap is at most tol * (1 + |potential|) and no used path exceeds its
/// class minimum cost by more than tol.
EquilibriumFlow wardrop_equilibrium(const RoutingInstance& instance, const Vec& tolls,
                                    const WardropOptions& options = {});

double beckmann_potential(const RoutingInstance& instance, const Vec& tolls, const Mat& per_class);

struct CertificateReport {
  /// Largest reduced cost over edges carrying more than 1e-6 of a class.
  double max_cost_excess = 0.0;
  /// Largest conservation residual relative to the class demand.
  double max_conservation_residual = 0.0;
  double min_class_flow = 0.0;
  bool ok = false;
};

/// Used-path optimality certificate: each edge carrying class flow lies on a
/// path within 10 * tol of that class's cheapest perceived OD cost.
CertificateReport equilibrium_certificate(const RoutingInstance& instance, const Vec& tolls,
                                          const EquilibriumFlow& flow, double tol);

/// Revenue sum(tau * f) - lambda |tau|^2 and its partial gradients.
LeaderEvaluation revenue_objective_and_grads(const RoutingInstance& instance, const Vec& tolls,
                                             const Vec& flow);

Vec initial_tolls(const RoutingInstance& instance);

/// Toll vector -> aggregate equilibrium edge flow.
class RoutingOracle final : public FollowerOracle {
 public:
  explicit RoutingOracle(std::shared_ptr<const RoutingInstance> instance,
                         WardropOptions options = {});

  /// Nonnegativity and aggregate flow conservation within kFeasibilityTol.
  bool is_feasible(const Vec& y) const override;
  const RoutingInstance& instance() const { return *instance_; }

 protected:
  Vec solve(const Vec& tolls) const override;

 private:
  std::shared_ptr<const RoutingInstance> instance_;
  WardropOptions options_;
  Vec net_supply_;
};

class RevenueObjective final : public LeaderObjective {
 public:
  explicit RevenueObjective(std::shared_ptr<const RoutingInstance> instance);

  double eval(const Vec& tolls, const Vec& flow) const override;
  Vec grad_x(const Vec& tolls, const Vec& flow) const override;
  Vec grad_y(const Vec& tolls, const Vec& flow) const override;
  Sense sense() const override { return Sense::maximize; }

 private:
  std::shared_ptr<const RoutingInstance> instance_;
};

Problem make_routing_problem(std::shared_ptr<const RoutingInstance> instance,
                             WardropOptions options = {});

}  // namespace pzos::routing
