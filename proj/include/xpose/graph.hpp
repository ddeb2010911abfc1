#ifndef XPOSE_GRAPH_HPP
#define XPOSE_GRAPH_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "xpose/geom.hpp"

namespace xpose {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Tangent vector layout: [omega (rotation, rad); upsilon (translation)].
Vector6d se3_log(const RigidTransformd& T);
RigidTransformd se3_exp(const Vector6d& v);

enum class EdgeKind { Odometry, ClosureFull, ClosureRotationOnly };

std::string to_string(EdgeKind kind);
EdgeKind edge_kind_from_string(const std::string& text);

/// Measurement Z of T_i * T_j^-1, i.e. x_ci = Z x_cj for world->camera nodes.
struct PoseEdge {
  EdgeKind kind = EdgeKind::Odometry;
  int i = 0;
  int j = 0;
  RigidTransformd measurement;
  double weight = 1.0;
};

/// World->camera nodes; node 0 is fixed.
struct PoseGraph {
  std::vector<RigidTransformd> nodes;
  std::vector<PoseEdge> edges;

  void validate() const;
  /// Sum of w * |r|^2, with r = log(Z^-1 T_i T_j^-1) (rotation block only
  /// for rotation-only closures).
  double total_residual() const;
};

struct OptimizeOptions {
  int max_iters = 100;
  double damping = 1e-3;
  double jacobian_step = 1e-6;
};

struct OptimizeResult {
  PoseGraph graph;
  std::vector<double> residual_history;  // initial, then after each accepted step
  int iterations = 0;
};

/// Levenberg-Marquardt over all nodes but node 0 with central-difference
/// Jacobians; damping x10 on rejected steps, x0.5 on accepted ones.
/// DisconnectedGraph when a node cannot be reached from node 0.
OptimizeResult optimize(const PoseGraph& graph, const OptimizeOptions& options = {});

/// Text format, one record per line ('#' comments allowed):
///   NODE id tx ty tz qx qy qz qw
///   EDGE kind i j tx ty tz qx qy qz qw weight
/// with kind one of odometry, closure_full, closure_rotation_only.
PoseGraph parse_graph(const std::string& text);
std::string format_graph(const PoseGraph& graph);
PoseGraph read_graph(const std::filesystem::path& path);
void write_graph(const PoseGraph& graph, const std::filesystem::path& path);

}  // namespace xpose

#endif  // XPOSE_GRAPH_HPP
