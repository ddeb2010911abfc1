#include "xpose/graph.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <queue>
#include <sstream>

#include <Eigen/Cholesky>

#include "xpose/errors.hpp"
#include "xpose/png_io.hpp"

namespace xpose {

namespace {

Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
  Eigen::Matrix3d W;
  W << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return W;
}

constexpr double kSmallAngle = 1e-6;

}  // namespace

Vector6d se3_log(const RigidTransformd& T) {
  const Eigen::Matrix3d& R = T.rotation;
  const Eigen::Vector3d axis_sin(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));  // 2 sin(theta) n
  const double theta = std::atan2(0.5 * axis_sin.norm(), 0.5 * (R.trace() - 1.0));
  if (theta > std::numbers::pi - 1e-6) fail(ErrorCode::NearPiRotation, "rotation angle too close to 180 degrees");
  Eigen::Vector3d w;
  Eigen::Matrix3d V_inv;
  if (theta < kSmallAngle) {
    w = 0.5 * axis_sin;
    const Eigen::Matrix3d W = hat(w);
    V_inv = Eigen::Matrix3d::Identity() - 0.5 * W + W * W / 12.0;
  } else {
    w = theta / (2.0 * std::sin(theta)) * axis_sin;
    const Eigen::Matrix3d W = hat(w);
    const double c = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) / (theta * theta);
    V_inv = Eigen::Matrix3d::Identity() - 0.5 * W + c * W * W;
  }
  Vector6d v;
  v << w, V_inv * T.translation;
  return v;
}

RigidTransformd se3_exp(const Vector6d& v) {
  const Eigen::Vector3d w = v.head<3>();
  const double theta = w.norm();
  const Eigen::Matrix3d W = hat(w);
  Eigen::Matrix3d R, V;
  if (theta < kSmallAngle) {
    R = Eigen::Matrix3d::Identity() + W + 0.5 * W * W;
    V = Eigen::Matrix3d::Identity() + 0.5 * W + W * W / 6.0;
  } else {
    const double t2 = theta * theta;
    R = Eigen::Matrix3d::Identity() + std::sin(theta) / theta * W + (1.0 - std::cos(theta)) / t2 * W * W;
    V = Eigen::Matrix3d::Identity() + (1.0 - std::cos(theta)) / t2 * W + (theta - std::sin(theta)) / (t2 * theta) * W * W;
  }
  return {R, V * v.tail<3>()};
}

std::string to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Odometry: return "odometry";
    case EdgeKind::ClosureFull: return "closure_full";
    case EdgeKind::ClosureRotationOnly: return "closure_rotation_only";
  }
  return "odometry";
}

EdgeKind edge_kind_from_string(const std::string& text) {
  if (text == "odometry") return EdgeKind::Odometry;
  if (text == "closure_full") return EdgeKind::ClosureFull;
  if (text == "closure_rotation_only") return EdgeKind::ClosureRotationOnly;
  throw Error(ErrorCode::InvalidArgument, "unknown edge kind '" + text + "'");
}

void PoseGraph::validate() const {
  require(!nodes.empty(), "pose graph has no nodes");
  const int n = int(nodes.size());
  for (const auto& e : edges) {
    require(e.i >= 0 && e.i < n && e.j >= 0 && e.j < n && e.i != e.j, "edge endpoints must be distinct existing nodes");
    require(e.weight > 0 && std::isfinite(e.weight), "edge weight must be positive");
  }
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) {
    adj[e.i].push_back(e.j);
    adj[e.j].push_back(e.i);
  }
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  while (!q.empty()) {
    const int k = q.front();
    q.pop();
    for (int m : adj[k])
      if (!seen[m]) {
        seen[m] = true;
        q.push(m);
      }
  }
  for (int k = 0; k < n; ++k)
    if (!seen[k]) fail(ErrorCode::DisconnectedGraph, "node " + std::to_string(k) + " is not connected to node 0");
}

namespace {

// Stacked sqrt(w)-weighted residuals of all edges.
Eigen::VectorXd residuals(const std::vector<RigidTransformd>& nodes, const std::vector<PoseEdge>& edges) {
  Eigen::Index rows = 0;
  for (const auto& e : edges) rows += e.kind == EdgeKind::ClosureRotationOnly ? 3 : 6;
  Eigen::VectorXd r(rows);
  Eigen::Index at = 0;
  for (const auto& e : edges) {
    const Vector6d v = se3_log(e.measurement.inverse() * nodes[e.i] * nodes[e.j].inverse());
    const double s = std::sqrt(e.weight);
    if (e.kind == EdgeKind::ClosureRotationOnly) {
      r.segment<3>(at) = s * v.head<3>();
      at += 3;
    } else {
      r.segment<6>(at) = s * v;
      at += 6;
    }
  }
  return r;
}

}  // namespace

double PoseGraph::total_residual() const { return residuals(nodes, edges).squaredNorm(); }

OptimizeResult optimize(const PoseGraph& graph, const OptimizeOptions& options) {
  graph.validate();
  require(options.max_iters >= 0 && options.damping > 0 && options.jacobian_step > 0, "invalid optimizer options");
  OptimizeResult result;
  result.graph = graph;
  auto& nodes = result.graph.nodes;
  const auto& edges = result.graph.edges;
  const int n_free = int(nodes.size()) - 1;
  double cost = residuals(nodes, edges).squaredNorm();
  result.residual_history.push_back(cost);
  if (n_free == 0 || edges.empty()) return result;

  const int dim = 6 * n_free;
  double lambda = options.damping;
  const double h = options.jacobian_step;
  auto perturbed = [&](const std::vector<RigidTransformd>& base, const Eigen::VectorXd& delta) {
    std::vector<RigidTransformd> out = base;
    for (int k = 0; k < n_free; ++k) out[k + 1] = se3_exp(delta.segment<6>(6 * k)) * base[k + 1];
    return out;
  };

  for (int iter = 0; iter < options.max_iters; ++iter) {
    result.iterations = iter + 1;
    const Eigen::VectorXd r0 = residuals(nodes, edges);
    Eigen::MatrixXd J(r0.size(), dim);
    for (int c = 0; c < dim; ++c) {
      std::vector<RigidTransformd> plus = nodes, minus = nodes;
      Vector6d d = Vector6d::Zero();
      d[c % 6] = h;
      const int k = c / 6 + 1;
      plus[k] = se3_exp(d) * nodes[k];
      minus[k] = se3_exp(-d) * nodes[k];
      J.col(c) = (residuals(plus, edges) - residuals(minus, edges)) / (2 * h);
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r0;
    if (g.lpNorm<Eigen::Infinity>() < 1e-14) break;

    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      const Eigen::MatrixXd A = JtJ + lambda * Eigen::MatrixXd::Identity(dim, dim);
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      std::vector<RigidTransformd> candidate;
      double new_cost = 0;
      try {
        candidate = perturbed(nodes, step);
        new_cost = residuals(candidate, edges).squaredNorm();
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NearPiRotation) throw;
        new_cost = std::numeric_limits<double>::infinity();
      }
      if (new_cost < cost) {
        nodes = std::move(candidate);
        const double gain = cost - new_cost;
        cost = new_cost;
        result.residual_history.push_back(cost);
        lambda *= 0.5;
        accepted = true;
        if (gain < 1e-15 * (1.0 + cost) || step.norm() < 1e-12) return result;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) break;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

void write_pose(std::ostream& os, const RigidTransformd& T) {
  Eigen::Quaterniond q(T.rotation);
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1.0;
  os << T.translation.x() << ' ' << T.translation.y() << ' ' << T.translation.z() << ' ' << q.x() << ' ' << q.y()
     << ' ' << q.z() << ' ' << q.w();
}

RigidTransformd read_pose(std::istream& is, int line_no) {
  double tx, ty, tz, qx, qy, qz, qw;
  if (!(is >> tx >> ty >> tz >> qx >> qy >> qz >> qw))
    throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(line_no) + ": expected 7 pose numbers");
  Eigen::Quaterniond q(qw, qx, qy, qz);
  require(q.norm() > 1e-12, "line " + std::to_string(line_no) + ": zero quaternion");
  return {q.normalized().toRotationMatrix(), Eigen::Vector3d(tx, ty, tz)};
}

}  // namespace

PoseGraph parse_graph(const std::string& text) {
  PoseGraph g;
  std::vector<std::pair<int, RigidTransformd>> nodes;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (tag == "NODE") {
      int id;
      if (!(ls >> id)) throw Error(ErrorCode::InvalidArgument, where + "expected node id");
      nodes.emplace_back(id, read_pose(ls, line_no));
    } else if (tag == "EDGE") {
      PoseEdge e;
      std::string kind;
      if (!(ls >> kind >> e.i >> e.j)) throw Error(ErrorCode::InvalidArgument, where + "expected kind i j");
      e.kind = edge_kind_from_string(kind);
      e.measurement = read_pose(ls, line_no);
      if (!(ls >> e.weight)) throw Error(ErrorCode::InvalidArgument, where + "expected weight");
      g.edges.push_back(e);
    } else {
      throw Error(ErrorCode::InvalidArgument, where + "unknown record '" + tag + "'");
    }
    std::string extra;
    if (ls >> extra) throw Error(ErrorCode::InvalidArgument, where + "trailing fields");
  }
  std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    require(nodes[k].first == int(k), "node ids must be 0..n-1 without gaps");
    g.nodes.push_back(nodes[k].second);
  }
  g.validate();
  return g;
}

std::string format_graph(const PoseGraph& graph) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t k = 0; k < graph.nodes.size(); ++k) {
    os << "NODE " << k << ' ';
    write_pose(os, graph.nodes[k]);
    os << '\n';
  }
  for (const auto& e : graph.edges) {
    os << "EDGE " << to_string(e.kind) << ' ' << e.i << ' ' << e.j << ' ';
    write_pose(os, e.measurement);
    os << ' ' << e.weight << '\n';
  }
  return os.str();
}

PoseGraph read_graph(const std::filesystem::path& path) { return parse_graph(read_file(path)); }

void write_graph(const PoseGraph& graph, const std::filesystem::path& path) { write_file(path, format_graph(graph)); }

}  // namespace xpose
