#pragma once

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fraclap/cheeger.hpp"
#include "fraclap/extension.hpp"
#include "fraclap/nonlocal.hpp"
#include "fraclap/solve.hpp"

namespace fraclap {

using json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// -------------------------------------------------------------- space IO

/// Space document: {"points": [...], "dist": [[...]] | null,
/// "coords": [[...]] | null, "nu": [...], "metric": "..."}; when dist is
/// null it is derived from coords with the named metric
/// ("euclidean", "l1", "graph-geodesic").
inline MetricMeasureSpace space_from_json(const json& doc) {
  require(doc.contains("nu"), errc::bad_config, "space document needs a nu array");
  std::vector<double> nu = doc.at("nu").get<std::vector<double>>();
  const int n = static_cast<int>(nu.size());

  std::vector<std::vector<double>> coords;
  if (doc.contains("coords") && !doc.at("coords").is_null())
    coords = doc.at("coords").get<std::vector<std::vector<double>>>();

  std::vector<std::string> labels;
  if (doc.contains("points") && !doc.at("points").is_null())
    for (const auto& p : doc.at("points")) labels.push_back(p.is_string() ? p.get<std::string>() : p.dump());

  std::vector<std::vector<double>> dist;
  if (doc.contains("dist") && !doc.at("dist").is_null()) {
    dist = doc.at("dist").get<std::vector<std::vector<double>>>();
  } else {
    require(!coords.empty(), errc::bad_config, "need coords to derive distances");
    const std::string metric = doc.value("metric", "euclidean");
    auto pair_dist = [&](int i, int j) {
      double s = 0;
      for (std::size_t k = 0; k < coords[i].size(); ++k) {
        const double d = coords[i][k] - coords[j][k];
        s += metric == "l1" ? std::fabs(d) : d * d;
      }
      return metric == "l1" ? s : std::sqrt(s);
    };
    dist.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dist[i][j] = pair_dist(i, j);
    if (metric == "graph-geodesic") {
      // shortest paths over the threshold graph at the smallest radius
      // keeping the point set connected
      double lo = std::numeric_limits<double>::infinity(), hi = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          lo = std::min(lo, dist[i][j]);
          hi = std::max(hi, dist[i][j]);
        }
      std::vector<double> cand;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) cand.push_back(dist[i][j]);
      std::sort(cand.begin(), cand.end());
      for (double r : cand) {
        std::vector<std::vector<double>> g(n, std::vector<double>(n, std::numeric_limits<double>::infinity()));
        for (int i = 0; i < n; ++i) g[i][i] = 0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            if (i != j && dist[i][j] <= r * (1 + 1e-12)) g[i][j] = dist[i][j];
        for (int k = 0; k < n; ++k)
          for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
              if (g[i][k] + g[k][j] < g[i][j]) g[i][j] = g[i][k] + g[k][j];
        bool connected = true;
        for (int i = 0; i < n && connected; ++i)
          for (int j = 0; j < n && connected; ++j)
            if (!std::isfinite(g[i][j])) connected = false;
        if (connected) {
          dist = std::move(g);
          break;
        }
      }
    }
  }
  return validate_space(dist, nu, coords, labels);
}

inline json space_to_json(const MetricMeasureSpace& s) {
  json doc;
  json points = json::array();
  for (int i = 0; i < s.n; ++i)
    points.push_back(i < static_cast<int>(s.labels.size()) ? s.labels[i] : std::to_string(i));
  doc["points"] = points;
  json dist = json::array();
  for (int i = 0; i < s.n; ++i) {
    json row = json::array();
    for (int j = 0; j < s.n; ++j) row.push_back(s.d(i, j));
    dist.push_back(row);
  }
  doc["dist"] = dist;
  doc["coords"] = s.coords.empty() ? json() : json(s.coords);
  doc["nu"] = s.nu;
  return doc;
}

// ------------------------------------------------------------- domain IO

inline json params_to_json(const FractionalParams& fp) {
  json j{{"p", fp.p}, {"theta", fp.theta}, {"Theta", fp.Theta}, {"a", fp.a}, {"p_conj", fp.p_conj}};
  j["beta"] = fp.beta ? json(*fp.beta) : json();
  return j;
}

inline FractionalParams params_from_json(const json& j) {
  std::optional<double> beta;
  if (j.contains("beta") && !j.at("beta").is_null()) beta = j.at("beta").get<double>();
  return FractionalParams::make(j.at("p").get<double>(), j.at("theta").get<double>(), beta);
}

inline json domain_to_json(const ExtensionDomain& d) {
  json doc;
  doc["params"] = params_to_json(d.params);
  doc["space"] = space_to_json(d.z);
  json nodes = json::array();
  for (int v = 0; v < d.node_count(); ++v)
    nodes.push_back(json{{"id", v},
                         {"layer", d.layer_of[v]},
                         {"y", d.y_of[v]},
                         {"mu", d.mu[v]},
                         {"boundary", static_cast<bool>(d.boundary_mask[v])}});
  doc["nodes"] = nodes;
  json edges = json::array();
  for (const Edge& e : d.edges)
    edges.push_back(json{{"i", e.i}, {"j", e.j}, {"len", e.len}, {"w", e.w}});
  doc["edges"] = edges;
  doc["layers"] = d.layers;
  doc["heights"] = d.heights;
  doc["base_point"] = d.base_point;
  doc["r0"] = d.r0;
  doc["horizontal_radius"] = d.horizontal_radius;
  doc["connectivity"] = d.connectivity == Connectivity::FixedRadius    ? "fixed-radius"
                        : d.connectivity == Connectivity::LayerRadius ? "layer-radius"
                                                                      : "knn";
  doc["knn_k"] = d.knn_k;
  doc["dampened"] = d.dampened;
  return doc;
}

inline ExtensionDomain domain_from_json(const json& doc) {
  ExtensionDomain d;
  d.params = params_from_json(doc.at("params"));
  d.z = space_from_json(doc.at("space"));
  d.n_boundary = d.z.n;
  d.layers = doc.at("layers").get<int>();
  d.heights = doc.at("heights").get<std::vector<double>>();
  const auto& nodes = doc.at("nodes");
  const int n_nodes = static_cast<int>(nodes.size());
  require(n_nodes == d.n_boundary * (d.layers + 1), errc::bad_config,
          "node count must equal n_boundary * (layers + 1)");
  d.mu.resize(n_nodes);
  d.layer_of.resize(n_nodes);
  d.col_of.resize(n_nodes);
  d.y_of.resize(n_nodes);
  d.boundary_mask.assign(n_nodes, 0);
  for (const auto& nd : nodes) {
    const int id = nd.at("id").get<int>();
    require(id >= 0 && id < n_nodes, errc::bad_config, "node id out of range");
    d.layer_of[id] = nd.at("layer").get<int>();
    require(d.layer_of[id] == id / d.n_boundary, errc::bad_config,
            "node ordering must be layer-major");
    d.col_of[id] = id % d.n_boundary;
    d.y_of[id] = nd.at("y").get<double>();
    d.mu[id] = nd.at("mu").get<double>();
    d.boundary_mask[id] = nd.at("boundary").get<bool>() ? 1 : 0;
  }
  for (int i = 0; i < d.n_boundary; ++i)
    (d.boundary_mask[i] ? d.boundary_ids : d.free_ids).push_back(i);
  for (const auto& ej : doc.at("edges"))
    d.edges.push_back(Edge{ej.at("i").get<int>(), ej.at("j").get<int>(), ej.at("len").get<double>(),
                           ej.at("w").get<double>()});
  d.base_point = doc.at("base_point").get<int>();
  d.r0 = doc.at("r0").get<double>();
  d.horizontal_radius = doc.at("horizontal_radius").get<double>();
  const std::string conn = doc.value("connectivity", "fixed-radius");
  d.connectivity = conn == "layer-radius" ? Connectivity::LayerRadius
                   : conn == "knn"        ? Connectivity::Knn
                                          : Connectivity::FixedRadius;
  d.knn_k = doc.value("knn_k", 0);
  d.dampened = doc.value("dampened", false);
  return d;
}

// ---------------------------------------------------------- structures

/// {"kind": "isotropic"} or {"kind": "anisotropic", "dim": d,
///  "matrices": [[d*d entries]...]} with one SPD matrix per domain node
inline DifferentialStructure structure_from_json(const json& j, int node_count) {
  const std::string kind = j.value("kind", "isotropic");
  if (kind == "isotropic") return DifferentialStructure::isotropic();
  require(kind == "anisotropic", errc::bad_config, "unknown structure kind: " + kind);
  const int dim = j.at("dim").get<int>();
  auto matrices = j.at("matrices").get<std::vector<std::vector<double>>>();
  require(static_cast<int>(matrices.size()) == node_count, errc::bad_config,
          "anisotropic structure needs one matrix per node");
  return DifferentialStructure::anisotropic(std::move(matrices), dim);
}

// ------------------------------------------------------------ solver cfg

/// {"p": ..., "tol": ..., "max_iter": ..., "epsilon_schedule": [...],
///  "method": "newton" | "descent" | "auto"}
inline std::pair<double, SolverOptions> solver_config_from_json(const json& j) {
  SolverOptions opt;
  const double p = j.value("p", 2.0);
  opt.tol = j.value("tol", 1e-9);
  opt.max_iter = j.value("max_iter", 400);
  if (j.contains("epsilon_schedule"))
    opt.epsilon_schedule = j.at("epsilon_schedule").get<std::vector<double>>();
  const std::string method = j.value("method", "auto");
  opt.method = method == "newton"    ? SolverOptions::Method::Newton
               : method == "descent" ? SolverOptions::Method::Descent
                                     : SolverOptions::Method::Auto;
  return {p, opt};
}

/// form-evaluation log record: {kind, p, theta, value, fingerprints}
inline json form_value_to_json(const FormValue& fv, const FractionalParams& fp) {
  return json{{"kind", fv.kind == FormValue::Kind::Besov ? "besov" : "et"},
              {"p", fp.p},
              {"theta", fp.theta},
              {"value", fv.value},
              {"fingerprints", {fv.fingerprint_u, fv.fingerprint_v}}};
}

// ------------------------------------------------------------------ CSV

inline std::string solution_to_csv(const ExtensionDomain& d, const DifferentialStructure& st,
                                   const Solution& sol) {
  GradientField g = gradient(d, st, sol.u);
  std::string out = "node_id,layer,y,u,grad_mag\n";
  for (int v = 0; v < d.node_count(); ++v) {
    out += std::to_string(v) + "," + std::to_string(d.layer_of[v]) + "," +
           format_double(d.y_of[v]) + "," + format_double(sol.u[v]) + "," +
           format_double(g.node_mag[v]) + "\n";
  }
  return out;
}

inline std::string values_to_csv(std::span<const double> values) {
  std::string out = "point_id,value\n";
  for (std::size_t i = 0; i < values.size(); ++i)
    out += std::to_string(i) + "," + format_double(values[i]) + "\n";
  return out;
}

inline std::vector<double> values_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::pair<int, double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, errc::io_error, "malformed CSV row: " + line);
    rows.emplace_back(std::stoi(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
  }
  std::vector<double> out(rows.size());
  for (auto [id, v] : rows) {
    require(id >= 0 && id < static_cast<int>(out.size()), errc::io_error, "point_id out of range");
    out[id] = v;
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), errc::io_error, "cannot open " + path + " for writing");
  out << text;
  require(out.good(), errc::io_error, "failed writing " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), errc::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::uint64_t fingerprint_string(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace fraclap
