#include <cmath>
#include <string>

#include "json.hpp"
#include "roba/error.h"
#include "roba/file_util.h"
#include "roba/view_graph.h"

namespace roba {
namespace {

using json = nlohmann::json;

// Bearings further than this from unit norm are rejected on load.
constexpr double kLoadNormTolerance = 1e-6;
// Already unit to rounding; left untouched so a reload is bit-identical.
constexpr double kUnitSquaredNormSlack = 4.5e-16;
constexpr double kQuaternionNormTolerance = 1e-6;

[[noreturn]] void ParseFail(const std::string& what) {
  throw Error(ErrorKind::kParse, what);
}

json QuaternionJson(const Rotation& r) {
  const Eigen::Vector4d q = r.ToQuaternion();
  return json::array({q[0], q[1], q[2], q[3]});
}

Rotation ParseQuaternion(const json& value, const std::string& where) {
  if (!value.is_array() || value.size() != 4) {
    ParseFail(where + ": expected a quaternion [w, x, y, z]");
  }
  double c[4];
  for (int i = 0; i < 4; ++i) {
    if (!value[i].is_number()) ParseFail(where + ": non-numeric entry");
    c[i] = value[i].get<double>();
  }
  const double norm = std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2] +
                                c[3] * c[3]);
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > kQuaternionNormTolerance) {
    ParseFail(where + ": quaternion is not unit norm");
  }
  return Rotation::FromQuaternion(c[0], c[1], c[2], c[3]);
}

std::vector<Rotation> ParseRotationList(const json& value,
                                        const std::string& where) {
  if (!value.is_array()) ParseFail(where + ": expected an array");
  std::vector<Rotation> out;
  out.reserve(value.size());
  for (size_t i = 0; i < value.size(); ++i) {
    out.push_back(ParseQuaternion(value[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json BearingsJson(const std::vector<Vec3>& bearings) {
  json flat = json::array();
  for (const Vec3& f : bearings) {
    flat.push_back(f.x());
    flat.push_back(f.y());
    flat.push_back(f.z());
  }
  return flat;
}

std::vector<Vec3> ParseBearings(const json& value, const std::string& where) {
  if (!value.is_array() || value.size() % 3 != 0) {
    ParseFail(where + ": expected a flat array of length 3m");
  }
  std::vector<Vec3> out;
  out.reserve(value.size() / 3);
  for (size_t i = 0; i < value.size(); i += 3) {
    Vec3 f;
    for (int a = 0; a < 3; ++a) {
      if (!value[i + a].is_number()) ParseFail(where + ": non-numeric entry");
      f[a] = value[i + a].get<double>();
    }
    const double sq = f.squaredNorm();
    if (!std::isfinite(sq) || std::abs(std::sqrt(sq) - 1.0) > kLoadNormTolerance) {
      throw Error(ErrorKind::kInvalidGraph,
                  where + ": bearing " + std::to_string(i / 3) +
                      " is not unit norm");
    }
    if (std::abs(sq - 1.0) > kUnitSquaredNormSlack) f.normalize();
    out.push_back(f);
  }
  return out;
}

const json& Require(const json& object, const char* key,
                    const std::string& where) {
  const auto it = object.find(key);
  if (it == object.end()) {
    ParseFail(where + ": missing field '" + key + "'");
  }
  return *it;
}

int RequireInt(const json& object, const char* key, const std::string& where) {
  const json& v = Require(object, key, where);
  if (!v.is_number_integer()) {
    ParseFail(where + ": field '" + key + "' must be an integer");
  }
  return v.get<int>();
}

json ParseJson(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    ParseFail(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string SerializeGraph(const ViewGraph& graph) {
  json doc;
  doc["version"] = kGraphFormatVersion;
  doc["n"] = graph.num_cameras();
  json initial = json::array();
  for (const Rotation& r : graph.initial_rotations()) {
    initial.push_back(QuaternionJson(r));
  }
  doc["initial_rotations"] = std::move(initial);
  if (graph.gt_rotations()) {
    json gt = json::array();
    for (const Rotation& r : *graph.gt_rotations()) {
      gt.push_back(QuaternionJson(r));
    }
    doc["gt_rotations"] = std::move(gt);
  }
  json edges = json::array();
  for (const Edge& e : graph.edges()) {
    json edge;
    edge["j"] = e.j;
    edge["k"] = e.k;
    edge["bearings_j"] = BearingsJson(e.observations.bearings_j);
    edge["bearings_k"] = BearingsJson(e.observations.bearings_k);
    if (e.rel_rotation) edge["rel_rotation"] = QuaternionJson(*e.rel_rotation);
    edges.push_back(std::move(edge));
  }
  doc["edges"] = std::move(edges);
  return doc.dump() + "\n";
}

ViewGraph ParseGraph(std::string_view text, const GraphOptions& options) {
  const json doc = ParseJson(text);
  if (!doc.is_object()) ParseFail("graph document must be a JSON object");
  const int version = RequireInt(doc, "version", "graph");
  if (version != kGraphFormatVersion) {
    ParseFail("unsupported graph format version " + std::to_string(version));
  }
  const int n = RequireInt(doc, "n", "graph");
  std::vector<Rotation> initial =
      ParseRotationList(Require(doc, "initial_rotations", "graph"),
                        "initial_rotations");
  std::optional<std::vector<Rotation>> gt;
  if (const auto it = doc.find("gt_rotations");
      it != doc.end() && !it->is_null()) {
    gt = ParseRotationList(*it, "gt_rotations");
  }

  const json& edges_json = Require(doc, "edges", "graph");
  if (!edges_json.is_array()) ParseFail("edges: expected an array");
  std::vector<EdgeInput> edges;
  edges.reserve(edges_json.size());
  for (size_t index = 0; index < edges_json.size(); ++index) {
    const json& e = edges_json[index];
    const std::string where = "edges[" + std::to_string(index) + "]";
    if (!e.is_object()) ParseFail(where + ": expected an object");
    EdgeInput in;
    in.j = RequireInt(e, "j", where);
    in.k = RequireInt(e, "k", where);
    in.observations.bearings_j =
        ParseBearings(Require(e, "bearings_j", where), where + ".bearings_j");
    in.observations.bearings_k =
        ParseBearings(Require(e, "bearings_k", where), where + ".bearings_k");
    if (in.observations.bearings_j.size() != in.observations.bearings_k.size()) {
      ParseFail(where + ": bearings_j and bearings_k differ in length");
    }
    if (const auto it = e.find("rel_rotation"); it != e.end() && !it->is_null()) {
      in.rel_rotation = ParseQuaternion(*it, where + ".rel_rotation");
    }
    edges.push_back(std::move(in));
  }
  return ViewGraph::Create(n, std::move(edges), std::move(initial),
                           std::move(gt), options);
}

ViewGraph LoadGraph(const std::filesystem::path& path,
                    const GraphOptions& options) {
  const std::string text = ReadFile(path);
  try {
    return ParseGraph(text, options);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void SaveGraph(const ViewGraph& graph, const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeGraph(graph));
}

std::string SerializeRotations(const std::vector<Rotation>& rotations) {
  json doc;
  doc["version"] = kGraphFormatVersion;
  doc["n"] = rotations.size();
  json list = json::array();
  for (const Rotation& r : rotations) list.push_back(QuaternionJson(r));
  doc["rotations"] = std::move(list);
  return doc.dump() + "\n";
}

std::vector<Rotation> ParseRotations(std::string_view text) {
  const json doc = ParseJson(text);
  if (!doc.is_object()) ParseFail("rotations document must be a JSON object");
  const int n = RequireInt(doc, "n", "rotations");
  std::vector<Rotation> out =
      ParseRotationList(Require(doc, "rotations", "rotations"), "rotations");
  if (static_cast<int>(out.size()) != n) {
    ParseFail("rotations: n = " + std::to_string(n) + " but " +
              std::to_string(out.size()) + " entries");
  }
  return out;
}

std::vector<Rotation> LoadRotations(const std::filesystem::path& path) {
  const std::string text = ReadFile(path);
  try {
    return ParseRotations(text);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void SaveRotations(const std::vector<Rotation>& rotations,
                   const std::filesystem::path& path) {
  WriteFileAtomic(path, SerializeRotations(rotations));
}

}  // namespace roba
