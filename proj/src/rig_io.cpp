#include "camweight/rig_io.hpp"

#include <fstream>
#include <sstream>

#include "camweight/errors.hpp"
#include "json.hpp"

namespace camweight {

namespace {

using nlohmann::json;

Pose pose_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw MalformedInput(where + ": expected a 4x4 array");
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.size() != 4) throw MalformedInput(where + ": expected a 4x4 array");
    for (int c = 0; c < 4; ++c) {
      if (!row[c].is_number()) throw MalformedInput(where + ": matrix entries must be numbers");
      m(r, c) = row[c].get<double>();
    }
  }
  std::string why;
  if (!is_valid_pose(m, &why)) throw MalformedInput(where + ": " + why);
  return Pose::from_matrix(m);
}

json pose_to_json(const Pose& p) {
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) row.push_back(p.matrix()(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

CameraRig parse_rig_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MalformedInput(std::string("rig is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("target") || !doc.contains("sources")) {
    throw MalformedInput("rig must be an object with \"target\" and \"sources\"");
  }
  CameraRig rig;
  rig.target = pose_from_json(doc["target"], "target");
  const json& sources = doc["sources"];
  if (!sources.is_array() || sources.empty()) {
    throw MalformedInput("\"sources\" must be a non-empty array of poses");
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    rig.sources.push_back(pose_from_json(sources[i], "sources[" + std::to_string(i) + "]"));
  }
  return rig;
}

CameraRig load_rig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MalformedInput("cannot open rig file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_rig_json(buffer.str());
}

std::string rig_to_json(const CameraRig& rig) {
  json doc;
  doc["target"] = pose_to_json(rig.target);
  doc["sources"] = json::array();
  for (const Pose& p : rig.sources) doc["sources"].push_back(pose_to_json(p));
  return doc.dump(2);
}

void save_rig(const CameraRig& rig, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write rig file " + path.string());
  out << rig_to_json(rig) << '\n';
}

}  // namespace camweight
