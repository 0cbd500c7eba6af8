#pragma once

#include <json.hpp>
#include <string>

#include "error.hpp"
#include "geometry.hpp"

namespace bax::jsonio {

using nlohmann::json;

json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const json& j);

inline json vec3_to_json(const geo::Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

inline geo::Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) fail(Errc::validation, "expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json mat3_to_json(const geo::Mat3& m) {
  json out = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
  return out;
}

inline geo::Mat3 mat3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 9) fail(Errc::validation, "expected 9 row-major reals");
  geo::Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = j[3 * r + c].get<double>();
  return m;
}

inline json pose_to_json(const geo::Pose& p) {
  return json{{"position", vec3_to_json(p.translation)}, {"rotation", mat3_to_json(p.rotation)}};
}

inline geo::Pose pose_from_json(const json& j) {
  geo::Pose p;
  p.translation = vec3_from_json(j.at("position"));
  if (j.contains("rotation")) p.rotation = mat3_from_json(j.at("rotation"));
  return p;
}

}  // namespace bax::jsonio
