// Copyright 2026 The Thumbseed Authors
// SPDX-License-Identifier: Apache-2.0

#include "thumbseed/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "thumbseed/errors.hpp"

namespace thumbseed {
namespace {

constexpr double kBoundsSlack = 1e-6;

using json = nlohmann::json;

const json& field(const json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) throw ValidationError(std::string("missing field '") + name + "'");
  return *it;
}

double number(const json& obj, const char* name) {
  const json& v = field(obj, name);
  if (!v.is_number()) throw ValidationError(std::string("field '") + name + "' must be a number");
  return v.get<double>();
}

AnnotatedSample parse_record(const std::string& line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ValidationError("record must be a JSON object");
  AnnotatedSample s;
  const json& image = field(obj, "image");
  if (!image.is_string()) throw ValidationError("field 'image' must be a string");
  s.image = image.get<std::string>();
  s.aspect = number(obj, "aspect_ratio");
  const json& box = field(obj, "box");
  if (!box.is_array() || box.size() != 4 ||
      !std::all_of(box.begin(), box.end(), [](const json& v) { return v.is_number(); })) {
    throw ValidationError("field 'box' must be [cx, cy, w, h]");
  }
  s.box = {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>()};
  s.img_w = number(obj, "img_w");
  s.img_h = number(obj, "img_h");
  validate_sample(s);
  return s;
}

}  // namespace

void validate_sample(const AnnotatedSample& s) {
  if (!(s.img_w > 0.0) || !(s.img_h > 0.0)) throw ValidationError("image size must be positive");
  if (!(s.aspect > 0.0)) throw ValidationError("aspect_ratio must be positive");
  if (!(s.box.w > 0.0) || !(s.box.h > 0.0)) throw ValidationError("box size must be positive");
  if (s.box.x0() < -kBoundsSlack || s.box.y0() < -kBoundsSlack ||
      s.box.x1() > s.img_w + kBoundsSlack || s.box.y1() > s.img_h + kBoundsSlack) {
    throw ValidationError("box extends past the image bounds");
  }
  if (std::abs(s.box.aspect() - s.aspect) > kAspectTolerance) {
    throw ValidationError("box aspect " + std::to_string(s.box.aspect()) +
                          " does not match aspect_ratio " + std::to_string(s.aspect));
  }
}

std::string format_annotation(const AnnotatedSample& s) {
  json obj;
  obj["image"] = s.image;
  obj["aspect_ratio"] = s.aspect;
  obj["box"] = {s.box.cx, s.box.cy, s.box.w, s.box.h};
  obj["img_w"] = s.img_w;
  obj["img_h"] = s.img_h;
  return obj.dump();
}

std::vector<AnnotatedSample> parse_annotations(const std::string& text) {
  std::vector<AnnotatedSample> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<AnnotatedSample> load_annotations(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open annotations '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return parse_annotations(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void save_annotations(const std::string& path, const std::vector<AnnotatedSample>& samples) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& s : samples) f << format_annotation(s) << '\n';
  if (!f) throw IoError("write failed for '" + path + "'");
}

std::string resolve_image_path(const std::string& annotation_path, const std::string& image) {
  const std::filesystem::path p(image);
  if (p.is_absolute()) return image;
  return (std::filesystem::path(annotation_path).parent_path() / p).string();
}

}  // namespace thumbseed
