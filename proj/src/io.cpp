#include "palign/io.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"
#include "palign/errors.hpp"

namespace palign {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw InputError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(path + "." + key + ": missing");
  return *it;
}

int require_int(const json& obj, const char* key, const std::string& path) {
  const json& v = require(obj, key, path);
  if (!v.is_number_integer()) throw InputError(path + "." + key + ": expected an integer");
  return v.get<int>();
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("invalid JSON: ") + e.what());
  }
}

// Shortest decimal that round-trips.
json number(double x) { return x; }

}  // namespace

PatchFramework parse_framework(const std::string& text) {
  const json j = parse_json(text);
  PatchFramework fw;
  fw.d = require_int(j, "d", "$");
  fw.n = require_int(j, "n", "$");
  fw.m = require_int(j, "m", "$");
  if (fw.d < 1 || fw.n < 1 || fw.m < 1) throw InputError("$: d, n and m must be positive");
  const json& views = require(j, "views", "$");
  if (!views.is_array()) throw InputError("$.views: expected an array");

  std::vector<std::map<int, Eigen::VectorXd>> per_view(fw.m);
  std::vector<bool> seen_view(fw.m, false);
  for (std::size_t a = 0; a < views.size(); ++a) {
    const std::string vp = "$.views[" + std::to_string(a) + "]";
    const int index = require_int(views[a], "index", vp);
    if (index < 1 || index > fw.m) throw InputError(vp + ".index: " + std::to_string(index) + " outside [1,m]");
    if (seen_view[index - 1]) throw InputError(vp + ".index: view " + std::to_string(index) + " listed twice");
    seen_view[index - 1] = true;
    const json& pts = require(views[a], "points", vp);
    if (!pts.is_array()) throw InputError(vp + ".points: expected an array");
    for (std::size_t b = 0; b < pts.size(); ++b) {
      const std::string pp = vp + ".points[" + std::to_string(b) + "]";
      const int id = require_int(pts[b], "id", pp);
      const std::string edge = "(" + std::to_string(id) + "," + std::to_string(index) + ")";
      if (id < 1 || id > fw.n) throw InputError(pp + ".id: point " + std::to_string(id) + " outside [1,n]");
      if (per_view[index - 1].count(id - 1))
        throw InputError(pp + ": duplicate (id, view) pair " + edge);
      auto it = pts[b].find("coords");
      if (it == pts[b].end()) throw InputError(pp + ".coords: missing coordinate for edge " + edge);
      if (!it->is_array() || static_cast<int>(it->size()) != fw.d)
        throw InputError(pp + ".coords: edge " + edge + " needs " + std::to_string(fw.d) + " numbers");
      Eigen::VectorXd x(fw.d);
      for (int r = 0; r < fw.d; ++r) {
        if (!(*it)[r].is_number()) throw InputError(pp + ".coords: non-numeric entry for edge " + edge);
        x(r) = (*it)[r].get<double>();
      }
      per_view[index - 1].emplace(id - 1, std::move(x));
    }
  }
  fw.view_points.resize(fw.m);
  fw.view_coords.resize(fw.m);
  for (int i = 0; i < fw.m; ++i) {
    Eigen::MatrixXd X(fw.d, per_view[i].size());
    int c = 0;
    for (const auto& [k, x] : per_view[i]) {
      fw.view_points[i].push_back(k);
      X.col(c++) = x;
    }
    fw.view_coords[i] = std::move(X);
  }
  check_structure(fw);
  return fw;
}

std::string serialize_framework(const PatchFramework& fw) {
  json j;
  j["d"] = fw.d;
  j["n"] = fw.n;
  j["m"] = fw.m;
  json views = json::array();
  for (int i = 0; i < fw.m; ++i) {
    json pts = json::array();
    for (std::size_t c = 0; c < fw.view_points[i].size(); ++c) {
      json coords = json::array();
      for (int r = 0; r < fw.d; ++r) coords.push_back(number(fw.view_coords[i](r, c)));
      pts.push_back({{"id", fw.view_points[i][c] + 1}, {"coords", coords}});
    }
    views.push_back({{"index", i + 1}, {"points", pts}});
  }
  j["views"] = views;
  return j.dump(1);
}

Alignment parse_alignment(const std::string& text) {
  json j = parse_json(text);
  std::string path = "$";
  if (j.is_object() && !j.contains("blocks") && j.contains("alignment")) {
    j = j["alignment"];
    path = "$.alignment";
  }
  const int d = require_int(j, "d", path);
  const int m = require_int(j, "m", path);
  if (d < 1 || m < 1) throw InputError(path + ": d and m must be positive");
  const json& blocks = require(j, "blocks", path);
  if (!blocks.is_array() || static_cast<int>(blocks.size()) != m)
    throw InputError(path + ".blocks: expected " + std::to_string(m) + " blocks");
  Alignment S(d, m);
  for (int i = 0; i < m; ++i) {
    const json& b = blocks[i];
    const std::string bp = path + ".blocks[" + std::to_string(i) + "]";
    if (!b.is_array() || static_cast<int>(b.size()) != d * d)
      throw InputError(bp + ": expected " + std::to_string(d * d) + " numbers");
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        if (!b[r * d + c].is_number()) throw InputError(bp + ": non-numeric entry");
        S.block(i)(r, c) = b[r * d + c].get<double>();
      }
  }
  return S;
}

std::string serialize_alignment(const BlockStack& S) {
  json j;
  j["d"] = S.d;
  j["m"] = S.m();
  json blocks = json::array();
  for (int i = 0; i < S.m(); ++i) {
    json b = json::array();
    for (int r = 0; r < S.d; ++r)
      for (int c = 0; c < S.d; ++c) b.push_back(number(S.block(i)(r, c)));
    blocks.push_back(b);
  }
  j["blocks"] = blocks;
  return j.dump(1);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& M) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << M.rows() << "," << M.cols() << "\n" << std::setprecision(17);
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) out << (c ? "," : "") << M(r, c);
    out << "\n";
  }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": empty matrix file");
  long rows = 0, cols = 0;
  char comma = 0;
  std::istringstream hs(line);
  if (!(hs >> rows >> comma >> cols) || comma != ',') throw InputError(path + ": bad header");
  Eigen::MatrixXd M(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw InputError(path + ": truncated");
    std::istringstream ls(line);
    for (long c = 0; c < cols; ++c) {
      std::string cell;
      std::getline(ls, cell, ',');
      M(r, c) = std::stod(cell);
    }
  }
  return M;
}

}  // namespace palign
