#include "piano/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace piano {

using nlohmann::json;

void atomic_write(const std::filesystem::path& path,
                  const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

void append_full(std::string& out, double v) {
  char buf[32];
  snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

std::string matrix_csv(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      append_full(out, m(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string matrix_csv_long(const Matrix& m) {
  std::string out = "x_index,t_index,value\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out += std::to_string(i);
      out += ',';
      out += std::to_string(j);
      out += ',';
      append_full(out, m(i, j));
      out += '\n';
    }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const PianoModel& model,
                     const std::string& problem) {
  json j;
  j["version"] = 1;
  j["problem"] = problem;
  j["backbone"] = to_string(model.backbone);
  j["k"] = model.k;
  j["d"] = model.d;
  j["l"] = model.l;
  json params = json::object();
  for (const auto& [name, p] : model.params) {
    json t;
    t["rows"] = p.rows();
    t["cols"] = p.cols();
    std::vector<double> data;
    data.reserve(p.size());
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index c = 0; c < p.cols(); ++c) data.push_back(p(i, c));
    t["data"] = std::move(data);
    params[name] = std::move(t);
  }
  j["params"] = std::move(params);
  atomic_write(path, j.dump());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw IoError("checkpoint parse error in " + path.string() + ": " +
                  e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != 1)
    throw IoError("checkpoint " + path.string() + ": missing/unknown version");
  Checkpoint c;
  try {
  c.problem = j.value("problem", "");
  c.model.backbone = backbone_by_name(j.at("backbone").get<std::string>());
  c.model.k = j.at("k").get<int>();
  c.model.d = j.at("d").get<int>();
  c.model.l = j.at("l").get<int>();
  for (const auto& [name, t] : j.at("params").items()) {
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    const auto data = t.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
      throw IoError("checkpoint tensor " + name + ": size mismatch");
    Matrix p(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index c2 = 0; c2 < cols; ++c2)
        p(i, c2) = data[i * cols + c2];
    c.model.params[name] = std::move(p);
  }
  } catch (const json::exception& e) {
    throw IoError("checkpoint " + path.string() + ": malformed field: " +
                  e.what());
  }
  for (const auto& name : c.model.param_names())
    if (!c.model.params.count(name))
      throw IoError("checkpoint missing parameter " + name);
  return c;
}

}  // namespace piano
