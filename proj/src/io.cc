#include "robustclone/io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "robustclone/errors.h"

namespace robustclone {

namespace {

using nlohmann::json;

json MatrixJson(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix JsonMatrix(const json& j, const std::string& name) {
  if (!j.is_array()) throw ValidationError(name + " must be an array of rows");
  const int rows = static_cast<int>(j.size());
  int cols = -1;
  for (const auto& row : j) {
    if (!row.is_array()) throw ValidationError(name + " must be an array of rows");
    if (cols < 0) cols = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != cols) {
      throw ValidationError(name + " has rows of different lengths");
    }
  }
  Matrix m(rows, std::max(cols, 0));
  for (int i = 0; i < rows; ++i) {
    for (int j2 = 0; j2 < cols; ++j2) {
      const json& v = j[i][j2];
      if (!v.is_number()) throw ValidationError(name + " entries must be numbers");
      m(i, j2) = v.get<double>();
    }
  }
  return m;
}

json ParseJson(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

const json& Field(const json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) {
    throw ValidationError(what + ": missing field \"" + key + "\"");
  }
  return j.at(key);
}

// Non-finite values are written as strings since JSON has no literal for them.
json Number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || s.empty()) {
    throw ValidationError("malformed number \"" + s + "\"");
  }
  return v;
}

std::string system_to_json(const SystemFile& f) {
  json j;
  j["A"] = MatrixJson(f.sys.A);
  j["B"] = MatrixJson(f.sys.B);
  j["W"] = MatrixJson(f.sys.W.mat());
  if (f.channel) {
    j["channel"] = {{"B1", MatrixJson(f.channel->B1)},
                    {"C1", MatrixJson(f.channel->C1)},
                    {"D12", MatrixJson(f.channel->D12)}};
  }
  return j.dump(2) + "\n";
}

SystemFile system_from_json(const std::string& text) {
  const std::string what = "system file";
  const json j = ParseJson(text, what);
  SystemFile f;
  f.sys.A = JsonMatrix(Field(j, "A", what), "A");
  f.sys.B = JsonMatrix(Field(j, "B", what), "B");
  const Matrix w = JsonMatrix(Field(j, "W", what), "W");
  if (w.rows() != w.cols()) throw ValidationError("W must be square");
  if ((w - w.transpose()).norm() > 1e-12 * (1.0 + w.norm())) {
    throw ValidationError("W must be symmetric");
  }
  f.sys.W = SymMatrix(w);
  f.sys.Validate();
  if (j.contains("channel") && !j.at("channel").is_null()) {
    const json& c = j.at("channel");
    f.channel = PerformanceChannel{JsonMatrix(Field(c, "B1", what), "B1"),
                                   JsonMatrix(Field(c, "C1", what), "C1"),
                                   JsonMatrix(Field(c, "D12", what), "D12")};
    f.channel->Validate(f.sys);
  }
  return f;
}

std::string gain_to_json(const Matrix& k) {
  json j;
  j["K"] = MatrixJson(k);
  return j.dump(2) + "\n";
}

Matrix gain_from_json(const std::string& text) {
  const json j = ParseJson(text, "policy file");
  Matrix k = JsonMatrix(Field(j, "K", "policy file"), "K");
  RequireFinite(k, "K");
  return k;
}

std::string report_to_json(const FitReport& r) {
  json j;
  j["method"] = r.method;
  j["valid"] = r.valid;
  if (!r.failure.empty()) j["failure"] = r.failure;
  j["K"] = MatrixJson(r.K);
  if (r.params) {
    j["params"] = {{"Q", MatrixJson(r.params->Q.mat())},
                   {"L", MatrixJson(r.params->L)}};
  }
  json hist = json::array();
  for (double v : r.objective_history) hist.push_back(Number(v));
  j["objective_history"] = hist;
  json margins = json::array();
  for (double v : r.feasibility_margins) margins.push_back(Number(v));
  j["feasibility_margins"] = margins;
  json res = json::array();
  for (double v : r.admm_primal_residuals) res.push_back(Number(v));
  j["admm_primal_residuals"] = res;
  j["wall_time_ms"] = r.wall_time_ms;
  if (r.certificate) {
    const CertificateReport& c = *r.certificate;
    json cj;
    cj["spectral_radius"] = Number(c.spectral_radius);
    cj["lyapunov_margin"] = Number(c.lyapunov_margin);
    cj["stable"] = c.stable;
    cj["robust"] = c.robust;
    if (c.hinf_norm) cj["hinf_norm"] = Number(*c.hinf_norm);
    if (c.gamma) cj["gamma"] = *c.gamma;
    j["certificate"] = cj;
  }
  return j.dump(2) + "\n";
}

std::string dataset_to_csv(const Dataset& d) {
  std::ostringstream out;
  const int nx = static_cast<int>(d.X.rows());
  const int nu = static_cast<int>(d.U.rows());
  for (int i = 0; i < nx; ++i) out << (i ? "," : "") << "x" << i + 1;
  for (int i = 0; i < nu; ++i) out << ",u" << i + 1;
  out << "\n";
  for (int c = 0; c < d.N(); ++c) {
    for (int i = 0; i < nx; ++i) out << (i ? "," : "") << format_double(d.X(i, c));
    for (int i = 0; i < nu; ++i) out << "," << format_double(d.U(i, c));
    out << "\n";
  }
  return out.str();
}

Dataset dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("demos CSV is empty");
  const std::vector<std::string> header = SplitCsvLine(line);
  int nx = 0;
  int nu = 0;
  for (const std::string& h : header) {
    if (h.size() >= 2 && h[0] == 'x' && nu == 0) {
      if (h != "x" + std::to_string(nx + 1)) {
        throw ValidationError("demos CSV header: unexpected column " + h);
      }
      ++nx;
    } else if (h.size() >= 2 && h[0] == 'u') {
      if (h != "u" + std::to_string(nu + 1)) {
        throw ValidationError("demos CSV header: unexpected column " + h);
      }
      ++nu;
    } else {
      throw ValidationError("demos CSV header: unexpected column " + h);
    }
  }
  if (nx == 0 || nu == 0) {
    throw ValidationError("demos CSV header must list x1..xn then u1..um");
  }
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = SplitCsvLine(line);
    if (static_cast<int>(cells.size()) != nx + nu) {
      throw ValidationError("demos CSV line " + std::to_string(line_no) +
                            ": expected " + std::to_string(nx + nu) + " values");
    }
    std::vector<double> vals;
    for (const std::string& c : cells) vals.push_back(parse_double(c));
    rows.push_back(std::move(vals));
  }
  Dataset d{Matrix(nx, rows.size()), Matrix(nu, rows.size())};
  for (size_t c = 0; c < rows.size(); ++c) {
    for (int i = 0; i < nx; ++i) d.X(i, c) = rows[c][i];
    for (int i = 0; i < nu; ++i) d.U(i, c) = rows[c][nx + i];
  }
  d.Validate();
  return d;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace robustclone
