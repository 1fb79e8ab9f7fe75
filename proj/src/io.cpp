#include "bridgesmc/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace bridgesmc {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

ObservationSet load_observations(std::istream& in) {
  ObservationSet out;
  std::string line;
  int line_no = 0;
  size_t payload = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line);
    double t;
    if (!parse_number(fields[0], t)) {
      if (out.times.empty() && line_no == 1) continue;  // header
      throw std::runtime_error("observations csv row " + std::to_string(line_no) +
                               ": bad time field");
    }
    if (fields.size() < 2)
      throw std::runtime_error("observations csv row " + std::to_string(line_no) +
                               ": missing observation");
    std::vector<double> vals;
    for (size_t c = 1; c < fields.size(); ++c) {
      double v;
      if (!parse_number(fields[c], v))
        throw std::runtime_error("observations csv row " + std::to_string(line_no) +
                                 ": bad value field");
      vals.push_back(v);
    }
    if (payload == 0)
      payload = vals.size();
    else if (vals.size() != payload)
      throw std::runtime_error("observations csv row " + std::to_string(line_no) +
                               ": inconsistent column count");
    if (!out.times.empty() && !(t > out.times.back()))
      throw std::runtime_error("observations csv row " + std::to_string(line_no) +
                               ": times not strictly increasing");
    out.times.push_back(t);
    out.values.push_back(std::move(vals));
  }
  if (out.times.empty()) throw std::runtime_error("observations csv: no data rows");
  return out;
}

ObservationSet load_observations_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open observations file: " + path);
  return load_observations(in);
}

void save_observations(std::ostream& os, const ObservationSet& obs) {
  for (size_t i = 0; i < obs.times.size(); ++i) {
    os << format_double(obs.times[i]);
    for (double v : obs.values[i]) os << ',' << format_double(v);
    os << '\n';
  }
}

void save_observations_file(const std::string& path, const ObservationSet& obs) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write observations file: " + path);
  save_observations(os, obs);
}

void write_records_csv(std::ostream& os, const std::vector<EstimateRecord>& records) {
  if (records.empty()) return;
  const int dth = static_cast<int>(records.front().theta_hat.size());
  os << "seed,l,p,iters,cost";
  for (int c = 0; c < dth; ++c) os << ",theta_" << c;
  os << '\n';
  for (const auto& r : records) {
    os << r.seed << ',' << r.l << ',' << r.p << ',' << r.iters << ',' << format_double(r.cost);
    for (double v : r.theta_hat) os << ',' << format_double(v);
    os << '\n';
  }
}

std::vector<EstimateRecord> read_records_csv(std::istream& in) {
  std::vector<EstimateRecord> out;
  std::string line;
  bool header = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto fields = split_csv(line);
    if (fields.size() < 6)
      throw std::runtime_error("records csv row " + std::to_string(line_no) + ": too few fields");
    EstimateRecord r;
    r.seed = std::stoull(fields[0]);
    r.l = std::stoi(fields[1]);
    r.p = std::stoi(fields[2]);
    r.iters = std::stol(fields[3]);
    double v;
    if (!parse_number(fields[4], v))
      throw std::runtime_error("records csv row " + std::to_string(line_no) + ": bad cost");
    r.cost = v;
    for (size_t c = 5; c < fields.size(); ++c) {
      if (!parse_number(fields[c], v))
        throw std::runtime_error("records csv row " + std::to_string(line_no) + ": bad theta");
      r.theta_hat.push_back(v);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<EstimateRecord> read_records_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open records file: " + path);
  return read_records_csv(in);
}

}  // namespace bridgesmc
