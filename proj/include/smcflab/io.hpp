#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "smcflab/config.hpp"
#include "smcflab/ensemble.hpp"
#include "smcflab/stepper.hpp"

namespace smcflab {

inline constexpr char kTraceHeader[] =
    "t,W,dirichlet,area,maxexcess,hess_l2sq_cum,grad_linf,h1_dev_from_W";

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

namespace detail {

inline void append_g17(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("io: cannot open " + path.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("io: short write to " + path.string());
}

}  // namespace detail

inline std::string render_trace_csv(const EnergyTrace& tr) {
  std::string out;
  out.reserve(tr.samples() * 160 + 64);
  out += kTraceHeader;
  out += '\n';
  for (std::size_t j = 0; j < tr.samples(); ++j) {
    detail::append_g17(out, tr.t[j]);
    out += ',';
    detail::append_g17(out, tr.w[j]);
    out += ',';
    detail::append_g17(out, tr.dirichlet[j]);
    out += ',';
    detail::append_g17(out, tr.area[j]);
    out += ',';
    detail::append_g17(out, tr.maxexcess[j]);
    out += ',';
    detail::append_g17(out, tr.hess_cum[j]);
    out += ',';
    detail::append_g17(out, tr.grad_linf[j]);
    out += ',';
    detail::append_g17(out, tr.h1_dev[j]);
    out += '\n';
  }
  return out;
}

// Returns the content hash of the written file.
inline std::uint64_t write_trace_csv(const std::filesystem::path& path,
                                     const EnergyTrace& tr) {
  const std::string bytes = render_trace_csv(tr);
  detail::write_bytes(path, bytes);
  return fnv1a64(bytes);
}

inline EnergyTrace parse_trace_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("io: cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("io: empty trace file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader)
    throw std::runtime_error("io: unexpected trace header in " + path.string());
  EnergyTrace tr;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double v[8];
    if (std::sscanf(line.c_str(),
                    "%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf",
                    &v[0], &v[1], &v[2], &v[3], &v[4], &v[5], &v[6], &v[7]) != 8)
      throw std::runtime_error("io: malformed trace row in " + path.string());
    tr.t.push_back(v[0]);
    tr.w.push_back(v[1]);
    tr.dirichlet.push_back(v[2]);
    tr.area.push_back(v[3]);
    tr.maxexcess.push_back(v[4]);
    tr.hess_cum.push_back(v[5]);
    tr.grad_linf.push_back(v[6]);
    tr.h1_dev.push_back(v[7]);
  }
  return tr;
}

inline std::string render_stats_csv(const EnsembleResult& r) {
  std::string out;
  out += "t";
  for (const auto& cs : r.stats)
    out += "," + cs.name + "_mean," + cs.name + "_var," + cs.name + "_se," +
           cs.name + "_n";
  out += '\n';
  for (std::size_t j = 0; j < r.times.size(); ++j) {
    detail::append_g17(out, r.times[j]);
    for (const auto& cs : r.stats) {
      out += ',';
      detail::append_g17(out, cs.mean[j]);
      out += ',';
      detail::append_g17(out, cs.var[j]);
      out += ',';
      detail::append_g17(out, cs.se[j]);
      out += ',';
      out += std::to_string(cs.n_valid);
    }
    out += '\n';
  }
  return out;
}

inline std::uint64_t write_stats_csv(const std::filesystem::path& path,
                                     const EnsembleResult& r) {
  const std::string bytes = render_stats_csv(r);
  detail::write_bytes(path, bytes);
  return fnv1a64(bytes);
}

inline nlohmann::json verdict_json(const Verdict& v) {
  nlohmann::json j;
  j["name"] = v.name;
  j["pass"] = v.pass;
  j["statistic"] = v.statistic;
  j["threshold"] = v.threshold;
  j["detail"] = v.detail;
  return j;
}

struct ReportInputs {
  const SimConfig* config = nullptr;
  std::vector<Verdict> verdicts;
  nlohmann::json traces = nlohmann::json::object();  // filename -> hash
  nlohmann::json extra = nlohmann::json::object();   // experiment payloads
  int diverged_paths = 0;
  int valid_paths = 0;
};

// Deliberately excludes wall time and host details so reruns with any worker
// count produce byte-identical reports.
inline std::string render_report_json(const ReportInputs& in) {
  nlohmann::json j;
  if (in.config != nullptr) j["config"] = config_echo(*in.config);
  j["divergedPaths"] = in.diverged_paths;
  j["validPaths"] = in.valid_paths;
  nlohmann::json vs = nlohmann::json::array();
  bool all = true;
  for (const auto& v : in.verdicts) {
    vs.push_back(verdict_json(v));
    all = all && v.pass;
  }
  j["verdicts"] = vs;
  j["allPass"] = all;
  j["traces"] = in.traces;
  for (auto it = in.extra.begin(); it != in.extra.end(); ++it) j[it.key()] = it.value();
  return j.dump(2) + "\n";
}

inline std::uint64_t write_report_json(const std::filesystem::path& path,
                                       const ReportInputs& in) {
  const std::string bytes = render_report_json(in);
  detail::write_bytes(path, bytes);
  return fnv1a64(bytes);
}

}  // namespace smcflab
