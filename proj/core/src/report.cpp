#include "imclab/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "imclab/errors.hpp"
#include "json.hpp"

namespace imclab {

namespace {

// Fixed text rendering of doubles so the body is byte-stable; NaN (stderr
// with too few replicas) renders as a string marker.
nlohmann::ordered_json num(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

nlohmann::ordered_json scale_row(const ScaleRow& r) {
  nlohmann::ordered_json j;
  j["eta"] = num(r.eta);
  j["N"] = r.N;
  j["mean_H_re"] = num(r.mean_H.real());
  j["mean_H_im"] = num(r.mean_H.imag());
  j["rel_L2"] = num(r.rel_l2);
  j["stderr"] = num(r.stderr_);
  return j;
}

}  // namespace

std::string ExperimentReport::body() const {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["replicas"] = replicas;
  j["code_version"] = code_version;
  j["pass"] = pass;

  j["scales"] = nlohmann::ordered_json::array();
  for (double s : scales) j["scales"].push_back(num(s));

  j["per_scale"] = nlohmann::ordered_json::array();
  for (const auto& r : per_scale) j["per_scale"].push_back(scale_row(r));
  j["averaged"] = nlohmann::ordered_json::array();
  for (const auto& r : averaged) j["averaged"].push_back(scale_row(r));

  j["residual_corr"] = nlohmann::ordered_json::array();
  for (const auto& row : residual_corr) {
    nlohmann::ordered_json rj = nlohmann::ordered_json::array();
    for (double v : row) rj.push_back(num(v));
    j["residual_corr"].push_back(rj);
  }

  j["oracle"] = nlohmann::ordered_json::array();
  for (const auto& r : oracle_rows) {
    nlohmann::ordered_json rj;
    rj["quantity"] = r.quantity;
    rj["mc"] = num(r.mc);
    rj["mc_stderr"] = num(r.mc_stderr);
    rj["oracle"] = num(r.oracle);
    rj["z"] = num(r.z);
    rj["pass"] = r.pass;
    j["oracle"].push_back(rj);
  }

  j["exact"] = nlohmann::ordered_json::array();
  for (const auto& r : exact_rows) {
    nlohmann::ordered_json rj;
    rj["name"] = r.name;
    rj["value"] = num(r.value);
    rj["tol"] = num(r.tol);
    rj["pass"] = r.pass;
    j["exact"].push_back(rj);
  }

  j["warnings"] = warnings;
  return j.dump(2) + "\n";
}

std::string ExperimentReport::csv() const {
  std::ostringstream o;
  o << "eta,N,mean_H_re,mean_H_im,rel_L2,stderr,replicas,seed\n";
  auto emit = [&](const ScaleRow& r) {
    char buf[40];
    auto f = [&](double v) -> std::string {
      if (std::isnan(v)) return "n/a";
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      return buf;
    };
    o << f(r.eta) << "," << r.N << "," << f(r.mean_H.real()) << ","
      << f(r.mean_H.imag()) << "," << f(r.rel_l2) << "," << f(r.stderr_) << ","
      << replicas << "," << seed << "\n";
  };
  for (const auto& r : per_scale) emit(r);
  for (const auto& r : averaged) emit(r);
  return o.str();
}

std::string write_report(const ExperimentReport& report, const std::string& dir,
                         const std::string& stem) {
  std::filesystem::create_directories(dir);
  const auto base = std::filesystem::path(dir) / stem;
  const std::string json_path = base.string() + ".json";
  {
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw Error("cannot write report: " + json_path);
    out << report.body();
  }
  {
    std::ofstream out(base.string() + ".csv", std::ios::binary);
    if (!out) throw Error("cannot write report: " + base.string() + ".csv");
    out << report.csv();
  }
  return json_path;
}

}  // namespace imclab
