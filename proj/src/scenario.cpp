#include "ncbf/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ncbf::cli {

using nlohmann::json;

std::string to_string(BarrierChoice c) {
  switch (c) {
    case BarrierChoice::Ncbf: return "ncbf";
    case BarrierChoice::Hocbf: return "hocbf";
    case BarrierChoice::Both: return "both";
  }
  return "ncbf";
}

BarrierChoice barrier_choice_from_string(const std::string& s) {
  if (s == "ncbf") return BarrierChoice::Ncbf;
  if (s == "hocbf") return BarrierChoice::Hocbf;
  if (s == "both") return BarrierChoice::Both;
  throw ConfigError("barrier must be one of ncbf, hocbf, both (got \"" + s + "\")");
}

void ScenarioConfig::validate() const {
  params.validate();
  if (!(z0 > 0.0) || !std::isfinite(z0)) throw ConfigError("z0 must be positive and finite");
  if (v0_list.empty()) throw ConfigError("v0_list must not be empty");
  for (double v0 : v0_list) {
    if (!std::isfinite(v0)) throw ConfigError("v0_list entries must be finite");
    if (v0 < params.v_min || v0 > params.v_max)
      throw ConfigError("v0_list entries must lie in [v_min, v_max]");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (!(solver.tol_mu > 0.0)) throw ConfigError("solver.tol_mu must be positive");
  if (!(solver.tol_residual > 0.0)) throw ConfigError("solver.tol_residual must be positive");
  if (solver.max_iter < 1) throw ConfigError("solver.max_iter must be at least 1");
  if (!(solver.tau > 0.0) || solver.tau > 1.0) throw ConfigError("solver.tau must lie in (0, 1]");
  if (!(solver.init_margin > 0.0)) throw ConfigError("solver.init_margin must be positive");
}

namespace {

double number_at(const json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError("field \"" + key + "\" must be a number");
  return v.get<double>();
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& scope) {
  for (const auto& item : j.items())
    if (!known.count(item.key()))
      throw ConfigError("unknown field \"" + scope + item.key() + "\"");
}

}  // namespace

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid json: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a json object");

  static const std::set<std::string> kTop = {
      "mass", "f0", "f1", "f2", "v_front", "v_max", "v_min", "v_target",
      "accel_frac", "decel_frac", "gravity", "gap_min", "dt", "horizon",
      "chi3", "relax_weight", "ncbf", "hocbf_gains", "integrator", "scale_qp",
      "v0_list", "z0", "output_dir", "barrier", "solver"};
  reject_unknown(j, kTop, "");

  ScenarioConfig cfg;
  auto& prm = cfg.params;
  auto take = [&](const char* key, double& target) {
    if (j.contains(key)) target = number_at(j, key);
  };
  take("mass", prm.mass);
  take("f0", prm.f0);
  take("f1", prm.f1);
  take("f2", prm.f2);
  take("v_front", prm.v_front);
  take("v_max", prm.v_max);
  take("v_min", prm.v_min);
  take("v_target", prm.v_target);
  take("accel_frac", prm.accel_frac);
  take("decel_frac", prm.decel_frac);
  take("gravity", prm.gravity);
  take("gap_min", prm.gap_min);
  take("dt", prm.dt);
  take("horizon", prm.horizon);
  take("chi3", prm.chi3);
  take("relax_weight", prm.relax_weight);
  take("z0", cfg.z0);

  if (j.contains("ncbf")) {
    const auto& jn = j.at("ncbf");
    if (!jn.is_object()) throw ConfigError("field \"ncbf\" must be an object");
    reject_unknown(jn, {"delta", "r", "d", "K"}, "ncbf.");
    if (jn.contains("delta")) prm.ncbf.delta = number_at(jn, "delta");
    if (jn.contains("r")) prm.ncbf.r = number_at(jn, "r");
    if (jn.contains("K")) prm.ncbf.K = number_at(jn, "K");
    if (jn.contains("d")) {
      const auto& jd = jn.at("d");
      if (!jd.is_array() || jd.size() != 2 || !jd.at(0).is_number() || !jd.at(1).is_number())
        throw ConfigError("field \"ncbf.d\" must be an array of two numbers");
      prm.ncbf.d = {jd.at(0).get<double>(), jd.at(1).get<double>()};
    }
  }

  if (j.contains("hocbf_gains")) {
    const auto& jg = j.at("hocbf_gains");
    if (!jg.is_array() || jg.size() != 2 || !jg.at(0).is_number() || !jg.at(1).is_number())
      throw ConfigError("field \"hocbf_gains\" must be an array of two numbers");
    prm.hocbf_gains = {jg.at(0).get<double>(), jg.at(1).get<double>()};
  }

  if (j.contains("integrator")) {
    const auto& ji = j.at("integrator");
    if (!ji.is_string()) throw ConfigError("field \"integrator\" must be a string");
    const std::string s = ji.get<std::string>();
    if (s == "euler")
      prm.integrator = acc::Integrator::Euler;
    else if (s == "rk4")
      prm.integrator = acc::Integrator::Rk4;
    else
      throw ConfigError("field \"integrator\" must be \"euler\" or \"rk4\"");
  }

  if (j.contains("scale_qp")) {
    if (!j.at("scale_qp").is_boolean()) throw ConfigError("field \"scale_qp\" must be a boolean");
    prm.scale_qp = j.at("scale_qp").get<bool>();
  }

  if (j.contains("v0_list")) {
    const auto& jl = j.at("v0_list");
    if (!jl.is_array() || jl.empty()) throw ConfigError("field \"v0_list\" must be a nonempty array");
    cfg.v0_list.clear();
    for (const auto& item : jl) {
      if (!item.is_number()) throw ConfigError("field \"v0_list\" must contain numbers only");
      cfg.v0_list.push_back(item.get<double>());
    }
  }

  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("field \"output_dir\" must be a string");
    cfg.output_dir = j.at("output_dir").get<std::string>();
  }

  if (j.contains("barrier")) {
    if (!j.at("barrier").is_string()) throw ConfigError("field \"barrier\" must be a string");
    cfg.barrier = barrier_choice_from_string(j.at("barrier").get<std::string>());
  }

  if (j.contains("solver")) {
    const auto& js = j.at("solver");
    if (!js.is_object()) throw ConfigError("field \"solver\" must be an object");
    reject_unknown(js, {"tol_mu", "tol_residual", "max_iter", "tau", "init_margin"}, "solver.");
    if (js.contains("tol_mu")) cfg.solver.tol_mu = number_at(js, "tol_mu");
    if (js.contains("tol_residual")) cfg.solver.tol_residual = number_at(js, "tol_residual");
    if (js.contains("max_iter")) {
      if (!js.at("max_iter").is_number_integer())
        throw ConfigError("field \"solver.max_iter\" must be an integer");
      cfg.solver.max_iter = js.at("max_iter").get<int>();
    }
    if (js.contains("tau")) cfg.solver.tau = number_at(js, "tau");
    if (js.contains("init_margin")) cfg.solver.init_margin = number_at(js, "init_margin");
  }

  cfg.validate();
  return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string ScenarioConfig::to_json_text(int indent) const {
  json j;
  const auto& prm = params;
  j["mass"] = prm.mass;
  j["f0"] = prm.f0;
  j["f1"] = prm.f1;
  j["f2"] = prm.f2;
  j["v_front"] = prm.v_front;
  j["v_max"] = prm.v_max;
  j["v_min"] = prm.v_min;
  j["v_target"] = prm.v_target;
  j["accel_frac"] = prm.accel_frac;
  j["decel_frac"] = prm.decel_frac;
  j["gravity"] = prm.gravity;
  j["gap_min"] = prm.gap_min;
  j["dt"] = prm.dt;
  j["horizon"] = prm.horizon;
  j["chi3"] = prm.chi3;
  j["relax_weight"] = prm.relax_weight;
  j["ncbf"] = {{"delta", prm.ncbf.delta},
               {"r", prm.ncbf.r},
               {"d", prm.ncbf.d},
               {"K", prm.ncbf.K}};
  j["hocbf_gains"] = {prm.hocbf_gains.first, prm.hocbf_gains.second};
  j["integrator"] = acc::to_string(prm.integrator);
  j["scale_qp"] = prm.scale_qp;
  j["v0_list"] = v0_list;
  j["z0"] = z0;
  j["output_dir"] = output_dir;
  j["barrier"] = to_string(barrier);
  j["solver"] = {{"tol_mu", solver.tol_mu},
                 {"tol_residual", solver.tol_residual},
                 {"max_iter", solver.max_iter},
                 {"tau", solver.tau},
                 {"init_margin", solver.init_margin}};
  return j.dump(indent);
}

}  // namespace ncbf::cli
