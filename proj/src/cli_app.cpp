#include "ncbf/cli_app.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ncbf/acc.hpp"
#include "ncbf/scenario.hpp"

namespace ncbf::cli {

namespace fs = std::filesystem;

namespace {

std::string fmt(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_v0_list(const std::string& arg) {
  std::vector<double> out;
  std::string_view view = arg;
  while (!view.empty()) {
    const auto pos = view.find(',');
    const std::string_view field = view.substr(0, pos);
    double x = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), x);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
      throw ConfigError("--v0 must be a comma-separated list of numbers");
    out.push_back(x);
    if (pos == std::string_view::npos) break;
    view.remove_prefix(pos + 1);
  }
  if (out.empty()) throw ConfigError("--v0 must not be empty");
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw ConfigError("cannot write " + path.string());
}

struct RunResult {
  acc::BarrierKind barrier;
  double v0 = 0.0;
  std::vector<acc::TrajectoryRecord> traj;
};

std::vector<RunResult> run_sweep(const ScenarioConfig& cfg,
                                 const std::vector<acc::BarrierKind>& kinds) {
  std::vector<std::future<RunResult>> futures;
  for (const auto kind : kinds)
    for (const double v0 : cfg.v0_list)
      futures.push_back(std::async(std::launch::async, [&cfg, kind, v0] {
        return RunResult{kind, v0,
                         acc::simulate({v0, cfg.z0}, cfg.params, kind, cfg.solver)};
      }));
  std::vector<RunResult> results;
  results.reserve(futures.size());
  for (auto& f : futures) results.push_back(f.get());
  return results;
}

int count_failures(const std::vector<acc::TrajectoryRecord>& traj) {
  return static_cast<int>(std::count_if(traj.begin(), traj.end(), [](const auto& rec) {
    return rec.qp_status != qp::SolveStatus::Optimal;
  }));
}

double min_theta(const std::vector<acc::TrajectoryRecord>& traj) {
  double m = traj.front().theta;
  for (const auto& rec : traj) m = std::min(m, rec.theta);
  return m;
}

struct SideStats {
  double steady_gap = 0.0;
  double min_gap = 0.0;
  double max_abs_u = 0.0;
  double settle_time = -1.0;
  int violations = 0;
  int failures = 0;
};

SideStats side_stats(const std::vector<acc::TrajectoryRecord>& traj, const acc::AccParams& prm) {
  SideStats st;
  st.steady_gap = traj.back().state.z;
  st.min_gap = traj.front().state.z;
  for (const auto& rec : traj) {
    st.min_gap = std::min(st.min_gap, rec.state.z);
    st.max_abs_u = std::max(st.max_abs_u, std::abs(rec.u));
    if (rec.theta < -1e-3) ++st.violations;
  }
  st.failures = count_failures(traj);
  for (std::size_t k = traj.size(); k-- > 0;) {
    if (std::abs(traj[k].state.v - prm.v_front) > 0.1) break;
    st.settle_time = traj[k].t;
  }
  return st;
}

nlohmann::json side_json(const SideStats& st) {
  return {{"steady_gap", st.steady_gap},   {"min_gap", st.min_gap},
          {"max_abs_u", st.max_abs_u},     {"settle_time", st.settle_time},
          {"violations", st.violations},   {"failures", st.failures}};
}

std::string gnuplot_script(const std::vector<std::string>& names) {
  std::ostringstream gp;
  gp << "set datafile separator ','\n"
     << "set terminal pngcairo size 1200,900\n"
     << "set output 'acc.png'\n"
     << "set key outside right\n"
     << "set multiplot layout 3,1\n"
     << "set xlabel 't (s)'\n";
  const auto panel = [&](const char* ylabel, int column) {
    gp << "set ylabel '" << ylabel << "'\n" << "plot";
    for (std::size_t i = 0; i < names.size(); ++i) {
      std::string title = names[i].substr(5);  // strip traj_
      title = title.substr(0, title.size() - 4);
      gp << (i ? ", \\\n  " : " ") << "'" << names[i] << "' skip 1 using 1:" << column
         << " with lines title '" << title << "'";
    }
    gp << "\n";
  };
  panel("gap (m)", 3);
  panel("speed (m/s)", 2);
  panel("wheel force (N)", 4);
  gp << "unset multiplot\n";
  return gp.str();
}

int do_run(const ScenarioConfig& cfg, bool emit_gnuplot) {
  fs::create_directories(cfg.output_dir);
  std::vector<acc::BarrierKind> kinds;
  if (cfg.barrier == BarrierChoice::Ncbf || cfg.barrier == BarrierChoice::Both)
    kinds.push_back(acc::BarrierKind::Ncbf);
  if (cfg.barrier == BarrierChoice::Hocbf || cfg.barrier == BarrierChoice::Both)
    kinds.push_back(acc::BarrierKind::Hocbf);

  bool any_failure = false;
  std::vector<std::string> names;
  for (const auto& run : run_sweep(cfg, kinds)) {
    const std::string name =
        "traj_" + acc::to_string(run.barrier) + "_v0_" + fmt(run.v0) + ".csv";
    write_file(fs::path(cfg.output_dir) / name, acc::trajectory_csv(run.traj));
    names.push_back(name);
    const int failures = count_failures(run.traj);
    any_failure = any_failure || failures > 0;
    const auto& last = run.traj.back();
    std::cout << "run barrier=" << acc::to_string(run.barrier) << " v0=" << fmt(run.v0)
              << " final_v=" << fmt(last.state.v) << " final_z=" << fmt(last.state.z)
              << " min_theta=" << fmt(min_theta(run.traj)) << " qp_failures=" << failures
              << " -> " << name << "\n";
  }
  if (emit_gnuplot)
    write_file(fs::path(cfg.output_dir) / "plot.gp", gnuplot_script(names));
  return any_failure ? 3 : 0;
}

int do_compare(const ScenarioConfig& cfg) {
  fs::create_directories(cfg.output_dir);
  acc::BarrierKind left = acc::BarrierKind::Ncbf;
  acc::BarrierKind right = acc::BarrierKind::Hocbf;
  if (cfg.barrier == BarrierChoice::Ncbf) right = acc::BarrierKind::Ncbf;
  if (cfg.barrier == BarrierChoice::Hocbf) left = acc::BarrierKind::Hocbf;

  bool any_failure = false;
  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream table;
  table << "v0      steady_gap(" << acc::to_string(left) << ")  steady_gap("
        << acc::to_string(right) << ")  min_gap(" << acc::to_string(left) << ")  min_gap("
        << acc::to_string(right) << ")  settle(" << acc::to_string(left) << ")  settle("
        << acc::to_string(right) << ")\n";

  std::vector<std::future<std::pair<std::vector<acc::TrajectoryRecord>,
                                    std::vector<acc::TrajectoryRecord>>>>
      futures;
  for (const double v0 : cfg.v0_list)
    futures.push_back(std::async(std::launch::async, [&cfg, left, right, v0] {
      return std::make_pair(acc::simulate({v0, cfg.z0}, cfg.params, left, cfg.solver),
                            acc::simulate({v0, cfg.z0}, cfg.params, right, cfg.solver));
    }));

  for (std::size_t i = 0; i < cfg.v0_list.size(); ++i) {
    const double v0 = cfg.v0_list[i];
    auto [ltraj, rtraj] = futures[i].get();
    const SideStats ls = side_stats(ltraj, cfg.params);
    const SideStats rs = side_stats(rtraj, cfg.params);
    any_failure = any_failure || ls.failures > 0 || rs.failures > 0;

    nlohmann::json row;
    row["v0"] = v0;
    row["left"] = side_json(ls);
    row["right"] = side_json(rs);
    row["delta_steady_gap"] = rs.steady_gap - ls.steady_gap;
    row["delta_min_gap"] = rs.min_gap - ls.min_gap;
    row["delta_max_abs_u"] = rs.max_abs_u - ls.max_abs_u;
    row["delta_settle_time"] = rs.settle_time - ls.settle_time;
    rows.push_back(row);

    table << fmt(v0) << "\t" << fmt(ls.steady_gap) << "\t" << fmt(rs.steady_gap) << "\t"
          << fmt(ls.min_gap) << "\t" << fmt(rs.min_gap) << "\t" << fmt(ls.settle_time)
          << "\t" << fmt(rs.settle_time) << "\n";
  }

  nlohmann::json report;
  report["left"] = acc::to_string(left);
  report["right"] = acc::to_string(right);
  report["v_front"] = cfg.params.v_front;
  report["rows"] = rows;

  write_file(fs::path(cfg.output_dir) / "comparison.json", report.dump(2) + "\n");
  write_file(fs::path(cfg.output_dir) / "comparison.txt", table.str());
  std::cout << table.str();
  return any_failure ? 3 : 0;
}

struct FeasRow {
  double t = 0.0;
  bool valid = false;  // state inside the safe set, condition defined
  double theta = 0.0;
  double big_theta = 0.0;
  feasibility::FeasibilityReport rep;
};

FeasRow feas_row(double t, const acc::AccState& s, const acc::AccParams& prm) {
  FeasRow row;
  row.t = t;
  row.theta = s.z - prm.gap_min;
  row.big_theta = acc::barrier_value(s, prm);
  if (row.theta > 0.0 && row.big_theta > 0.0) {
    row.valid = true;
    row.rep = acc::feasibility_at(s, prm);
  }
  return row;
}

std::string feasibility_csv(const std::vector<FeasRow>& rows) {
  std::string out = "t,Theta,theta,lhs,alphaTheta,margin,satisfied,Y";
  out += '\n';
  for (const auto& row : rows) {
    const bool ok = row.valid && row.rep.satisfied;
    out += fmt(row.t);
    out += ',';
    out += fmt(row.big_theta);
    out += ',';
    out += fmt(row.theta);
    out += ',';
    out += fmt(row.valid ? row.rep.lhs : 0.0);
    out += ',';
    out += fmt(row.valid ? row.rep.alpha_theta : 0.0);
    out += ',';
    out += fmt(row.valid ? row.rep.margin : 0.0);
    out += ',';
    out += ok ? '1' : '0';
    out += ',';
    out += fmt(row.valid ? row.rep.y_value : 0.0);
    out += '\n';
  }
  return out;
}

int summarize_feasibility(const std::string& name, const std::vector<FeasRow>& rows) {
  std::size_t satisfied = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();
  for (const auto& row : rows) {
    if (row.valid && row.rep.satisfied) ++satisfied;
    if (row.valid) {
      min_margin = std::min(min_margin, row.rep.margin);
      max_y = std::max(max_y, row.rep.y_value);
    }
  }
  const double frac = rows.empty() ? 0.0 : static_cast<double>(satisfied) / rows.size();
  const auto& last = rows.back();
  std::cout << "feasibility " << name << " satisfied_fraction=" << fmt(frac)
            << " min_margin=" << fmt(min_margin) << " max_Y=" << fmt(max_y)
            << " final_Y=" << fmt(last.valid ? last.rep.y_value : 0.0) << "\n";
  int violations = 0;
  for (const auto& row : rows)
    if (!(row.valid && row.rep.satisfied)) {
      if (violations == 0)
        std::cout << "  first violation at t=" << fmt(row.t) << "\n";
      ++violations;
    }
  return violations;
}

int do_check_feasibility(const ScenarioConfig& cfg, const std::optional<std::string>& traj_path) {
  fs::create_directories(cfg.output_dir);
  int violations = 0;

  if (traj_path) {
    std::ifstream in(*traj_path);
    if (!in) throw ConfigError("cannot open trajectory file: " + *traj_path);
    const auto traj = acc::parse_trajectory_csv(in);
    if (traj.empty()) throw ConfigError("trajectory file has no samples: " + *traj_path);
    std::vector<FeasRow> rows;
    rows.reserve(traj.size());
    for (const auto& rec : traj) rows.push_back(feas_row(rec.t, rec.state, cfg.params));
    write_file(fs::path(cfg.output_dir) / "feasibility.csv", feasibility_csv(rows));
    violations += summarize_feasibility(*traj_path, rows);
  } else {
    for (const double v0 : cfg.v0_list) {
      const auto traj = acc::simulate({v0, cfg.z0}, cfg.params, acc::BarrierKind::Ncbf,
                                      cfg.solver);
      std::vector<FeasRow> rows;
      rows.reserve(traj.size());
      for (const auto& rec : traj) rows.push_back(feas_row(rec.t, rec.state, cfg.params));
      const std::string name = "feasibility_v0_" + fmt(v0) + ".csv";
      write_file(fs::path(cfg.output_dir) / name, feasibility_csv(rows));
      violations += summarize_feasibility("v0=" + fmt(v0), rows);
    }
  }
  return violations > 0 ? 4 : 0;
}

int do_solve_qp(const std::string& problem_path) {
  std::ifstream in(problem_path);
  if (!in) throw ConfigError("cannot open problem file: " + problem_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const auto problem = qp::problem_from_json_text(buf.str());
  const auto sol = qp::solve(problem);

  std::cout << "status=" << qp::to_string(sol.status) << " iterations=" << sol.iterations
            << " mu=" << fmt(sol.final_mu) << " kkt_residual=" << fmt(sol.kkt_residual_norm)
            << "\n";
  std::cout << "v_star=[";
  for (std::size_t i = 0; i < sol.v_star.size(); ++i)
    std::cout << (i ? ", " : "") << fmt(sol.v_star[i]);
  std::cout << "]\nlambda_star=[";
  for (std::size_t i = 0; i < sol.lambda_star.size(); ++i)
    std::cout << (i ? ", " : "") << fmt(sol.lambda_star[i]);
  std::cout << "]\n";
  return sol.status == qp::SolveStatus::Optimal ? 0 : 5;
}

}  // namespace

int run_app(const std::vector<std::string>& args) {
  CLI::App app{"safety-critical control toolkit: exponential barrier transform, "
               "interior-point QP, feasibility diagnostics, cruise-control case study"};
  app.name("ncbf");

  std::string config_path, barrier_flag, out_flag, v0_flag, traj_flag, problem_path;
  double dt_flag = 0.0, horizon_flag = 0.0;
  bool print_defaults = false, gnuplot_flag = false;

  app.add_option("--config", config_path, "scenario config (json)");
  app.add_option("--barrier", barrier_flag, "ncbf, hocbf, or both");
  app.add_option("--out", out_flag, "output directory");
  app.add_option("--v0", v0_flag, "comma-separated initial speeds");
  auto* dt_opt = app.add_option("--dt", dt_flag, "integrator step");
  auto* horizon_opt = app.add_option("--horizon", horizon_flag, "simulation length (s)");
  app.add_flag("--gnuplot", gnuplot_flag, "also write plot.gp next to the trajectory csv files");
  app.add_flag("--print-default-config", print_defaults, "print the default config and exit");
  app.fallthrough();

  auto* cmd_run = app.add_subcommand("run", "simulate the closed loop, write trajectory csv files");
  auto* cmd_sweep = app.add_subcommand("sweep", "alias of run");
  auto* cmd_compare = app.add_subcommand("compare", "run both barriers and report side by side");
  auto* cmd_check = app.add_subcommand("check-feasibility",
                                       "evaluate the pointwise feasibility condition");
  cmd_check->add_option("--traj", traj_flag, "existing trajectory csv to check");
  auto* cmd_solve = app.add_subcommand("solve-qp", "solve one QP from a json file");
  cmd_solve->add_option("--problem", problem_path, "qp json file")->required();
  auto* cmd_print = app.add_subcommand("print-default-config", "print the default config");

  std::vector<const char*> argv;
  argv.push_back("ncbf");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (print_defaults || cmd_print->parsed()) {
      std::cout << ScenarioConfig{}.to_json_text() << "\n";
      return 0;
    }
    if (cmd_solve->parsed()) return do_solve_qp(problem_path);

    ScenarioConfig cfg =
        config_path.empty() ? ScenarioConfig{} : ScenarioConfig::load(config_path);
    if (!barrier_flag.empty()) cfg.barrier = barrier_choice_from_string(barrier_flag);
    if (!out_flag.empty()) cfg.output_dir = out_flag;
    if (!v0_flag.empty()) cfg.v0_list = parse_v0_list(v0_flag);
    if (dt_opt->count() > 0) cfg.params.dt = dt_flag;
    if (horizon_opt->count() > 0) cfg.params.horizon = horizon_flag;
    cfg.validate();

    if (cmd_run->parsed() || cmd_sweep->parsed()) return do_run(cfg, gnuplot_flag);
    if (cmd_compare->parsed()) return do_compare(cfg);
    if (cmd_check->parsed())
      return do_check_feasibility(
          cfg, traj_flag.empty() ? std::nullopt : std::optional<std::string>(traj_flag));

    std::cerr << app.help();
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ncbf::cli
