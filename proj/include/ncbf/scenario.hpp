#pragma once

#include <string>
#include <vector>

#include "ncbf/acc.hpp"
#include "ncbf/qp.hpp"

namespace ncbf::cli {

enum class BarrierChoice { Ncbf, Hocbf, Both };

std::string to_string(BarrierChoice c);
BarrierChoice barrier_choice_from_string(const std::string& s);  // throws ConfigError

// Everything a batch run needs; JSON keys mirror the field names. Parsing is
// strict: unknown keys and type mismatches are ConfigErrors naming the field.
struct ScenarioConfig {
  acc::AccParams params;
  std::vector<double> v0_list{0.0, 5.0, 10.0, 15.0, 20.0, 25.0};
  double z0 = 100.0;
  std::string output_dir = "out";
  BarrierChoice barrier = BarrierChoice::Ncbf;
  qp::SolverConfig solver;

  void validate() const;
  static ScenarioConfig from_json_text(const std::string& text);
  static ScenarioConfig load(const std::string& path);  // reads the file, then parses
  std::string to_json_text(int indent = 2) const;
};

}  // namespace ncbf::cli
