#pragma once

// CSV and JSON serialization of experiment records.

#include "somd/core.hpp"
#include "somd/harness/experiment.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <ostream>
#include <sstream>
#include <string>

namespace somd::harness {

/// 17 significant digits, enough to round-trip any double.
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_csv(const RunRecord& rec, std::ostream& out) {
  out << "trial,round,regret,bound\n";
  for (std::size_t i = 0; i < rec.trials.size(); ++i) {
    const auto& t = rec.trials[i];
    for (std::size_t r = 0; r < t.regret.size(); ++r) {
      out << i << ',' << (r + 1) << ',' << format_real(t.regret[r]) << ',' << format_real(t.bound[r]) << '\n';
    }
  }
}

inline nlohmann::json to_json(const RunRecord& rec) {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : rec.trials) {
    trials.push_back({{"seed", t.seed},
                      {"regret", t.regret},
                      {"bound", t.bound},
                      {"final_regret", t.final_regret},
                      {"bound_satisfied", t.bound_satisfied}});
  }
  return {{"space", rec.space},
          {"learner", rec.learner},
          {"formula", rec.formula},
          {"eta", rec.eta},
          {"bound", rec.bound},
          {"trials", trials},
          {"mean_final_regret", rec.mean_final_regret},
          {"max_final_regret", rec.max_final_regret},
          {"violations", rec.violations}};
}

inline RunRecord from_json(const nlohmann::json& j) {
  RunRecord rec;
  try {
    rec.space = j.at("space").get<std::string>();
    rec.learner = j.at("learner").get<std::string>();
    rec.formula = j.at("formula").get<std::string>();
    rec.eta = j.at("eta").get<double>();
    rec.bound = j.at("bound").get<double>();
    for (const auto& t : j.at("trials")) {
      TrialRecord tr;
      tr.seed = t.at("seed").get<std::uint64_t>();
      tr.regret = t.at("regret").get<std::vector<double>>();
      tr.bound = t.at("bound").get<std::vector<double>>();
      tr.final_regret = t.at("final_regret").get<double>();
      tr.bound_satisfied = t.at("bound_satisfied").get<bool>();
      rec.trials.push_back(std::move(tr));
    }
    rec.mean_final_regret = j.at("mean_final_regret").get<double>();
    rec.max_final_regret = j.at("max_final_regret").get<double>();
    rec.violations = j.at("violations").get<Index>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed run record: ") + e.what());
  }
  return rec;
}

inline void write_json(const RunRecord& rec, std::ostream& out) { out << to_json(rec).dump(2) << '\n'; }

inline RunRecord parse_json(const std::string& text) {
  try {
    return from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("invalid JSON: ") + e.what());
  }
}

/// Runs `write` against stdout for "-", otherwise against the file at path.
template <class Writer>
void with_output(const std::string& path, Writer&& write) {
  if (path == "-") {
    write(std::cout);
    std::cout.flush();
    if (!std::cout) throw Error("write to standard output failed");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write(out);
  out.flush();
  if (!out) throw Error("write to '" + path + "' failed");
}

inline void emit_report(const RunRecord& rec, const std::string& path, OutputFormat format) {
  with_output(path, [&](std::ostream& out) {
    if (format == OutputFormat::kJson) {
      write_json(rec, out);
    } else {
      write_csv(rec, out);
    }
  });
}

/// '#' header lines describing the game, then `trial,regret` rows.
inline void write_lower_bound_csv(const LowerBoundSummary& s, std::ostream& out) {
  out << "# V=" << s.V << " s=" << format_real(s.s) << " N=" << s.N << " T=" << s.T << " k=" << s.block_length
      << " eta=" << format_real(s.eta) << '\n';
  out << "# " << s.formula << '\n';
  out << "# mean=" << format_real(s.mean) << " standard_error=" << format_real(s.standard_error)
      << " floor=" << format_real(s.floor) << " predicted=" << format_real(s.predicted) << '\n';
  out << "trial,regret\n";
  for (std::size_t i = 0; i < s.regrets.size(); ++i) out << i << ',' << format_real(s.regrets[i]) << '\n';
}

}  // namespace somd::harness
