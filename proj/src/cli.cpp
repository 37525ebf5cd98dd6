#include "svirgo/cli.hpp"

#include "svirgo/error.hpp"
#include "svirgo/kernel.hpp"
#include "svirgo/metrics.hpp"
#include "svirgo/oracle.hpp"
#include "svirgo/scenario_file.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

namespace svirgo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::IoError: return exit_code::kIo;
    case ErrorCode::ScenarioInvalid:
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnknownTarget:
    case ErrorCode::UnknownScope:
    case ErrorCode::UnknownCluster:
    case ErrorCode::EmptyGoalSet:
    case ErrorCode::DecodeError:
      return exit_code::kInvalid;
    default:
      return exit_code::kFailure;
  }
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kFailure;
  }
}

json load_document(const CommonArgs& args) {
  json doc = read_scenario_document(args.scenario);
  for (const auto& o : args.overrides) apply_override(doc, o);
  if (args.seed) doc["seed"] = *args.seed;
  return doc;
}

void make_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "cannot create directory '" + dir + "'");
  }
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error(ErrorCode::IoError, "cannot write '" + p.string() + "'");
  return f;
}

std::string real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

std::string summary(const Scenario& s, const RunResult& r) {
  std::size_t goals = 0, executed = 0;
  for (const auto& [id, g] : r.goals) {
    goals += g.size();
    auto it = r.executed.find(id);
    if (it != r.executed.end()) {
      for (ClusterId c : it->second) executed += g.contains(c) ? 1 : 0;
    }
  }
  std::size_t live = 0;
  for (bool b : r.region_live) live += b ? 1 : 0;
  std::string out = "strategy=" + std::string(to_string(s.strategy));
  out += " events=" + std::to_string(r.events_processed);
  out += " records=" + std::to_string(r.trace.size());
  out += " messages=" + std::to_string(r.goals.size());
  out += " goals_executed=" + std::to_string(executed) + "/" + std::to_string(goals);
  out += " max_hop=" + std::to_string(r.metrics.max_hop);
  out += " regions_live=" + std::to_string(live) + "/" + std::to_string(r.region_live.size());
  out += " cross_region_alg4=" + std::to_string(r.metrics.cross_region_alg4);
  out += std::string(" accounting=") + (r.accounting.balanced() ? "balanced" : "UNBALANCED");
  return out;
}

}  // namespace

int cmd_run(const CommonArgs& args, const std::string& out_dir, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = scenario_from_json(load_document(args));
    const RunResult r = run(s);
    make_dir(out_dir);
    {
      auto f = open_out(fs::path(out_dir) / "trace.jsonl");
      write_trace(f, r.trace);
    }
    {
      auto f = open_out(fs::path(out_dir) / "metrics.csv");
      write_metrics_csv(f, r.metrics);
    }
    out << "run: " << summary(s, r) << '\n';
    return exit_code::kOk;
  });
}

int cmd_sweep(const CommonArgs& args, const std::string& param,
              const std::vector<std::string>& values, int trials, const std::string& out_dir,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (values.empty()) throw Error(ErrorCode::ScenarioInvalid, "--values: empty list");
    if (trials < 1) throw Error(ErrorCode::ScenarioInvalid, "--trials: must be >= 1");
    if (param != "p" && param != "K" && param != "regions" && param != "strategy") {
      throw Error(ErrorCode::ScenarioInvalid,
                  "--param: expected one of p, K, regions, strategy (got '" + param + "')");
    }
    const json base = load_document(args);
    make_dir(out_dir);
    auto csv = open_out(fs::path(out_dir) / "sweep.csv");
    const std::string header =
        "param,value,trials,live_fraction,predicted_liveness,ci_low,ci_high,"
        "mean_leader_broadcasts,mean_worker_broadcasts,mean_tree_forwards,max_hop,"
        "goal_coverage,breaches,unrestored,cross_region_alg4";
    csv << header << '\n';
    out << header << '\n';

    for (const std::string& value : values) {
      json doc = base;
      if (param == "p") {
        bool any = false;
        if (doc.contains("failures") && doc["failures"].is_array()) {
          for (auto& f : doc["failures"]) {
            if (f.is_object() && f.contains("probability")) {
              apply_override(f, "probability=" + value);
              any = true;
            }
          }
        }
        if (!any) {
          throw Error(ErrorCode::ScenarioInvalid,
                      "--param p: scenario has no failure entry with a probability");
        }
      } else if (param == "K") {
        apply_override(doc, "coordinator.K=" + value);
        const json& k = doc["coordinator"]["K"];
        if (!k.is_number_integer()) {
          throw Error(ErrorCode::ScenarioInvalid, "--values: K value '" + value + "' is not an integer");
        }
        const int t_min = doc["coordinator"].value("T_min", 1);
        doc["coordinator"]["T_min"] = std::min(t_min, k.get<int>());
      } else if (param == "regions") {
        apply_override(doc, "topology.regions_per_hub=" + value);
        if (doc["topology"].contains("adjacency")) doc["topology"].erase("adjacency");
      } else {
        doc["strategy"] = value;
      }
      const Scenario s0 = scenario_from_json(doc);

      std::vector<bool> live;
      double sum_lb = 0, sum_wb = 0, sum_tf = 0;
      std::uint32_t max_hop = 0;
      std::size_t goals = 0, executed = 0;
      std::int64_t breaches = 0, unrestored = 0, cross = 0;
      for (int t = 0; t < trials; ++t) {
        Scenario s = s0;
        s.seed = derive_seed(s0.seed, static_cast<std::uint64_t>(t));
        const RunResult r = run(s);
        live.insert(live.end(), r.region_live.begin(), r.region_live.end());
        sum_lb += static_cast<double>(r.metrics.leader_broadcasts);
        sum_wb += static_cast<double>(r.metrics.worker_broadcasts);
        sum_tf += static_cast<double>(r.metrics.tree_forwards);
        max_hop = std::max(max_hop, r.metrics.max_hop);
        for (const auto& [id, g] : r.goals) {
          goals += g.size();
          for (ClusterId c : r.executed.at(id)) executed += g.contains(c) ? 1 : 0;
        }
        for (const auto& rs : r.metrics.recovery) {
          ++breaches;
          unrestored += rs.restored ? 0 : 1;
        }
        cross += r.metrics.cross_region_alg4;
      }

      std::optional<double> p;
      for (const auto& f : s0.failures) {
        if (f.probability) p = *f.probability;
      }
      std::string predicted = "NA", lo = "NA", hi = "NA";
      double fraction = 0;
      for (bool b : live) fraction += b ? 1 : 0;
      fraction = live.empty() ? 0.0 : fraction / static_cast<double>(live.size());
      if (p && !live.empty()) {
        const LivenessEstimate e = liveness_estimate(live, *p, s0.config.K);
        predicted = real(e.predicted);
        lo = real(e.ci_low);
        hi = real(e.ci_high);
      }
      const double n = static_cast<double>(trials);
      const std::string row =
          param + "," + value + "," + std::to_string(trials) + "," + real(fraction) + "," +
          predicted + "," + lo + "," + hi + "," + real(sum_lb / n) + "," + real(sum_wb / n) + "," +
          real(sum_tf / n) + "," + std::to_string(max_hop) + "," +
          (goals ? real(static_cast<double>(executed) / static_cast<double>(goals))
                 : std::string("NA")) +
          "," + std::to_string(breaches) + "," + std::to_string(unrestored) + "," +
          std::to_string(cross);
      csv << row << '\n';
      out << row << '\n';
    }
    return exit_code::kOk;
  });
}

int cmd_oracle_check(const CommonArgs& args, const std::optional<std::string>& trace_path,
                     std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = scenario_from_json(load_document(args));
    check_oracle_applicable(s);
    TraceLog trace;
    if (trace_path) {
      std::ifstream in(*trace_path);
      if (!in) throw Error(ErrorCode::IoError, "cannot read '" + *trace_path + "'");
      trace = read_trace(in);
    } else {
      trace = run(s).trace;
    }
    const OracleResult res = oracle_compare(s, trace);
    for (const auto& m : res.mismatches) out << "mismatch: " << m << '\n';
    std::size_t goals = 0;
    for (const auto& [id, e] : res.expected) goals += e.size();
    if (!res.ok()) {
      out << "oracle: FAIL (" << res.mismatches.size() << " mismatches)\n";
      return exit_code::kOracleMismatch;
    }
    out << "oracle: ok (" << res.expected.size() << " messages, " << goals
        << " reachable goal clusters)\n";
    return exit_code::kOk;
  });
}

int cmd_validate(const CommonArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Scenario s = scenario_from_json(load_document(args));
    out << "valid: " << s.config.num_workers() << " workers, " << s.config.num_clusters()
        << " clusters, " << s.config.num_regions() << " regions, " << s.commands.size()
        << " commands, " << s.failures.size() << " failures\n";
    return exit_code::kOk;
  });
}

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic simulator for region-scoped hierarchical command dissemination"};
  app.require_subcommand(1);

  CommonArgs common;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", common.scenario, "Scenario JSON file")->required();
    sub->add_option("--set", common.overrides,
                    "Override a scenario field, e.g. coordinator.K=5 (repeatable)");
    sub->add_option("--seed", seed, "Replace the scenario seed");
  };

  std::string out_dir = "out";
  auto* run_cmd = app.add_subcommand("run", "Run one scenario");
  add_common(run_cmd);
  run_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();

  std::string param;
  std::vector<std::string> values;
  int trials = 1;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter over Monte-Carlo trials");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
  sweep_cmd->add_option("--param", param, "p, K, regions or strategy")->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values")
      ->delimiter(',')
      ->expected(0, -1);
  sweep_cmd->add_option("--trials", trials, "Runs per value")->capture_default_str();

  std::string trace_path;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare a run with the BFS oracle");
  add_common(oracle_cmd);
  oracle_cmd->add_option("--trace", trace_path, "Check this trace instead of running");

  auto* validate_cmd = app.add_subcommand("validate", "Parse and validate a scenario");
  add_common(validate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_code::kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_code::kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kInvalid;
  }
  auto* active = app.get_subcommands().front();
  if (active->count("--seed") > 0) common.seed = seed;

  if (active == run_cmd) return cmd_run(common, out_dir, out, err);
  if (active == sweep_cmd) {
    std::erase(values, std::string());
    return cmd_sweep(common, param, values, trials, out_dir, out, err);
  }
  if (active == oracle_cmd) {
    std::optional<std::string> tp;
    if (oracle_cmd->count("--trace") > 0) tp = trace_path;
    return cmd_oracle_check(common, tp, out, err);
  }
  return cmd_validate(common, out, err);
}

}  // namespace svirgo
