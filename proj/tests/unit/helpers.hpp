#pragma once

#include "svirgo/kernel.hpp"

#include <string>

namespace testutil {

inline svirgo::HierarchyConfig small_config(int wpc = 2, int cpr = 2, int rph = 2, int hpd = 2,
                                            int domains = 2) {
  svirgo::HierarchyConfig c;
  c.workers_per_cluster = wpc;
  c.clusters_per_region = cpr;
  c.regions_per_hub = rph;
  c.hubs_per_domain = hpd;
  c.domains = domains;
  c.K = 1;
  c.T_min = 1;
  return c;
}

inline svirgo::Scenario base_scenario(svirgo::HierarchyConfig c, svirgo::Strategy s,
                                      std::uint64_t seed = 1) {
  svirgo::Scenario sc;
  sc.config = c;
  sc.strategy = s;
  sc.seed = seed;
  sc.horizon = 60.0;
  return sc;
}

inline svirgo::CommandSpec command(double t, std::uint32_t origin, svirgo::Scope scope) {
  svirgo::CommandSpec c;
  c.time = t;
  c.origin = origin;
  c.scope = scope;
  return c;
}

inline std::size_t count_events(const svirgo::TraceLog& log, svirgo::Component c,
                                const std::string& ev) {
  std::size_t n = 0;
  for (const auto& r : log) n += (r.comp == c && r.event == ev) ? 1 : 0;
  return n;
}

}  // namespace testutil
