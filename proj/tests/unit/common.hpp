#pragma once

#include <string>
#include <vector>

#include "bsprtl/depgraph.hpp"
#include "bsprtl/netlist.hpp"
#include "random_netlist.hpp"

namespace fx {

struct Compiled {
  bsprtl::Netlist netlist;
  bsprtl::DepGraph graph;
  std::vector<bsprtl::Fiber> fibers;
};

inline std::string fixture_path(const std::string& name) { return std::string(BSPRTL_FIXTURES) + "/" + name; }

inline std::string fixture(const std::string& name) { return bsprtl::testing::read_text(fixture_path(name)); }

inline Compiled compile(const std::string& source,
                        const bsprtl::CostTable& costs = bsprtl::CostTable::defaults()) {
  Compiled c;
  c.netlist = bsprtl::parse_netlist(source);
  c.graph = bsprtl::elaborate(c.netlist, costs);
  c.fibers = bsprtl::extract_fibers(c.graph);
  return c;
}

inline Compiled compile_fixture(const std::string& name) { return compile(fixture(name)); }

}  // namespace fx
