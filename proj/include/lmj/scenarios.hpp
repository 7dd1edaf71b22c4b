#pragma once

#include "lmj/config.hpp"

#include <optional>

namespace lmj {

// Shipped planar 4-link arm on a 1.2 x 0.8 m table.
NamedChain planar4_chain();

/// Unlocked two-link arm with no limits worth mentioning; its reachable
/// set is a disc of radius l1 + l2.
ChainModel two_link_chain(double l1, double l2);

std::vector<std::string> builtin_chain_names();
std::vector<std::string> builtin_failure_names();
std::vector<std::string> builtin_scenario_names();
std::vector<std::string> builtin_suite_names();

std::optional<NamedChain> builtin_chain(std::string_view name);
std::optional<FailureCase> builtin_failure(std::string_view name);
std::optional<ScenarioSpec> builtin_scenario(std::string_view name);
std::optional<SuiteSpec> builtin_suite(std::string_view name);

}  // namespace lmj
