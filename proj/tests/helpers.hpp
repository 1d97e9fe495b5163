#pragma once

#include <initializer_list>
#include <string>
#include <utility>

#include "fpl/config.hpp"

namespace testing {

/// Defaults overridden by the given key/value pairs.
inline fpl::RunConfig config_with(std::initializer_list<std::pair<const char*, std::string>> overrides) {
  fpl::ConfigEntries entries = fpl::default_entries();
  for (const auto& [key, value] : overrides) fpl::set_entry(entries, key, value);
  return fpl::make_config(entries);
}

}  // namespace testing
