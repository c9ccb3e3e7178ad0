#pragma once

#include <span>

#include "system.hpp"

namespace ltvdet {

struct ParsedSystem {
  LtvSystem system;
  std::optional<BlockPartition> partition;
  double tmax = 50.0;  // intended analysis horizon
};

// Parses a system definition (see docs/system-format.md). Throws ParseError
// naming the offending field, DimensionError on shape mismatches.
ParsedSystem parse_system_json(const std::string& text);

// Reads and parses a definition file. Throws IoError when unreadable.
ParsedSystem load_system_file(const std::string& path);

// Serialized definitions of the systems bundled for demonstrations and
// acceptance checks.
struct ExampleDef {
  const char* name;
  const char* json;
};
std::span<const ExampleDef> bundled_examples();
const char* bundled_example_json(const std::string& name);  // nullptr when unknown

}  // namespace ltvdet
