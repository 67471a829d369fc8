#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace anatgraph {

/// JSON text that failed to parse; carries the 1-based line of the failure.
class JsonSyntaxError : public std::runtime_error {
 public:
  JsonSyntaxError(const std::string& what, int line) : std::runtime_error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// A parsed document plus the source line of every value, keyed by JSON pointer.
struct LocatedJson {
  nlohmann::json doc;
  std::map<std::string, int> lines;

  /// Line of `pointer`, falling back to its closest located ancestor (or 1).
  int line_of(const std::string& pointer) const;
};

LocatedJson parse_json_with_lines(const std::string& text);

}  // namespace anatgraph
