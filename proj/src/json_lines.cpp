#include "anatgraph/json_lines.hpp"

#include <iterator>
#include <vector>

namespace anatgraph {

using nlohmann::json;

namespace {

// Forward iterator over the text that counts consumed newlines, so SAX events
// can be stamped with the line the lexer has reached.
struct LineCountingIterator {
  using iterator_category = std::forward_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  const char* pos = nullptr;
  int* line = nullptr;

  reference operator*() const { return *pos; }
  LineCountingIterator& operator++() {
    if (*pos == '\n') ++*line;
    ++pos;
    return *this;
  }
  LineCountingIterator operator++(int) {
    auto copy = *this;
    ++*this;
    return copy;
  }
  bool operator==(const LineCountingIterator& o) const { return pos == o.pos; }
  bool operator!=(const LineCountingIterator& o) const { return pos != o.pos; }
};

std::string escape_token(const std::string& token) {
  std::string out;
  for (char c : token) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

class LineSax : public nlohmann::json_sax<json> {
 public:
  explicit LineSax(const int* line) : line_(line) {}

  std::map<std::string, int> lines;

  bool null() override { return value(); }
  bool boolean(bool) override { return value(); }
  bool number_integer(number_integer_t) override { return value(); }
  bool number_unsigned(number_unsigned_t) override { return value(); }
  bool number_float(number_float_t, const string_t&) override { return value(); }
  bool string(string_t&) override { return value(); }
  bool binary(binary_t&) override { return value(); }
  bool start_object(std::size_t) override { return open(false); }
  bool start_array(std::size_t) override { return open(true); }
  bool key(string_t& k) override {
    frames_.back().key = k;
    return true;
  }
  bool end_object() override { return close(); }
  bool end_array() override { return close(); }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override {
    return false;
  }

 private:
  struct Frame {
    bool is_array;
    std::size_t index;
    std::string key;
  };

  std::string current_pointer() const {
    std::string p;
    for (const auto& f : frames_)
      p += "/" + (f.is_array ? std::to_string(f.index) : escape_token(f.key));
    return p;
  }
  void advance() {
    if (!frames_.empty() && frames_.back().is_array) ++frames_.back().index;
  }
  bool value() {
    lines.emplace(current_pointer(), *line_);
    advance();
    return true;
  }
  bool open(bool is_array) {
    lines.emplace(current_pointer(), *line_);
    frames_.push_back({is_array, 0, {}});
    return true;
  }
  bool close() {
    frames_.pop_back();
    advance();
    return true;
  }

  const int* line_;
  std::vector<Frame> frames_;
};

int line_at_offset(const std::string& text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

int LocatedJson::line_of(const std::string& pointer) const {
  std::string p = pointer;
  while (true) {
    auto it = lines.find(p);
    if (it != lines.end()) return it->second;
    if (p.empty()) return 1;
    p.erase(p.rfind('/'));
  }
}

LocatedJson parse_json_with_lines(const std::string& text) {
  LocatedJson out;
  try {
    out.doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const int line = line_at_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    throw JsonSyntaxError("line " + std::to_string(line) + ": " + e.what(), line);
  }
  int line = 1;
  LineSax sax(&line);
  LineCountingIterator first{text.data(), &line};
  LineCountingIterator last{text.data() + text.size(), &line};
  json::sax_parse(first, last, &sax);
  out.lines = std::move(sax.lines);
  return out;
}

}  // namespace anatgraph
