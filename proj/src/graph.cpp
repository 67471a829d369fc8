#include "anatgraph/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "anatgraph/json_lines.hpp"

namespace anatgraph {

std::string to_string(DatasetId id) {
  switch (id) {
    case DatasetId::oppt: return "OPPT";
    case DatasetId::dsads: return "DSADS";
    case DatasetId::custom: return "custom";
  }
  return "custom";
}

std::string to_string(Side side) {
  switch (side) {
    case Side::left: return "left";
    case Side::right: return "right";
    case Side::center: return "center";
  }
  return "center";
}

std::string to_string(Region region) {
  switch (region) {
    case Region::torso: return "torso";
    case Region::upper_limb: return "upper_limb";
    case Region::lower_limb: return "lower_limb";
  }
  return "torso";
}

std::string to_string(RelationType type) {
  switch (type) {
    case RelationType::interconnected: return "interconnected";
    case RelationType::analogous: return "analogous";
    case RelationType::lateral: return "lateral";
  }
  return "interconnected";
}

DatasetId parse_dataset_id(const std::string& s) {
  if (s == "OPPT" || s == "oppt") return DatasetId::oppt;
  if (s == "DSADS" || s == "dsads") return DatasetId::dsads;
  if (s == "custom") return DatasetId::custom;
  throw LayoutError("unknown dataset id '" + s + "' (expected OPPT, DSADS or custom)");
}

Side parse_side(const std::string& s) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  if (s == "center") return Side::center;
  throw LayoutError("unknown side '" + s + "'");
}

Region parse_region(const std::string& s) {
  if (s == "torso") return Region::torso;
  if (s == "upper_limb") return Region::upper_limb;
  if (s == "lower_limb") return Region::lower_limb;
  throw LayoutError("unknown region '" + s + "'");
}

RelationType parse_relation_type(const std::string& s) {
  for (RelationType t : kRelationTypes)
    if (to_string(t) == s) return t;
  throw LayoutError("unknown relation type '" + s + "'");
}

RelationType relation_from_code(int code) {
  if (code < 0 || code >= kRelationTypeCount)
    throw LayoutError("relation code " + std::to_string(code) + " outside {0,1,2}");
  return static_cast<RelationType>(code);
}

// ---- layout -------------------------------------------------------------------

SensorLayout::SensorLayout(DatasetId id, std::vector<SensorPosition> positions)
    : id_(id), positions_(std::move(positions)) {
  if (positions_.empty()) throw LayoutError("layout has no sensor positions");
  std::set<std::string> seen;
  for (const auto& p : positions_) {
    if (p.key.empty()) throw LayoutError("sensor position with empty key");
    if (p.key.find('_') != std::string::npos)
      throw LayoutError("position key '" + p.key + "' must not contain '_' (used in CSV columns)");
    if (!seen.insert(p.key).second) throw LayoutError("duplicate position key '" + p.key + "'");
    if (!p.name.empty() && p.name != p.key && !seen.insert(p.name).second)
      throw LayoutError("duplicate position name '" + p.name + "'");
  }
}

SensorLayout SensorLayout::oppt() {
  return SensorLayout(DatasetId::oppt,
                      {{"back", "Back", Side::center, Region::torso},
                       {"rua", "Right Upper Arm", Side::right, Region::upper_limb},
                       {"rla", "Right Lower Arm", Side::right, Region::upper_limb},
                       {"lua", "Left Upper Arm", Side::left, Region::upper_limb},
                       {"lla", "Left Lower Arm", Side::left, Region::upper_limb}});
}

SensorLayout SensorLayout::dsads() {
  return SensorLayout(DatasetId::dsads,
                      {{"torso", "Torso", Side::center, Region::torso},
                       {"ra", "Right Arm", Side::right, Region::upper_limb},
                       {"la", "Left Arm", Side::left, Region::upper_limb},
                       {"rl", "Right Leg", Side::right, Region::lower_limb},
                       {"ll", "Left Leg", Side::left, Region::lower_limb}});
}

SensorLayout SensorLayout::for_dataset(DatasetId id) {
  switch (id) {
    case DatasetId::oppt: return oppt();
    case DatasetId::dsads: return dsads();
    case DatasetId::custom: break;
  }
  throw LayoutError("the custom dataset has no built-in layout; supply a rules file");
}

const SensorPosition& SensorLayout::at(Index i) const {
  if (i < 0 || i >= size()) throw std::out_of_range("sensor index " + std::to_string(i) + " out of range");
  return positions_[static_cast<std::size_t>(i)];
}

std::optional<Index> SensorLayout::find(const std::string& key_or_name) const {
  for (Index i = 0; i < size(); ++i) {
    const auto& p = positions_[static_cast<std::size_t>(i)];
    if (p.key == key_or_name || p.name == key_or_name) return i;
  }
  return std::nullopt;
}

// ---- rules ----------------------------------------------------------------------

RelationRules RelationRules::defaults(DatasetId id, bool cross_lateral) {
  using R = RelationType;
  RelationRules r;
  switch (id) {
    case DatasetId::oppt:
      r.pairs = {{"back", "rua", R::interconnected}, {"back", "lua", R::interconnected},
                 {"rua", "rla", R::interconnected},  {"lua", "lla", R::interconnected},
                 {"rua", "lua", R::analogous},       {"rla", "lla", R::analogous},
                 {"rua", "rla", R::lateral},         {"lua", "lla", R::lateral}};
      break;
    case DatasetId::dsads:
      r.pairs = {{"torso", "ra", R::interconnected}, {"torso", "la", R::interconnected},
                 {"torso", "rl", R::interconnected}, {"torso", "ll", R::interconnected},
                 {"ra", "la", R::analogous},         {"rl", "ll", R::analogous},
                 {"ra", "rl", R::lateral},           {"la", "ll", R::lateral}};
      if (cross_lateral) {
        r.pairs.push_back({"la", "rl", R::lateral});
        r.pairs.push_back({"ra", "ll", R::lateral});
      }
      break;
    case DatasetId::custom:
      throw LayoutError("the custom dataset has no default relation rules");
  }
  return r;
}

// ---- graph ----------------------------------------------------------------------

SensorGraph build_graph(const SensorLayout& layout, const RelationRules& rules) {
  if (rules.pairs.empty()) throw ConfigError("relation rules define no edges", "graph");
  SensorGraph g;
  g.layout_ = layout;
  std::set<std::tuple<int, Index, Index>> seen;
  for (const auto& pair : rules.pairs) {
    const auto a = layout.find(pair.first);
    const auto b = layout.find(pair.second);
    if (!a) throw LayoutError("relation references unknown position '" + pair.first + "'");
    if (!b) throw LayoutError("relation references unknown position '" + pair.second + "'");
    if (*a == *b) throw LayoutError("self-loop on '" + pair.first + "' is not allowed");
    const int code = code_of(pair.type);
    if (!seen.insert({code, std::min(*a, *b), std::max(*a, *b)}).second)
      throw LayoutError("duplicate " + to_string(pair.type) + " relation between '" + pair.first +
                        "' and '" + pair.second + "'");
    g.edges_.push_back({*a, *b, pair.type});
    g.edges_.push_back({*b, *a, pair.type});
  }
  std::sort(g.edges_.begin(), g.edges_.end(), [](const Edge& x, const Edge& y) {
    return std::tuple(code_of(x.type), x.src, x.dst) < std::tuple(code_of(y.type), y.src, y.dst);
  });
  std::vector<int> degree(static_cast<std::size_t>(layout.size()), 0);
  for (const auto& e : g.edges_) ++degree[static_cast<std::size_t>(e.dst)];
  for (Index i = 0; i < layout.size(); ++i)
    if (degree[static_cast<std::size_t>(i)] == 0)
      throw LayoutError("sensor '" + layout.at(i).key + "' has no relations (isolated node)");
  return g;
}

std::vector<Neighbor> SensorGraph::neighbors(Index i) const {
  if (i < 0 || i >= node_count())
    throw std::out_of_range("node index " + std::to_string(i) + " out of range");
  std::vector<Neighbor> out;
  for (Index e = 0; e < edge_count(); ++e)
    if (edges_[static_cast<std::size_t>(e)].dst == i) out.push_back({edges_[static_cast<std::size_t>(e)].src, e});
  return out;
}

std::vector<Index> SensorGraph::sources() const {
  std::vector<Index> out;
  for (const auto& e : edges_) out.push_back(e.src);
  return out;
}

std::vector<Index> SensorGraph::destinations() const {
  std::vector<Index> out;
  for (const auto& e : edges_) out.push_back(e.dst);
  return out;
}

std::vector<Index> SensorGraph::relation_codes() const {
  std::vector<Index> out;
  for (const auto& e : edges_) out.push_back(code_of(e.type));
  return out;
}

std::string SensorGraph::edge_name(Index e) const {
  const Edge& ed = edge(e);
  return layout_.at(ed.src).name + "->" + layout_.at(ed.dst).name;
}

// ---- rules file -----------------------------------------------------------------

namespace {

struct RulesParser {
  const LocatedJson& located;
  const std::string& source;

  [[noreturn]] void fail(const std::string& pointer, const std::string& message) const {
    throw LayoutError(source + ":" + std::to_string(located.line_of(pointer)) + ": " + message +
                      " (at " + (pointer.empty() ? "/" : pointer) + ")");
  }

  const nlohmann::json& require(const nlohmann::json& obj, const std::string& pointer,
                                const std::string& key, nlohmann::json::value_t type) const {
    if (!obj.contains(key)) fail(pointer, "missing field '" + key + "'");
    const auto& v = obj.at(key);
    if (v.type() != type) fail(pointer + "/" + key, "field '" + key + "' has the wrong type");
    return v;
  }

  template <typename F>
  auto guarded(const std::string& pointer, F&& f) const {
    try {
      return f();
    } catch (const LayoutError& e) {
      fail(pointer, e.what());
    }
  }
};

}  // namespace

RulesDocument parse_rules(const std::string& text, const std::string& source_name) {
  LocatedJson located;
  try {
    located = parse_json_with_lines(text);
  } catch (const JsonSyntaxError& e) {
    throw LayoutError(source_name + ":" + std::to_string(e.line()) + ": invalid JSON: " + e.what());
  }
  const RulesParser p{located, source_name};
  const auto& doc = located.doc;
  using vt = nlohmann::json::value_t;
  if (!doc.is_object()) p.fail("", "rules document must be a JSON object");
  for (const auto& [key, value] : doc.items())
    if (key != "format_version" && key != "dataset" && key != "positions" && key != "relations")
      p.fail("/" + key, "unknown field '" + key + "'");
  if (doc.contains("format_version") && doc.at("format_version") != 1)
    p.fail("/format_version", "unsupported format_version");

  const DatasetId id = p.guarded("/dataset", [&] {
    return parse_dataset_id(p.require(doc, "", "dataset", vt::string).get<std::string>());
  });

  std::vector<SensorPosition> positions;
  const auto& pos = p.require(doc, "", "positions", vt::array);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const std::string ptr = "/positions/" + std::to_string(i);
    const auto& entry = pos[i];
    if (!entry.is_object()) p.fail(ptr, "position entry must be an object");
    SensorPosition sp;
    sp.key = p.require(entry, ptr, "key", vt::string).get<std::string>();
    sp.name = entry.contains("name") ? p.require(entry, ptr, "name", vt::string).get<std::string>() : sp.key;
    sp.side = p.guarded(ptr + "/side", [&] {
      return parse_side(p.require(entry, ptr, "side", vt::string).get<std::string>());
    });
    sp.region = p.guarded(ptr + "/region", [&] {
      return parse_region(p.require(entry, ptr, "region", vt::string).get<std::string>());
    });
    positions.push_back(std::move(sp));
  }
  SensorLayout layout = p.guarded("/positions", [&] { return SensorLayout(id, positions); });

  RelationRules rules;
  const auto& rel = p.require(doc, "", "relations", vt::object);
  for (const auto& [type_name, list] : rel.items()) {
    const std::string tptr = "/relations/" + type_name;
    const RelationType type = p.guarded(tptr, [&] { return parse_relation_type(type_name); });
    if (!list.is_array()) p.fail(tptr, "relation list must be an array of [a, b] pairs");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string ptr = tptr + "/" + std::to_string(i);
      const auto& pair = list[i];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
        p.fail(ptr, "relation must be a pair of position keys");
      for (int k = 0; k < 2; ++k)
        if (!layout.find(pair[static_cast<std::size_t>(k)].get<std::string>()))
          p.fail(ptr + "/" + std::to_string(k),
                 "unknown position '" + pair[static_cast<std::size_t>(k)].get<std::string>() + "'");
      rules.pairs.push_back({pair[0].get<std::string>(), pair[1].get<std::string>(), type});
    }
  }
  if (rules.pairs.empty()) p.fail("/relations", "relation rules define no edges");
  // Surface graph-level violations (duplicates, isolated nodes) with a location too.
  p.guarded("/relations", [&] { return build_graph(layout, rules); });
  return {std::move(layout), std::move(rules)};
}

RulesDocument load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LayoutError("cannot read rules file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_rules(ss.str(), path.string());
}

std::string rules_to_json(const SensorLayout& layout, const RelationRules& rules) {
  nlohmann::ordered_json doc;
  doc["format_version"] = 1;
  doc["dataset"] = to_string(layout.dataset());
  doc["positions"] = nlohmann::ordered_json::array();
  for (const auto& p : layout.positions())
    doc["positions"].push_back(
        {{"key", p.key}, {"name", p.name}, {"side", to_string(p.side)}, {"region", to_string(p.region)}});
  nlohmann::ordered_json rel = nlohmann::ordered_json::object();
  for (RelationType t : kRelationTypes) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& pair : rules.pairs)
      if (pair.type == t) list.push_back({pair.first, pair.second});
    if (!list.empty()) rel[to_string(t)] = list;
  }
  doc["relations"] = rel;
  return doc.dump(2) + "\n";
}

}  // namespace anatgraph
