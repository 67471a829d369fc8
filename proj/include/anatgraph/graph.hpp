#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "anatgraph/tensor.hpp"

namespace anatgraph {

enum class DatasetId { oppt, dsads, custom };
enum class Side { left, right, center };
enum class Region { torso, upper_limb, lower_limb };

/// Anatomical relation carried by an edge. Codes are stable and used as
/// embedding-table rows.
enum class RelationType : int { interconnected = 0, analogous = 1, lateral = 2 };
inline constexpr int kRelationTypeCount = 3;
inline constexpr std::array<RelationType, kRelationTypeCount> kRelationTypes{
    RelationType::interconnected, RelationType::analogous, RelationType::lateral};

std::string to_string(DatasetId id);
std::string to_string(Side side);
std::string to_string(Region region);
std::string to_string(RelationType type);
DatasetId parse_dataset_id(const std::string& s);
Side parse_side(const std::string& s);
Region parse_region(const std::string& s);
RelationType parse_relation_type(const std::string& s);
RelationType relation_from_code(int code);
inline int code_of(RelationType t) { return static_cast<int>(t); }

struct SensorPosition {
  std::string key;   // short identifier used in CSV columns and rule files
  std::string name;  // display name
  Side side = Side::center;
  Region region = Region::torso;
};

class SensorLayout {
 public:
  SensorLayout() = default;
  SensorLayout(DatasetId id, std::vector<SensorPosition> positions);

  /// Back, Right Upper Arm, Right Lower Arm, Left Upper Arm, Left Lower Arm.
  static SensorLayout oppt();
  /// Torso, Right Arm, Left Arm, Right Leg, Left Leg.
  static SensorLayout dsads();
  static SensorLayout for_dataset(DatasetId id);

  DatasetId dataset() const { return id_; }
  Index size() const { return static_cast<Index>(positions_.size()); }
  const std::vector<SensorPosition>& positions() const { return positions_; }
  const SensorPosition& at(Index i) const;
  Side side_of(Index i) const { return at(i).side; }
  Region region_of(Index i) const { return at(i).region; }
  /// Index of a position by key or display name.
  std::optional<Index> find(const std::string& key_or_name) const;

 private:
  DatasetId id_ = DatasetId::custom;
  std::vector<SensorPosition> positions_;
};

struct RelationPair {
  std::string first;
  std::string second;
  RelationType type;
};

/// Undirected typed relations; each becomes two directed edges.
struct RelationRules {
  std::vector<RelationPair> pairs;

  /// Defaults for the built-in layouts. `cross_lateral` adds the DSADS
  /// Left Arm-Right Leg and Right Arm-Left Leg lateral pairs.
  static RelationRules defaults(DatasetId id, bool cross_lateral = true);
};

struct Edge {
  Index src;
  Index dst;
  RelationType type;
};

struct Neighbor {
  Index node;
  Index edge;
};

/// Typed directed multigraph over sensor positions. Immutable after build.
class SensorGraph {
 public:
  const SensorLayout& layout() const { return layout_; }
  Index node_count() const { return layout_.size(); }
  Index edge_count() const { return static_cast<Index>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(Index e) const { return edges_.at(static_cast<std::size_t>(e)); }

  /// Incoming edges of node i as (source node, edge index), in edge order.
  std::vector<Neighbor> neighbors(Index i) const;
  std::vector<Index> sources() const;
  std::vector<Index> destinations() const;
  std::vector<Index> relation_codes() const;
  /// "Back->Right Upper Arm" style label for reports.
  std::string edge_name(Index e) const;

 private:
  friend SensorGraph build_graph(const SensorLayout&, const RelationRules&);
  SensorLayout layout_;
  std::vector<Edge> edges_;
};

/// Realizes each rule pair as two directed edges, sorted by (type, src, dst).
SensorGraph build_graph(const SensorLayout& layout, const RelationRules& rules);

struct RulesDocument {
  SensorLayout layout;
  RelationRules rules;
};

/// Parses a relation-rules JSON document. Errors name the offending line.
RulesDocument parse_rules(const std::string& text, const std::string& source_name = "<rules>");
RulesDocument load_rules(const std::filesystem::path& path);
/// Serializes a layout and its rules in the format parse_rules() reads.
std::string rules_to_json(const SensorLayout& layout, const RelationRules& rules);

}  // namespace anatgraph
