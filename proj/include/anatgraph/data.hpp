#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anatgraph/graph.hpp"

namespace anatgraph {

/// One contiguous (user, activity) segment. streams[s] is [length x C].
struct RawRecording {
  int user_id = 0;
  int activity = 0;
  std::vector<RowMatrix> streams;

  Index length() const { return streams.empty() ? 0 : streams.front().rows(); }
  Index sensors() const { return static_cast<Index>(streams.size()); }
  Index channels() const { return streams.empty() ? 0 : streams.front().cols(); }
  /// Per-time-step activity annotation (constant within a segment).
  std::vector<int> annotations() const { return std::vector<int>(static_cast<std::size_t>(length()), activity); }
  /// Throws LayoutError on unequal stream lengths or channel counts.
  void validate() const;
};

/// A named group of users held out together in one LOSO fold.
struct UserCluster {
  std::string name;
  std::vector<int> users;
};

/// Dataset manifest: layout, channel names, class names, sampling rate.
struct Manifest {
  SensorLayout layout;
  /// Relation-rules file (resolved against the manifest's directory); empty
  /// selects the built-in rules of `layout`.
  std::string rules_path;
  std::optional<RelationRules> rules;
  std::vector<std::string> channels;
  std::vector<std::string> classes;
  double sampling_rate_hz = 1.0;
  /// Empty means one cluster per user.
  std::vector<UserCluster> clusters;

  Index sensors() const { return layout.size(); }
  RelationRules relation_rules() const;
  Index channel_count() const { return static_cast<Index>(channels.size()); }
  /// CSV column for (sensor, channel): "<key>_<channel>".
  std::string column(Index sensor, Index channel) const;
  void validate() const;
};

/// Activity names for the built-in layouts (17 OPPT, 19 DSADS).
std::vector<std::string> builtin_classes(DatasetId id);
/// Built-in layout with its class list, x/y/z channels and nominal rate.
Manifest builtin_manifest(DatasetId id);

nlohmann::json manifest_to_json(const Manifest& m);
/// Errors carry the JSON field path.
Manifest manifest_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Manifest load_manifest(const std::filesystem::path& path);

struct Dataset {
  Manifest manifest;
  std::vector<RawRecording> recordings;

  std::vector<int> users() const;
  /// Manifest clusters, or one "U<id>" cluster per user when none are given.
  std::vector<UserCluster> clusters() const;
};

struct IngestResult {
  std::vector<RawRecording> recordings;
  Index rows = 0;
  Index dropped_rows = 0;
};

/// Reads the CSV interchange format. Rows with empty/NaN fields are dropped
/// and counted; a dropped row also ends the current segment.
IngestResult ingest_csv(std::istream& in, const Manifest& schema, const std::string& source = "<csv>");
IngestResult ingest_csv(const std::filesystem::path& path, const Manifest& schema);
/// Writes recordings in the format ingest_csv() reads, values at full precision.
void write_csv(std::ostream& out, const Dataset& dataset);
void write_csv(const std::filesystem::path& path, const Dataset& dataset);

/// A labeled [S x T x C] window stored row-major.
struct Window {
  int user_id = 0;
  int activity = 0;
  /// Index of the source recording within its dataset.
  int segment = 0;
  Vector data;
};

struct WindowSet {
  Index sensors = 0;
  Index length = 0;
  Index channels = 0;
  std::vector<Window> windows;

  std::size_t size() const { return windows.size(); }
  bool empty() const { return windows.empty(); }
  Index window_size() const { return sensors * length * channels; }
};

/// floor((len - T) / stride) + 1 windows per recording when len >= T.
std::vector<Window> windowize(const RawRecording& rec, Index length, Index stride);
WindowSet windowize(const Dataset& dataset, Index length, Index stride);

struct UserSplit;
struct HoldoutSplit;

/// Windows of the training users of one split. Only split_by_users() can
/// make one, so target windows cannot reach NormStats::fit().
class SourceWindows {
 public:
  const WindowSet& windows() const { return set_; }

 private:
  friend UserSplit split_by_users(const WindowSet&, const std::vector<int>&);
  friend HoldoutSplit split_last_segments(const SourceWindows&);
  explicit SourceWindows(WindowSet s) : set_(std::move(s)) {}
  WindowSet set_;
};

struct UserSplit {
  SourceWindows source;
  WindowSet target;
};

/// Partitions windows into source (users not in `target_users`) and target.
UserSplit split_by_users(const WindowSet& all, const std::vector<int>& target_users);

struct HoldoutSplit {
  SourceWindows train;
  WindowSet holdout;
};

/// Within-user validation split: the last recording segment of every
/// (user, activity) that has at least two segments goes to `holdout`.
HoldoutSplit split_last_segments(const SourceWindows& source);

/// Per (sensor, channel) z-score statistics.
class NormStats {
 public:
  static constexpr double kStdFloor = 1e-8;

  static NormStats fit(const SourceWindows& source);
  /// Returns a normalized copy.
  WindowSet apply(const WindowSet& windows) const;
  void apply_in_place(WindowSet& windows) const;

  const Vector& mean() const { return mean_; }
  const Vector& stddev() const { return std_; }

 private:
  Index sensors_ = 0;
  Index length_ = 0;
  Index channels_ = 0;
  Vector mean_;
  Vector std_;
};

/// Stacks windows [first, first + count) of `order` into [B x S x T x C].
Tensor stack_windows(const WindowSet& set, const std::vector<std::size_t>& order, std::size_t first,
                     std::size_t count);

struct SyntheticConfig {
  int n_users = 4;
  int n_activities = 5;
  DatasetId layout = DatasetId::oppt;
  Index window = 64;
  Index channels = 3;
  /// Recording segments per (user, activity) and samples per segment.
  int segments_per_activity = 2;
  Index segment_length = 192;
  double noise = 0.35;
  double amplitude_bias = 0.6;
  double phase_bias = 1.2;
  double offset_bias = 0.8;
  double frequency_bias = 0.25;
  /// User-specific, activity-specific offsets.
  double interaction_bias = 0.6;
  double sampling_rate_hz = 30.0;
  /// Optional per-activity S x S coupling matrices; generated when empty.
  std::vector<RowMatrix> coupling;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Multi-user dataset: activity-specific coupled sinusoid mixtures shared by
/// all users, composed with per-user amplitude/phase/offset/frequency biases.
Dataset generate_synthetic(const SyntheticConfig& config);

/// FNV-1a over a window's label-free sample bytes.
std::uint64_t window_hash(const Window& w);

}  // namespace anatgraph
