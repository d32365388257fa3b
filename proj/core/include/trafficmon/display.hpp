#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trafficmon/congestion.hpp"
#include "trafficmon/detection.hpp"
#include "trafficmon/forecast.hpp"
#include "trafficmon/net.hpp"

namespace trafficmon {

// A variable-message board at a highway entry point.
struct BoardSpec {
  std::string board_id;
  std::string location;  // graph node the board serves
  int rows = 3;
  int cols = 32;
  std::string endpoint;  // file://path or tcp://host:port
};

std::vector<BoardSpec> load_boards_file(const std::filesystem::path& path);

// One segment's display-ready snapshot row. The engine enriches segment
// state with delay and an alternative route before composition.
struct DisplaySegment {
  std::string segment_id;
  std::string name;
  CongestionLevel level = CongestionLevel::Free;
  double ratio = 0;
  double delay_s = 0;
  std::optional<std::vector<std::string>> alt_route;  // node ids, origin first
  std::optional<Forecast> forecast;
  std::vector<ObjectClass> active_anomalies;
};

struct AlertEntry {
  std::string name;
  CongestionLevel level = CongestionLevel::Free;
  double delay_s = 0;
  std::optional<std::vector<std::string>> alt_route;
  std::optional<ObjectClass> anomaly;  // set on anomaly-driven entries
  bool quiet = false;                  // the TRAFFIC NORMAL entry

  bool operator==(const AlertEntry&) const = default;
};

struct AlertMessage {
  std::string board_id;
  std::int64_t issued_at = 0;
  std::int64_t expires_at = 0;
  std::vector<AlertEntry> entries;
  CongestionLevel severity = CongestionLevel::Free;
};

struct ComposeOptions {
  int max_entries = 3;
  int refresh_s = 30;
};

// Picks every Overcrowded segment, active-anomaly segments and advisory
// forecasts (deduped per segment), sorts by (level desc, anomaly first,
// delay desc), truncates to max_entries, and falls back to a single
// TRAFFIC NORMAL entry when nothing qualifies.
AlertMessage compose_message(const std::vector<DisplaySegment>& snapshot, const BoardSpec& board,
                             std::int64_t ts, const ComposeOptions& options = {});

// Exactly `rows` lines, each exactly `cols` chars (space padded), uppercase
// ASCII. Entries render as "<NAME> <LEVEL> +<delay>S VIA <node>" with the
// name truncated first when the line overflows.
std::vector<std::string> render_board(const AlertMessage& message, int rows, int cols);

// One JSONL record mirroring the AlertMessage field names.
std::string serialize_message(const AlertMessage& message);
AlertMessage parse_message(const std::string& line);

// Per-board publisher over a file or TCP sink. Re-publishing a message with
// identical content while the previous one is still valid is suppressed;
// send failures leave the suppression state untouched so the next refresh
// retries.
class Publisher {
 public:
  enum class Outcome { published, suppressed };

  explicit Publisher(BoardSpec board);

  // Throws Errc::endpoint_unavailable when the sink cannot be reached.
  Outcome publish(const AlertMessage& message);

  const BoardSpec& board() const { return board_; }
  std::size_t published_count() const { return published_count_; }

 private:
  BoardSpec board_;
  Endpoint endpoint_;
  std::string last_content_;
  std::int64_t last_expires_ = INT64_MIN;
  std::size_t published_count_ = 0;
};

}  // namespace trafficmon
