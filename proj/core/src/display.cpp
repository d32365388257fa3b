#include "trafficmon/display.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "trafficmon/errors.hpp"

namespace trafficmon {

using ordered_json = nlohmann::ordered_json;

std::vector<BoardSpec> load_boards_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open boards file " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_array()) {
    raise(Errc::config_error, "boards file " + path.string() + " is not a JSON array");
  }
  std::vector<BoardSpec> boards;
  for (const auto& e : j) {
    BoardSpec b;
    try {
      b.board_id = e.at("board_id").get<std::string>();
      b.location = e.at("location").get<std::string>();
      b.rows = e.at("rows").get<int>();
      b.cols = e.at("cols").get<int>();
      b.endpoint = e.at("endpoint").get<std::string>();
    } catch (const nlohmann::json::exception& ex) {
      raise(Errc::config_error, "boards file " + path.string() + ": " + ex.what());
    }
    if (b.rows < 1 || b.cols < 8) {
      raise(Errc::config_error, "board '" + b.board_id + "' needs rows >= 1 and cols >= 8");
    }
    Endpoint::parse(b.endpoint);  // fail at load, not at first publish
    boards.push_back(std::move(b));
  }
  return boards;
}

namespace {

// Anomaly-driven entries outrank threshold-driven ones at equal level.
bool entry_before(const AlertEntry& a, const AlertEntry& b) {
  if (a.level != b.level) return a.level > b.level;
  if (a.anomaly.has_value() != b.anomaly.has_value()) return a.anomaly.has_value();
  if (a.delay_s != b.delay_s) return a.delay_s > b.delay_s;
  return a.name < b.name;
}

}  // namespace

AlertMessage compose_message(const std::vector<DisplaySegment>& snapshot, const BoardSpec& board,
                             std::int64_t ts, const ComposeOptions& options) {
  AlertMessage msg;
  msg.board_id = board.board_id;
  msg.issued_at = ts;
  msg.expires_at = ts + static_cast<std::int64_t>(options.refresh_s) * 1000;

  for (const DisplaySegment& seg : snapshot) {
    const bool crowded = seg.level == CongestionLevel::Overcrowded;
    const bool anomalous = !seg.active_anomalies.empty();
    const bool advisory = seg.forecast && seg.forecast->advisory;
    if (!crowded && !anomalous && !advisory) continue;

    AlertEntry entry;
    entry.name = seg.name;
    entry.delay_s = seg.delay_s;
    entry.alt_route = seg.alt_route;
    if (anomalous) {
      // Highest-priority anomaly class wins the tag; level stays current.
      entry.anomaly = *std::min_element(seg.active_anomalies.begin(), seg.active_anomalies.end());
      entry.level = seg.level;
    } else if (crowded) {
      entry.level = seg.level;
    } else {
      // Proactive advisory: show the level the prediction implies.
      entry.level = band_lookup(seg.forecast->predicted_ratio);
    }
    msg.entries.push_back(std::move(entry));
  }

  std::sort(msg.entries.begin(), msg.entries.end(), entry_before);
  if (msg.entries.size() > static_cast<std::size_t>(options.max_entries)) {
    msg.entries.resize(options.max_entries);
  }

  if (msg.entries.empty()) {
    AlertEntry quiet;
    quiet.name = "TRAFFIC NORMAL";
    quiet.quiet = true;
    msg.entries.push_back(std::move(quiet));
  }

  msg.severity = CongestionLevel::Free;
  for (const AlertEntry& e : msg.entries) msg.severity = std::max(msg.severity, e.level);
  return msg;
}

namespace {

std::string to_display_upper(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (u >= 0x80 || !std::isprint(u)) {
      out.push_back('?');
    } else {
      out.push_back(static_cast<char>(std::toupper(u)));
    }
  }
  return out;
}

std::string level_display(const AlertEntry& e) {
  if (e.anomaly) {
    switch (*e.anomaly) {
      case ObjectClass::Accident: return "ACCIDENT";
      case ObjectClass::SuddenStop: return "SUDDEN STOP";
      case ObjectClass::Congestion: return "CONGESTION";
      default: break;
    }
  }
  return to_display_upper(level_name(e.level));
}

std::string render_entry(const AlertEntry& e, int cols) {
  if (e.quiet) {
    std::string line = to_display_upper(e.name);
    if (line.size() > static_cast<std::size_t>(cols)) line.resize(cols);
    return line;
  }

  std::string tail = " " + level_display(e) + " +" +
                     std::to_string(static_cast<long long>(std::llround(e.delay_s))) + "S";
  if (e.alt_route && e.alt_route->size() > 1) {
    // First node after the board location is the turn to take.
    tail += " VIA " + to_display_upper((*e.alt_route)[1]);
  }

  std::string name = to_display_upper(e.name);
  const std::size_t budget =
      tail.size() < static_cast<std::size_t>(cols) ? cols - tail.size() : 1;
  if (name.size() > budget) name.resize(std::max<std::size_t>(budget, 1));

  std::string line = name + tail;
  if (line.size() > static_cast<std::size_t>(cols)) line.resize(cols);
  return line;
}

}  // namespace

std::vector<std::string> render_board(const AlertMessage& message, int rows, int cols) {
  if (rows < 1 || cols < 8) raise(Errc::invalid_value, "board needs rows >= 1 and cols >= 8");
  std::vector<std::string> lines;
  lines.reserve(rows);
  for (int r = 0; r < rows; ++r) {
    std::string line;
    if (static_cast<std::size_t>(r) < message.entries.size()) {
      line = render_entry(message.entries[r], cols);
    }
    line.resize(cols, ' ');
    lines.push_back(std::move(line));
  }
  return lines;
}

std::string serialize_message(const AlertMessage& message) {
  ordered_json j;
  j["board_id"] = message.board_id;
  j["issued_at"] = message.issued_at;
  j["expires_at"] = message.expires_at;
  ordered_json entries = ordered_json::array();
  for (const AlertEntry& e : message.entries) {
    ordered_json ej;
    ej["name"] = e.name;
    ej["level"] = level_name(e.level);
    ej["delay_s"] = e.delay_s;
    if (e.alt_route) {
      ej["alt_route"] = *e.alt_route;
    } else {
      ej["alt_route"] = nullptr;
    }
    if (e.anomaly) {
      ej["anomaly"] = std::string(class_name(*e.anomaly));
    } else {
      ej["anomaly"] = nullptr;
    }
    ej["quiet"] = e.quiet;
    entries.push_back(std::move(ej));
  }
  j["entries"] = std::move(entries);
  j["severity"] = level_name(message.severity);
  return j.dump();
}

AlertMessage parse_message(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) raise(Errc::malformed_record, "bad message record");
  AlertMessage m;
  try {
    m.board_id = j.at("board_id").get<std::string>();
    m.issued_at = j.at("issued_at").get<std::int64_t>();
    m.expires_at = j.at("expires_at").get<std::int64_t>();
    m.severity = level_from_name(j.at("severity").get<std::string>()).value();
    for (const auto& ej : j.at("entries")) {
      AlertEntry e;
      e.name = ej.at("name").get<std::string>();
      e.level = level_from_name(ej.at("level").get<std::string>()).value();
      e.delay_s = ej.at("delay_s").get<double>();
      if (!ej.at("alt_route").is_null()) {
        e.alt_route = ej["alt_route"].get<std::vector<std::string>>();
      }
      if (!ej.at("anomaly").is_null()) {
        e.anomaly = class_from_name(ej["anomaly"].get<std::string>()).value();
      }
      e.quiet = ej.at("quiet").get<bool>();
      m.entries.push_back(std::move(e));
    }
  } catch (const std::exception& ex) {
    raise(Errc::malformed_record, std::string("bad message record: ") + ex.what());
  }
  return m;
}

Publisher::Publisher(BoardSpec board)
    : board_(std::move(board)), endpoint_(Endpoint::parse(board_.endpoint)) {}

Publisher::Outcome Publisher::publish(const AlertMessage& message) {
  // Content identity ignores the timestamps so a recomposed-but-unchanged
  // message within the validity window is recognized as a duplicate.
  AlertMessage keyed = message;
  keyed.issued_at = 0;
  keyed.expires_at = 0;
  const std::string content = serialize_message(keyed);
  if (content == last_content_ && message.issued_at < last_expires_) {
    return Outcome::suppressed;
  }

  const std::string record = serialize_message(message);
  if (endpoint_.kind == Endpoint::Kind::file) {
    std::ofstream out(endpoint_.path, std::ios::app);
    if (!out) raise(Errc::endpoint_unavailable, "cannot open sink " + endpoint_.path);
    out << record << '\n';
    if (!out) raise(Errc::endpoint_unavailable, "write failed to " + endpoint_.path);
  } else {
    tcp_send_line(endpoint_.host, endpoint_.port, record);
  }

  last_content_ = content;
  last_expires_ = message.expires_at;
  ++published_count_;
  return Outcome::published;
}

}  // namespace trafficmon
