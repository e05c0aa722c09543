#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mskrt/samples.hpp"

namespace mskrt {

/// Explicit insole synchronization record: the ticks observed on each side at
/// stamp t.
struct SyncRecord {
    double t = 0.0;
    std::int64_t left_tick = 0;
    std::int64_t right_tick = 0;
};

/// Reference channel row (ground-truth joint angles or torques).
struct ReferenceRow {
    double t = 0.0;
    std::vector<double> values;
};

/// In-memory form of a session recording.
///
/// Line format, one record per line, `#` starts a comment:
///   orient <t> <frame> <w> <x> <y> <z>
///   insole <t> <side> <tick> <F> <cop_x> <cop_y>
///   sync   <t> <left_tick> <right_tick>
///   refq   <t> <v>...       (model coordinate order)
///   reftau <t> <v>...
/// Consecutive orient lines with one stamp form a frame; consecutive insole
/// lines with one stamp form a burst. Stamps must not decrease within a
/// channel.
struct Session {
    std::vector<OrientationFrame> orientations;
    std::vector<InsoleBurst> bursts;
    std::optional<SyncRecord> sync;
    std::vector<ReferenceRow> refq;
    std::vector<ReferenceRow> reftau;
    /// Coordinate names for refq/reftau, from a `# coordinates a b c` header.
    std::vector<std::string> reference_names;

    double duration() const;
};

Session parse_session(std::istream& in, std::string_view origin = "<stream>");
Session load_session(const std::filesystem::path& path);
void write_session(std::ostream& out, const Session& session);
void save_session(const std::filesystem::path& path, const Session& session);

enum class PlaybackMode { realtime, logical };

struct PlaybackEvent {
    enum class Kind { orientation, insole, sync, refq, reftau };
    Kind kind;
    double t = 0.0;
    std::size_t index = 0;  // into the matching Session vector
};

/// All records merged by stamp. Per-channel order is kept as recorded; at
/// equal stamps the order is sync, insole, orientation, refq, reftau.
std::vector<PlaybackEvent> playback_schedule(const Session& session);

/// Delivers the schedule to `sink`. Realtime mode sleeps so that no event is
/// delivered before session start + its stamp on the steady clock; logical
/// mode delivers immediately.
void playback(const Session& session, PlaybackMode mode,
              const std::function<void(const PlaybackEvent&)>& sink);

} // namespace mskrt
