#include "mskrt/sync.hpp"

namespace mskrt {

std::string_view to_string(MatchKind kind) {
    switch (kind) {
    case MatchKind::matched: return "matched";
    case MatchKind::defer: return "defer";
    case MatchKind::drop: return "drop";
    }
    return "?";
}

MatchKind combine(std::initializer_list<MatchKind> kinds) {
    bool defer = false;
    for (MatchKind k : kinds) {
        if (k == MatchKind::drop) {
            return MatchKind::drop;
        }
        defer = defer || k == MatchKind::defer;
    }
    return defer ? MatchKind::defer : MatchKind::matched;
}

} // namespace mskrt
