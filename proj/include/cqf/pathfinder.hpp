#pragma once

#include "cqf/schema.hpp"

#include <deque>
#include <memory>
#include <queue>

namespace cqf {

struct WeightedPath {
    SchemaPath path;
    std::size_t weight = 0;
    std::string text;  ///< verbalization, cached for ranking and display

    friend bool operator==(const WeightedPath&, const WeightedPath&) = default;
};

/// Relevance weight: the number of steps. Ranking is by (weight, verbalization).
inline std::size_t path_weight(const SchemaGraph& g, const SchemaPath& p) {
    check_path(g, p);
    return p.steps.size();
}

inline SchemaPath concat_paths(const SchemaGraph& g, const SchemaPath& p, const SchemaPath& q) {
    const auto tail = path_tail(g, p);
    check_path(g, q);
    if (tail != q.head)
        throw Error(ErrorKind::type_mismatch, "cannot concatenate: path ends at " + tail.str() + " but the next path starts at " + q.head.str());
    SchemaPath out = p;
    out.steps.insert(out.steps.end(), q.steps.begin(), q.steps.end());
    return out;
}

/// Resumable generator of simple paths (no repeated object type) between two
/// object types, emitted in (weight, verbalization) order.
///
/// Best-first search over path prefixes. A prefix is keyed by
/// (steps so far + shortest remaining distance that avoids the prefix, prefix text).
/// Both components bound every completion from below, and the verbalization of a
/// prefix is a string prefix of each completion's, so complete paths leave the
/// queue in exact ranking order. Prefixes without any completion are never queued,
/// which makes "frontier empty" equivalent to "no paths left".
class PathEnumerator {
public:
    PathEnumerator(std::shared_ptr<const SchemaGraph> schema, ObjectTypeId from, ObjectTypeId to)
        : schema_(std::move(schema)), from_(std::move(from)), to_(std::move(to)) {
        const auto& g = *schema_;
        g.object_type(from_);
        g.object_type(to_);
        Prefix root;
        root.path.head = from_;
        root.visited.insert(from_);
        root.text = text::lower(g.object_type(from_).name);
        if (from_ == to_) {
            root.bound = 0;
            push(std::move(root));
        } else if (auto h = remaining_distance(from_, root.visited)) {
            root.bound = *h;
            push(std::move(root));
        }
    }

    const ObjectTypeId& from() const noexcept { return from_; }
    const ObjectTypeId& to() const noexcept { return to_; }
    const SchemaGraph& schema() const noexcept { return *schema_; }
    const std::vector<WeightedPath>& emitted() const noexcept { return emitted_; }
    bool exhausted() const noexcept { return frontier_.empty(); }

    /// The next `batch` paths in ranking order (fewer once the enumeration runs dry).
    std::vector<WeightedPath> next_batch(std::size_t batch) {
        if (batch == 0) throw Error(ErrorKind::invalid, "batch size must be positive");
        std::vector<WeightedPath> out;
        while (out.size() < batch && !frontier_.empty()) {
            std::pop_heap(frontier_.begin(), frontier_.end(), Later{});
            Prefix top = std::move(frontier_.back());
            frontier_.pop_back();
            if (tail_of(top) == to_) {
                WeightedPath wp{std::move(top.path), top.bound, text::capitalize_first(std::move(top.text))};
                emitted_.push_back(wp);
                out.push_back(std::move(wp));
                continue;
            }
            expand(top);
        }
        return out;
    }

private:
    struct Prefix {
        SchemaPath path;
        std::set<ObjectTypeId> visited;
        std::size_t bound = 0;
        std::string text;  ///< lowercase verbalization of the prefix
    };

    struct Later {
        bool operator()(const Prefix& a, const Prefix& b) const {
            if (a.bound != b.bound) return a.bound > b.bound;
            if (a.text != b.text) return a.text > b.text;
            return a.path.steps > b.path.steps;
        }
    };

    ObjectTypeId tail_of(const Prefix& p) const { return p.path.steps.empty() ? p.path.head : schema_->to_player(p.path.steps.back()); }

    void push(Prefix p) {
        frontier_.push_back(std::move(p));
        std::push_heap(frontier_.begin(), frontier_.end(), Later{});
    }

    void expand(const Prefix& prefix) {
        const auto& g = *schema_;
        const auto tail = tail_of(prefix);
        for (const auto& step : g.adjacent_steps(tail)) {
            const auto& next = g.to_player(step);
            if (prefix.visited.contains(next)) continue;
            Prefix child;
            child.path = prefix.path;
            child.path.steps.push_back(step);
            child.visited = prefix.visited;
            child.visited.insert(next);
            std::optional<std::size_t> h = next == to_ ? std::optional<std::size_t>(0) : remaining_distance(next, child.visited);
            if (!h) continue;
            child.bound = child.path.steps.size() + *h;
            child.text = prefix.text + ' ' + text::lower(g.connector(step)) + ' ' + text::lower(g.object_type(next).name);
            push(std::move(child));
        }
    }

    /// Breadth-first distance from `start` to the target through object types not in `blocked`.
    std::optional<std::size_t> remaining_distance(const ObjectTypeId& start, const std::set<ObjectTypeId>& blocked) const {
        const auto& g = *schema_;
        std::set<ObjectTypeId> seen{start};
        std::deque<std::pair<ObjectTypeId, std::size_t>> queue{{start, 0}};
        while (!queue.empty()) {
            auto [at, d] = queue.front();
            queue.pop_front();
            for (const auto& step : g.adjacent_steps(at)) {
                const auto& next = g.to_player(step);
                if (next == to_) return d + 1;
                if (blocked.contains(next) || !seen.insert(next).second) continue;
                queue.emplace_back(next, d + 1);
            }
        }
        return std::nullopt;
    }

    std::shared_ptr<const SchemaGraph> schema_;
    ObjectTypeId from_;
    ObjectTypeId to_;
    std::vector<WeightedPath> emitted_;
    std::vector<Prefix> frontier_;
};

inline PathEnumerator open_enumeration(std::shared_ptr<const SchemaGraph> g, const ObjectTypeId& from, const ObjectTypeId& to) {
    return PathEnumerator(std::move(g), from, to);
}

inline PathEnumerator open_enumeration(const SchemaGraph& g, const ObjectTypeId& from, const ObjectTypeId& to) {
    return PathEnumerator(std::make_shared<const SchemaGraph>(g), from, to);
}

inline std::vector<WeightedPath> next_batch(PathEnumerator& e, std::size_t batch) { return e.next_batch(batch); }

// ---------------------------------------------------------------------------
// Point-to-point queries

struct PpqSegment {
    SchemaPath selected;
    std::vector<WeightedPath> offered;
    PathEnumerator enumerator;
};

struct PpqResult {
    std::vector<ObjectTypeId> points;
    std::vector<PpqSegment> segments;
};

inline constexpr std::size_t default_batch_size = 5;

/// Ranks each adjacent pair of points independently and pre-selects the best path.
inline PpqResult run_ppq(std::shared_ptr<const SchemaGraph> g, const std::vector<ObjectTypeId>& points, std::size_t batch = default_batch_size) {
    if (points.size() < 2) throw Error(ErrorKind::invalid, "a point-to-point query needs at least 2 points, got " + std::to_string(points.size()));
    for (const auto& p : points) g->object_type(p);
    PpqResult r;
    r.points = points;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        PathEnumerator e(g, points[i], points[i + 1]);
        auto offered = e.next_batch(batch);
        if (offered.empty()) throw Error(ErrorKind::no_path, "no path connects " + points[i].str() + " and " + points[i + 1].str());
        auto selected = offered.front().path;
        r.segments.push_back(PpqSegment{std::move(selected), std::move(offered), std::move(e)});
    }
    return r;
}

inline PpqResult run_ppq(const SchemaGraph& g, const std::vector<ObjectTypeId>& points, std::size_t batch = default_batch_size) {
    return run_ppq(std::make_shared<const SchemaGraph>(g), points, batch);
}

inline PpqResult select_alternative(const PpqResult& r, std::size_t segment, std::size_t choice) {
    if (segment >= r.segments.size())
        throw Error(ErrorKind::out_of_range, "segment " + std::to_string(segment) + " out of range (" + std::to_string(r.segments.size()) + " segments)");
    const auto& offered = r.segments[segment].offered;
    if (choice >= offered.size())
        throw Error(ErrorKind::out_of_range, "choice " + std::to_string(choice) + " out of range (" + std::to_string(offered.size()) + " offered)");
    PpqResult out = r;
    out.segments[segment].selected = offered[choice].path;
    return out;
}

/// One MORE press on a segment: pulls the next batch into its offered list.
inline std::vector<WeightedPath> more_paths(PpqResult& r, std::size_t segment, std::size_t batch = default_batch_size) {
    if (segment >= r.segments.size())
        throw Error(ErrorKind::out_of_range, "segment " + std::to_string(segment) + " out of range (" + std::to_string(r.segments.size()) + " segments)");
    auto& seg = r.segments[segment];
    auto added = seg.enumerator.next_batch(batch);
    seg.offered.insert(seg.offered.end(), added.begin(), added.end());
    return added;
}

/// The selected segment paths joined into one path.
inline SchemaPath ppq_path(const SchemaGraph& g, const PpqResult& r) {
    SchemaPath out{r.points.front(), {}};
    for (const auto& seg : r.segments) out = concat_paths(g, out, seg.selected);
    return out;
}

}  // namespace cqf
