#pragma once
// Knowledge-base data model: vocabularies with surface forms, triple splits,
// query enumeration and the filtered-evaluation index.

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kbc {

struct Triple {
    int s = -1;
    int r = -1;
    int o = -1;

    bool operator==(const Triple&) const = default;
};

enum class Direction { Tail, Head };  // Tail: <s,r,?>, Head: <?,r,o>

inline const char* to_string(Direction d) {
    return d == Direction::Tail ? "tail" : "head";
}

// A link-prediction query. `known` is the entity that stays in the triple,
// `gold` is the entity the source triple holds in the missing slot.
struct Query {
    int known = -1;
    int r = -1;
    Direction direction = Direction::Tail;
    int gold = -1;

    bool operator==(const Query&) const = default;
};

enum class Split { Train, Valid, Test };

inline const char* to_string(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        default: return "test";
    }
}

class KnowledgeBase {
public:
    // Dense ids 0..|E|-1 / 0..|R|-1, assigned in first-appearance order over
    // (name file, then triples).
    int num_entities() const { return static_cast<int>(entity_ids_.size()); }
    int num_relations() const { return static_cast<int>(relation_ids_.size()); }

    const std::string& entity_id_string(int e) const { return entity_ids_.at(e); }
    const std::string& entity_surface(int e) const { return entity_surfaces_.at(e); }
    const std::string& relation_id_string(int r) const { return relation_ids_.at(r); }
    const std::string& relation_surface(int r) const { return relation_surfaces_.at(r); }

    std::optional<int> find_entity(const std::string& id_string) const;
    std::optional<int> find_relation(const std::string& id_string) const;

    const std::vector<Triple>& triples(Split split) const;

    int add_entity(const std::string& id_string, const std::string& surface);
    int add_relation(const std::string& id_string, const std::string& surface);
    void add_triple(Split split, const Triple& t);

private:
    std::vector<std::string> entity_ids_;
    std::vector<std::string> entity_surfaces_;
    std::vector<std::string> relation_ids_;
    std::vector<std::string> relation_surfaces_;
    std::unordered_map<std::string, int> entity_index_;
    std::unordered_map<std::string, int> relation_index_;
    std::vector<Triple> train_, valid_, test_;
};

// Lowercase, collapse whitespace runs to single spaces, trim.
std::string normalize_surface(const std::string& raw);

struct KbPaths {
    std::string train;
    std::string valid;
    std::string test;
    std::string entity_names;
    std::string relation_names;
};

// Triple files: UTF-8 lines `s<TAB>r<TAB>o` (string ids).
// Name files: `id-string<TAB>surface form`. Entities/relations first seen in
// the train split get their normalized id-string as surface fallback; ids
// first seen in valid/test are an error.
KnowledgeBase load_kb(const KbPaths& paths);

// Writes the KB back out in the same file formats (canonical form).
void save_kb(const KnowledgeBase& kb, const KbPaths& paths);

// Table-style count summary (one row: entities, relations, split sizes).
std::string kb_summary(const KnowledgeBase& kb);

// Exactly two queries per triple (tail first, then head), in split order.
std::vector<Query> enumerate_queries(const KnowledgeBase& kb, Split split);

// Map (known entity, relation, direction) -> set of entities known true
// across the covered splits. Used for filtered ranking and candidate
// filtering; immutable once built.
class FilterIndex {
public:
    bool contains(int known, int r, Direction dir, int candidate) const;
    const std::vector<int>& lookup(int known, int r, Direction dir) const;

    void insert(int known, int r, Direction dir, int entity);
    void finalize();  // sort + dedup all sets

private:
    static uint64_t key(int known, int r, Direction dir) {
        return (static_cast<uint64_t>(known) << 32) |
               (static_cast<uint64_t>(r) << 1) |
               (dir == Direction::Head ? 1u : 0u);
    }
    std::unordered_map<uint64_t, std::vector<int>> sets_;
    std::vector<int> empty_;
};

struct SplitMask {
    bool train = true;
    bool valid = true;
    bool test = true;
};

// Both (s,r,tail)->o and (o,r,head)->s memberships for every triple in the
// selected splits (all three by default, per the standard filtered protocol).
FilterIndex build_filter_index(const KnowledgeBase& kb, SplitMask splits = {});

// Exact-membership set over one split's triples (used for reranker labels).
class TripleSet {
public:
    explicit TripleSet(const std::vector<Triple>& triples);
    bool contains(const Triple& t) const;
    bool completes(const Query& q, int candidate) const;

private:
    struct Hash {
        size_t operator()(const Triple& t) const {
            uint64_t h = static_cast<uint64_t>(t.s);
            h = h * 0x9e3779b97f4a7c15ULL + static_cast<uint64_t>(t.r);
            h = h * 0x9e3779b97f4a7c15ULL + static_cast<uint64_t>(t.o);
            return static_cast<size_t>(h ^ (h >> 31));
        }
    };
    std::unordered_set<Triple, Hash> set_;
};

}  // namespace kbc
