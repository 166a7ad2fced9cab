#include "kbc/kb.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kbc {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
        size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return in;
}

}  // namespace

std::string normalize_surface(const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (unsigned char c : raw) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::optional<int> KnowledgeBase::find_entity(const std::string& id_string) const {
    auto it = entity_index_.find(id_string);
    if (it == entity_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<int> KnowledgeBase::find_relation(const std::string& id_string) const {
    auto it = relation_index_.find(id_string);
    if (it == relation_index_.end()) return std::nullopt;
    return it->second;
}

const std::vector<Triple>& KnowledgeBase::triples(Split split) const {
    switch (split) {
        case Split::Train: return train_;
        case Split::Valid: return valid_;
        default: return test_;
    }
}

int KnowledgeBase::add_entity(const std::string& id_string, const std::string& surface) {
    auto [it, inserted] = entity_index_.emplace(id_string, num_entities());
    if (!inserted) throw std::runtime_error("duplicate entity id-string: " + id_string);
    entity_ids_.push_back(id_string);
    entity_surfaces_.push_back(surface);
    return it->second;
}

int KnowledgeBase::add_relation(const std::string& id_string, const std::string& surface) {
    auto [it, inserted] = relation_index_.emplace(id_string, num_relations());
    if (!inserted) throw std::runtime_error("duplicate relation id-string: " + id_string);
    relation_ids_.push_back(id_string);
    relation_surfaces_.push_back(surface);
    return it->second;
}

void KnowledgeBase::add_triple(Split split, const Triple& t) {
    if (t.s < 0 || t.s >= num_entities() || t.o < 0 || t.o >= num_entities() ||
        t.r < 0 || t.r >= num_relations()) {
        throw std::runtime_error("triple references unknown id");
    }
    switch (split) {
        case Split::Train: train_.push_back(t); break;
        case Split::Valid: valid_.push_back(t); break;
        default: test_.push_back(t); break;
    }
}

namespace {

void load_names(const std::string& path, KnowledgeBase& kb, bool entities) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 2) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 2 tab-separated fields, got " +
                                     std::to_string(fields.size()));
        }
        std::string surface = normalize_surface(fields[1]);
        if (surface.empty()) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": empty surface form for id " + fields[0]);
        }
        try {
            if (entities) {
                kb.add_entity(fields[0], surface);
            } else {
                kb.add_relation(fields[0], surface);
            }
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void load_triples(const std::string& path, Split split, KnowledgeBase& kb) {
    std::ifstream in = open_or_throw(path);
    std::string line;
    int line_no = 0;
    const bool allow_new_ids = split == Split::Train;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (fields.size() != 3) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected 3 tab-separated fields, got " +
                                     std::to_string(fields.size()));
        }
        auto resolve_entity = [&](const std::string& id_string) -> int {
            if (auto id = kb.find_entity(id_string)) return *id;
            if (!allow_new_ids) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": unknown entity id " + id_string);
            }
            // Not present in the name file: fall back to the id-string itself.
            return kb.add_entity(id_string, normalize_surface(id_string));
        };
        auto resolve_relation = [&](const std::string& id_string) -> int {
            if (auto id = kb.find_relation(id_string)) return *id;
            if (!allow_new_ids) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": unknown relation id " + id_string);
            }
            return kb.add_relation(id_string, normalize_surface(id_string));
        };
        Triple t;
        t.s = resolve_entity(fields[0]);
        t.r = resolve_relation(fields[1]);
        t.o = resolve_entity(fields[2]);
        kb.add_triple(split, t);
    }
}

}  // namespace

KnowledgeBase load_kb(const KbPaths& paths) {
    KnowledgeBase kb;
    load_names(paths.entity_names, kb, /*entities=*/true);
    load_names(paths.relation_names, kb, /*entities=*/false);
    load_triples(paths.train, Split::Train, kb);
    load_triples(paths.valid, Split::Valid, kb);
    load_triples(paths.test, Split::Test, kb);
    return kb;
}

void save_kb(const KnowledgeBase& kb, const KbPaths& paths) {
    auto write_names = [](const std::string& path, int n, auto id_of, auto surface_of) {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write file: " + path);
        for (int i = 0; i < n; ++i) {
            out << id_of(i) << '\t' << surface_of(i) << '\n';
        }
    };
    write_names(
        paths.entity_names, kb.num_entities(),
        [&](int i) { return kb.entity_id_string(i); },
        [&](int i) { return kb.entity_surface(i); });
    write_names(
        paths.relation_names, kb.num_relations(),
        [&](int i) { return kb.relation_id_string(i); },
        [&](int i) { return kb.relation_surface(i); });

    auto write_triples = [&](const std::string& path, Split split) {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write file: " + path);
        for (const Triple& t : kb.triples(split)) {
            out << kb.entity_id_string(t.s) << '\t' << kb.relation_id_string(t.r) << '\t'
                << kb.entity_id_string(t.o) << '\n';
        }
    };
    write_triples(paths.train, Split::Train);
    write_triples(paths.valid, Split::Valid);
    write_triples(paths.test, Split::Test);
}

std::string kb_summary(const KnowledgeBase& kb) {
    std::ostringstream out;
    out << "Entities\tRelations\tTrain\tValid\tTest\n";
    out << kb.num_entities() << '\t' << kb.num_relations() << '\t'
        << kb.triples(Split::Train).size() << '\t' << kb.triples(Split::Valid).size() << '\t'
        << kb.triples(Split::Test).size() << '\n';
    return out.str();
}

std::vector<Query> enumerate_queries(const KnowledgeBase& kb, Split split) {
    std::vector<Query> queries;
    const auto& triples = kb.triples(split);
    queries.reserve(2 * triples.size());
    for (const Triple& t : triples) {
        queries.push_back({t.s, t.r, Direction::Tail, t.o});
        queries.push_back({t.o, t.r, Direction::Head, t.s});
    }
    return queries;
}

bool FilterIndex::contains(int known, int r, Direction dir, int candidate) const {
    const auto& set = lookup(known, r, dir);
    return std::binary_search(set.begin(), set.end(), candidate);
}

const std::vector<int>& FilterIndex::lookup(int known, int r, Direction dir) const {
    auto it = sets_.find(key(known, r, dir));
    if (it == sets_.end()) return empty_;
    return it->second;
}

void FilterIndex::insert(int known, int r, Direction dir, int entity) {
    sets_[key(known, r, dir)].push_back(entity);
}

void FilterIndex::finalize() {
    for (auto& [k, v] : sets_) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
}

FilterIndex build_filter_index(const KnowledgeBase& kb, SplitMask splits) {
    FilterIndex index;
    auto add_split = [&](Split split) {
        for (const Triple& t : kb.triples(split)) {
            index.insert(t.s, t.r, Direction::Tail, t.o);
            index.insert(t.o, t.r, Direction::Head, t.s);
        }
    };
    if (splits.train) add_split(Split::Train);
    if (splits.valid) add_split(Split::Valid);
    if (splits.test) add_split(Split::Test);
    index.finalize();
    return index;
}

TripleSet::TripleSet(const std::vector<Triple>& triples) {
    set_.reserve(triples.size() * 2);
    for (const Triple& t : triples) set_.insert(t);
}

bool TripleSet::contains(const Triple& t) const { return set_.count(t) > 0; }

bool TripleSet::completes(const Query& q, int candidate) const {
    Triple t;
    t.r = q.r;
    if (q.direction == Direction::Tail) {
        t.s = q.known;
        t.o = candidate;
    } else {
        t.s = candidate;
        t.o = q.known;
    }
    return contains(t);
}

}  // namespace kbc
