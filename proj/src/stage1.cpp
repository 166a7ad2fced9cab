#include "kbc/stage1.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "kbc/optim.hpp"
#include "kbc/serialize.hpp"

namespace kbc {

namespace {

constexpr char kCheckpointMagic[8] = {'K', 'B', 'C', 'S', 'T', 'G', '1', '\0'};
constexpr uint32_t kCheckpointVersion = 1;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline std::complex<double> unit_phase(double theta) {
    return {std::cos(theta), std::sin(theta)};
}

// Resolves the (subject, object) entity rows for a completion of the query.
struct TripleRoles {
    int s;
    int o;
};

inline TripleRoles roles(const Query& q, int candidate) {
    if (q.direction == Direction::Tail) return {q.known, candidate};
    return {candidate, q.known};
}

}  // namespace

Eigen::VectorXcd Stage1Model::relation_vector(int r) const {
    if (kind == Stage1Kind::Rotate) {
        Eigen::VectorXcd w(rel_phases.cols());
        for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = unit_phase(rel_phases(r, i));
        return w;
    }
    return relations.row(r);
}

Stage1Model init_stage1(const KnowledgeBase& kb, const Stage1Config& config) {
    if (config.dim < 1) throw std::invalid_argument("stage1: dim must be >= 1");
    Stage1Model model;
    model.kind = config.kind;
    model.gamma = config.gamma;
    model.seed = config.seed;

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> small(-0.1, 0.1);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);

    const int E = kb.num_entities();
    const int R = kb.num_relations();
    model.entities.resize(E, config.dim);
    for (int e = 0; e < E; ++e) {
        for (int i = 0; i < config.dim; ++i) {
            const double re = small(rng);
            const double im = small(rng);
            model.entities(e, i) = {re, im};
        }
    }
    if (config.kind == Stage1Kind::Rotate) {
        model.rel_phases.resize(R, config.dim);
        for (int r = 0; r < R; ++r) {
            for (int i = 0; i < config.dim; ++i) model.rel_phases(r, i) = phase(rng);
        }
        model.relations.resize(0, 0);
    } else {
        model.relations.resize(R, config.dim);
        for (int r = 0; r < R; ++r) {
            for (int i = 0; i < config.dim; ++i) {
                const double re = small(rng);
                const double im = small(rng);
                model.relations(r, i) = {re, im};
            }
        }
        model.rel_phases.resize(0, 0);
    }
    return model;
}

void Stage1Grads::setZero(const Stage1Model& model) {
    entities = Eigen::MatrixXcd::Zero(model.entities.rows(), model.entities.cols());
    if (model.kind == Stage1Kind::Rotate) {
        rel_phases = Eigen::MatrixXd::Zero(model.rel_phases.rows(), model.rel_phases.cols());
        relations.resize(0, 0);
    } else {
        relations = Eigen::MatrixXcd::Zero(model.relations.rows(), model.relations.cols());
        rel_phases.resize(0, 0);
    }
}

namespace {

// Scores one completion and backpropagates dL/dscore into the embedding rows.
// Complex gradients are packed as d/d(re) + i*d/d(im).
double score_and_backprop(const Stage1Model& model, const Query& q, int candidate,
                          double dscore, Stage1Grads* grads) {
    const TripleRoles tr = roles(q, candidate);
    const Eigen::VectorXcd e_s = model.entities.row(tr.s);
    const Eigen::VectorXcd e_o = model.entities.row(tr.o);

    if (model.kind == Stage1Kind::Complex) {
        const Eigen::VectorXcd w_r = model.relations.row(q.r);
        const double score = complex_score(e_s, w_r, e_o);
        if (grads != nullptr && dscore != 0.0) {
            grads->entities.row(tr.s) +=
                (dscore * (w_r.conjugate().array() * e_o.array())).matrix().transpose();
            grads->relations.row(q.r) +=
                (dscore * (e_s.conjugate().array() * e_o.array())).matrix().transpose();
            grads->entities.row(tr.o) +=
                (dscore * (e_s.array() * w_r.array())).matrix().transpose();
        }
        return score;
    }

    // RotatE: score = gamma - ||u||, u = e_s o w - e_o, w = exp(i*phases)
    const int d = model.dim();
    Eigen::VectorXcd w(d);
    for (int i = 0; i < d; ++i) w[i] = unit_phase(model.rel_phases(q.r, i));
    const Eigen::VectorXcd rotated = e_s.cwiseProduct(w);
    const Eigen::VectorXcd u = rotated - e_o;
    const double norm = std::max(u.norm(), 1e-12);
    const double score = model.gamma - norm;
    if (grads != nullptr && dscore != 0.0) {
        const Eigen::VectorXcd g_u = (-dscore / norm) * u;
        grads->entities.row(tr.s) += w.conjugate().cwiseProduct(g_u).transpose();
        grads->entities.row(tr.o) -= g_u.transpose();
        for (int i = 0; i < d; ++i) {
            grads->rel_phases(q.r, i) += (std::conj(rotated[i]) * g_u[i]).imag();
        }
    }
    return score;
}

// d/dz |z|^3 = 3|z| z (packed convention)
void add_n3_gradient(Eigen::MatrixXcd& grad, int row, const Eigen::VectorXcd& z, double weight) {
    grad.row(row) += (weight * 3.0 * z.array().abs() * z.array()).matrix().transpose();
}

}  // namespace

double stage1_example_loss(const Stage1Model& model, const Query& query,
                           const std::vector<int>& negatives, double regularization,
                           Stage1Grads* grads) {
    double loss = 0.0;

    const double pos_score = score_and_backprop(model, query, query.gold, 0.0, nullptr);
    const double pos_p = sigmoid(pos_score);
    loss -= std::log(std::max(pos_p, 1e-12));
    score_and_backprop(model, query, query.gold, pos_p - 1.0, grads);

    for (int neg : negatives) {
        const double neg_score = score_and_backprop(model, query, neg, 0.0, nullptr);
        const double neg_p = sigmoid(neg_score);
        loss -= std::log(std::max(1.0 - neg_p, 1e-12));
        score_and_backprop(model, query, neg, neg_p, grads);
    }

    if (regularization > 0.0 && model.kind == Stage1Kind::Complex) {
        const TripleRoles tr = roles(query, query.gold);
        const Eigen::VectorXcd e_s = model.entities.row(tr.s);
        const Eigen::VectorXcd e_o = model.entities.row(tr.o);
        const Eigen::VectorXcd w_r = model.relations.row(query.r);
        loss += regularization * (e_s.array().abs().cube().sum() +
                                  w_r.array().abs().cube().sum() +
                                  e_o.array().abs().cube().sum());
        if (grads != nullptr) {
            add_n3_gradient(grads->entities, tr.s, e_s, regularization);
            add_n3_gradient(grads->relations, query.r, w_r, regularization);
            add_n3_gradient(grads->entities, tr.o, e_o, regularization);
        }
    }
    return loss;
}

Stage1Model train_stage1(const KnowledgeBase& kb, const Stage1Config& config,
                         std::vector<double>* epoch_losses) {
    Stage1Model model = init_stage1(kb, config);
    const auto& train = kb.triples(Split::Train);
    if (config.epochs <= 0 || train.empty()) return model;

    std::mt19937_64 rng(config.seed ^ 0x5eedULL);
    std::uniform_int_distribution<int> entity_dist(0, kb.num_entities() - 1);

    std::vector<TensorRef> params;
    params.push_back(tensor_ref(model.entities));
    if (model.kind == Stage1Kind::Rotate) {
        params.push_back(tensor_ref(model.rel_phases));
    } else {
        params.push_back(tensor_ref(model.relations));
    }
    AdamOptimizer adam(config.lr);
    adam.initialize(params);

    Stage1Grads grads;
    grads.setZero(model);
    std::vector<TensorRef> grad_refs;
    grad_refs.push_back(tensor_ref(grads.entities));
    if (model.kind == Stage1Kind::Rotate) {
        grad_refs.push_back(tensor_ref(grads.rel_phases));
    } else {
        grad_refs.push_back(tensor_ref(grads.relations));
    }

    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    const int batch = std::max(1, config.batch_size);
    std::vector<int> negatives;
    negatives.reserve(static_cast<size_t>(std::max(0, config.negatives_per_positive)));

    auto sample_negatives = [&](int gold) {
        negatives.clear();
        if (kb.num_entities() < 2) return;
        for (int i = 0; i < config.negatives_per_positive; ++i) {
            int e = entity_dist(rng);
            while (e == gold) e = entity_dist(rng);
            negatives.push_back(e);
        }
    };

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        long epoch_examples = 0;
        size_t cursor = 0;
        while (cursor < order.size()) {
            const size_t end = std::min(cursor + static_cast<size_t>(batch), order.size());
            double batch_loss = 0.0;
            int batch_examples = 0;
            for (size_t idx = cursor; idx < end; ++idx) {
                const Triple& t = train[order[idx]];
                for (Direction dir : {Direction::Tail, Direction::Head}) {
                    Query q;
                    q.r = t.r;
                    q.direction = dir;
                    q.known = dir == Direction::Tail ? t.s : t.o;
                    q.gold = dir == Direction::Tail ? t.o : t.s;
                    sample_negatives(q.gold);
                    batch_loss += stage1_example_loss(model, q, negatives,
                                                      config.regularization, &grads);
                    ++batch_examples;
                }
            }
            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error("stage1 training diverged: non-finite loss");
            }
            // Mean loss over the batch; gradients are scaled to match.
            const double scale = 1.0 / static_cast<double>(batch_examples);
            grads.entities *= scale;
            if (model.kind == Stage1Kind::Rotate) {
                grads.rel_phases *= scale;
            } else {
                grads.relations *= scale;
            }
            adam.step(params, grad_refs);
            grads.setZero(model);

            epoch_loss += batch_loss;
            epoch_examples += batch_examples;
            cursor = end;
        }
        if (epoch_losses != nullptr) {
            epoch_losses->push_back(epoch_loss / static_cast<double>(epoch_examples));
        }
    }
    return model;
}

Eigen::VectorXd score_all_entities(const Stage1Model& model, int known, int r, Direction dir) {
    const Eigen::VectorXcd known_vec = model.entities.row(known);
    if (model.kind == Stage1Kind::Complex) {
        const Eigen::VectorXcd w_r = model.relations.row(r);
        if (dir == Direction::Tail) {
            // score(o) = Re(sum_i s_i r_i conj(o_i))
            const Eigen::VectorXcd p = known_vec.cwiseProduct(w_r);
            return (model.entities.conjugate() * p).real();
        }
        // score(s) = Re(sum_i s_i q_i), q = r o conj(o)
        const Eigen::VectorXcd q = w_r.cwiseProduct(known_vec.conjugate());
        return (model.entities * q).real();
    }

    // RotatE: distances to a fixed target vector.
    const int d = model.dim();
    Eigen::VectorXcd w(d);
    for (int i = 0; i < d; ++i) w[i] = unit_phase(model.rel_phases(r, i));
    Eigen::VectorXcd target;
    if (dir == Direction::Tail) {
        target = known_vec.cwiseProduct(w);  // ||s o w - o||
    } else {
        target = known_vec.cwiseProduct(w.conjugate());  // ||s - o o conj(w)||
    }
    return model.gamma -
           (model.entities.rowwise() - target.transpose()).rowwise().norm().array();
}

CandidateSet topk_candidates(const Stage1Model& model, const Query& query, int k,
                             const FilterIndex* filter) {
    if (k < 1) throw std::invalid_argument("topk_candidates: k must be >= 1");
    const Eigen::VectorXd scores = score_all_entities(model, query);

    std::vector<int> eligible;
    eligible.reserve(static_cast<size_t>(scores.size()));
    for (int e = 0; e < scores.size(); ++e) {
        if (filter != nullptr && e != query.gold &&
            filter->contains(query.known, query.r, query.direction, e)) {
            continue;
        }
        eligible.push_back(e);
    }

    const auto better = [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    const size_t take = std::min(static_cast<size_t>(k), eligible.size());
    std::partial_sort(eligible.begin(), eligible.begin() + static_cast<long>(take),
                      eligible.end(), better);
    eligible.resize(take);

    CandidateSet set;
    set.query = query;
    set.entity_ids = std::move(eligible);
    set.scores.reserve(take);
    for (int e : set.entity_ids) set.scores.push_back(scores[e]);
    return set;
}

void save_stage1(const Stage1Model& model, const std::string& path) {
    BinaryWriter w(path);
    w.magic(kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.u32(model.kind == Stage1Kind::Rotate ? 1u : 0u);
    w.u32(static_cast<uint32_t>(model.dim()));
    w.u32(static_cast<uint32_t>(model.num_entities()));
    w.u32(static_cast<uint32_t>(model.num_relations()));
    w.u64(model.seed);
    w.f64(model.gamma);
    w.matrix(model.entities);
    if (model.kind == Stage1Kind::Rotate) {
        w.matrix(model.rel_phases);
    } else {
        w.matrix(model.relations);
    }
}

Stage1Model load_stage1(const std::string& path) {
    BinaryReader r(path);
    r.expect_magic(kCheckpointMagic);
    const uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw std::runtime_error(path + ": unsupported stage-1 checkpoint version " +
                                 std::to_string(version));
    }
    Stage1Model model;
    model.kind = r.u32() == 1u ? Stage1Kind::Rotate : Stage1Kind::Complex;
    const uint32_t dim = r.u32();
    const uint32_t num_entities = r.u32();
    const uint32_t num_relations = r.u32();
    model.seed = r.u64();
    model.gamma = r.f64();
    model.entities = r.matrix<Eigen::MatrixXcd>();
    if (model.kind == Stage1Kind::Rotate) {
        model.rel_phases = r.matrix<Eigen::MatrixXd>();
    } else {
        model.relations = r.matrix<Eigen::MatrixXcd>();
    }
    if (model.entities.rows() != num_entities || model.entities.cols() != dim ||
        static_cast<uint32_t>(model.num_relations()) != num_relations) {
        throw std::runtime_error(path + ": checkpoint header/payload mismatch");
    }
    return model;
}

void export_candidates(const KnowledgeBase& kb, const std::vector<CandidateSet>& sets,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (const CandidateSet& set : sets) {
        nlohmann::ordered_json j;
        j["known"] = kb.entity_id_string(set.query.known);
        j["relation"] = kb.relation_id_string(set.query.r);
        j["direction"] = to_string(set.query.direction);
        j["gold"] = kb.entity_id_string(set.query.gold);
        nlohmann::ordered_json ids = nlohmann::ordered_json::array();
        for (int e : set.entity_ids) ids.push_back(kb.entity_id_string(e));
        j["candidates"] = std::move(ids);
        j["scores"] = set.scores;
        out << j.dump() << '\n';
    }
}

std::vector<CandidateSet> import_candidates(const KnowledgeBase& kb, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<CandidateSet> sets;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& what) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(std::string("invalid JSON: ") + e.what());
        }
        auto entity = [&](const std::string& id) {
            auto e = kb.find_entity(id);
            if (!e) fail("unknown entity id " + id);
            return *e;
        };
        CandidateSet set;
        set.query.known = entity(j.at("known").get<std::string>());
        const std::string rel = j.at("relation").get<std::string>();
        auto r = kb.find_relation(rel);
        if (!r) fail("unknown relation id " + rel);
        set.query.r = *r;
        const std::string dir = j.at("direction").get<std::string>();
        if (dir == "head") {
            set.query.direction = Direction::Head;
        } else if (dir == "tail") {
            set.query.direction = Direction::Tail;
        } else {
            fail("invalid direction \"" + dir + "\"");
        }
        set.query.gold = entity(j.at("gold").get<std::string>());
        for (const auto& id : j.at("candidates")) {
            set.entity_ids.push_back(entity(id.get<std::string>()));
        }
        set.scores = j.at("scores").get<std::vector<double>>();
        if (set.scores.size() != set.entity_ids.size()) {
            fail("candidates/scores length mismatch");
        }
        sets.push_back(std::move(set));
    }
    return sets;
}

}  // namespace kbc
