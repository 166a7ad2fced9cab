#pragma once
// Stage-1 embedding models: ComplEx and RotatE scoring, negative-sampling
// training, top-k candidate generation and candidate-file import/export.

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kbc/kb.hpp"

namespace kbc {

enum class Stage1Kind { Complex, Rotate };

// Re(<e_s, w_r, conj(e_o)>), summed coordinate-wise.
template <typename DS, typename DR, typename DO>
double complex_score(const Eigen::MatrixBase<DS>& e_s, const Eigen::MatrixBase<DR>& w_r,
                     const Eigen::MatrixBase<DO>& e_o) {
    if (e_s.size() != w_r.size() || e_s.size() != e_o.size()) {
        throw std::invalid_argument("complex_score: dimension mismatch");
    }
    return (e_s.array() * w_r.array() * e_o.array().conjugate()).sum().real();
}

// gamma - ||e_s o e^{i phase} - e_o||_2. Equals gamma exactly when the
// rotated subject coincides with the object.
template <typename DS, typename DP, typename DO>
double rotate_score(const Eigen::MatrixBase<DS>& e_s, const Eigen::MatrixBase<DP>& phases,
                    const Eigen::MatrixBase<DO>& e_o, double gamma) {
    if (e_s.size() != phases.size() || e_s.size() != e_o.size()) {
        throw std::invalid_argument("rotate_score: dimension mismatch");
    }
    const auto rotation =
        (std::complex<double>(0.0, 1.0) * phases.template cast<std::complex<double>>().array())
            .exp();
    return gamma - ((e_s.array() * rotation) - e_o.array()).matrix().norm();
}

struct Stage1Config {
    Stage1Kind kind = Stage1Kind::Complex;
    int dim = 32;                    // complex coordinates per embedding
    int epochs = 100;
    double lr = 1e-3;
    int negatives_per_positive = 4;
    double regularization = 0.0;     // N3 weight (ComplEx only)
    double gamma = 12.0;             // RotatE margin
    int batch_size = 128;
    uint64_t seed = 1;
};

struct Stage1Model {
    Stage1Kind kind = Stage1Kind::Complex;
    Eigen::MatrixXcd entities;    // |E| x d
    Eigen::MatrixXcd relations;   // |R| x d (ComplEx parameters)
    Eigen::MatrixXd rel_phases;   // |R| x d (RotatE parameters)
    double gamma = 0.0;
    uint64_t seed = 0;

    int dim() const { return static_cast<int>(entities.cols()); }
    int num_entities() const { return static_cast<int>(entities.rows()); }
    int num_relations() const {
        return static_cast<int>(kind == Stage1Kind::Rotate ? rel_phases.rows()
                                                           : relations.rows());
    }

    // Relation embedding as complex coordinates; unit modulus for RotatE.
    Eigen::VectorXcd relation_vector(int r) const;
};

struct CandidateSet {
    Query query;
    std::vector<int> entity_ids;  // distinct, ordered by decreasing score
    std::vector<double> scores;   // non-increasing when produced by top-k
};

Stage1Model init_stage1(const KnowledgeBase& kb, const Stage1Config& config);

// Deterministic given the seed. Logs per-epoch mean loss through `log` when
// non-null; throws on non-finite loss.
Stage1Model train_stage1(const KnowledgeBase& kb, const Stage1Config& config,
                         std::vector<double>* epoch_losses = nullptr);

// Scores every entity as the completion of the query's missing slot.
Eigen::VectorXd score_all_entities(const Stage1Model& model, int known, int r, Direction dir);

inline Eigen::VectorXd score_all_entities(const Stage1Model& model, const Query& q) {
    return score_all_entities(model, q.known, q.r, q.direction);
}

// k highest-scoring entities (ties broken by ascending entity id). When a
// filter index is given, known-true entities other than the gold are excluded
// before ranking.
CandidateSet topk_candidates(const Stage1Model& model, const Query& query, int k,
                             const FilterIndex* filter = nullptr);

// Dense gradient buffers matching the model parameterization.
struct Stage1Grads {
    Eigen::MatrixXcd entities;
    Eigen::MatrixXcd relations;
    Eigen::MatrixXd rel_phases;

    void setZero(const Stage1Model& model);
};

// Binary cross-entropy of one positive completion against the sampled
// negatives (plus optional N3 term for ComplEx). Accumulates analytic
// gradients into `grads` when non-null; returns the loss.
double stage1_example_loss(const Stage1Model& model, const Query& query,
                           const std::vector<int>& negatives, double regularization,
                           Stage1Grads* grads);

void save_stage1(const Stage1Model& model, const std::string& path);
Stage1Model load_stage1(const std::string& path);

// JSON-lines candidate files; one record per query. Ids are resolved against
// the KB and order is preserved exactly.
void export_candidates(const KnowledgeBase& kb, const std::vector<CandidateSet>& sets,
                       const std::string& path);
std::vector<CandidateSet> import_candidates(const KnowledgeBase& kb, const std::string& path);

}  // namespace kbc
