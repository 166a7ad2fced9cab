#pragma once
// Filtered ranking evaluation: MRR / HITS@N, head-tail split, the
// stage-1-vs-stage-2 confusion matrix and rank histograms.

#include <Eigen/Dense>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "kbc/kb.hpp"

namespace kbc {

// Rank of a query that missed the candidate list entirely.
inline constexpr double kMissRank = std::numeric_limits<double>::infinity();

enum class TiePolicy {
    Optimistic,  // equal scores do not worsen the gold rank
    Average,     // each tie adds 0.5 to the rank
};

// Rank of `gold` among the scored entities, ignoring filtered known-true
// entities other than gold. Entities absent from `entity_ids` are treated as
// unranked; if gold itself is absent the miss sentinel is returned.
double filtered_rank(const std::vector<int>& entity_ids, const Eigen::VectorXd& scores,
                     int gold, const std::vector<int>& filter_set,
                     TiePolicy policy = TiePolicy::Optimistic);

struct QueryRank {
    Direction direction = Direction::Tail;
    double rank = kMissRank;
};

struct MetricBlock {
    double mrr = 0.0;
    std::map<int, double> hits;  // N -> percentage, N in {1,10,50}
    long n_queries = 0;
};

struct EvalReport {
    MetricBlock overall;  // average of the head and tail blocks
    MetricBlock head;
    MetricBlock tail;
};

inline const std::vector<int>& hits_levels() {
    static const std::vector<int> levels = {1, 10, 50};
    return levels;
}

// MRR = mean(1/rank), HITS@N = 100 * fraction(rank <= N). Misses contribute
// zero everywhere. Throws on empty input.
EvalReport compute_metrics(const std::vector<QueryRank>& ranks);

std::string report_table(const EvalReport& report, const std::string& label);
std::string report_to_json(const EvalReport& report);

// Case xy: x = stage-1 top-1 correct, y = stage-2 top-1 correct.
struct ConfusionCounts {
    long c00 = 0;
    long c01 = 0;
    long c10 = 0;
    long c11 = 0;

    long total() const { return c00 + c01 + c10 + c11; }
};

ConfusionCounts confusion_matrix(const std::vector<int>& stage1_top1,
                                 const std::vector<int>& stage2_top1,
                                 const std::vector<int>& golds);

// 100 * c10 / total: fraction of queries stage-2 degraded.
double degradation_rate(const ConfusionCounts& counts);

// Histogram over 1..k of the stage-1 rank of the stage-2-predicted entity.
// Throws if any rank falls outside 1..k.
std::vector<long> rank_histogram(const std::vector<int>& stage1_rank_of_predicted, int k);

}  // namespace kbc
