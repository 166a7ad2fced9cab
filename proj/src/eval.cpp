#include "kbc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace kbc {

double filtered_rank(const std::vector<int>& entity_ids, const Eigen::VectorXd& scores,
                     int gold, const std::vector<int>& filter_set, TiePolicy policy) {
    if (static_cast<Eigen::Index>(entity_ids.size()) != scores.size()) {
        throw std::invalid_argument("filtered_rank: ids/scores length mismatch");
    }
    double gold_score = 0.0;
    bool found = false;
    for (size_t i = 0; i < entity_ids.size(); ++i) {
        if (entity_ids[i] == gold) {
            gold_score = scores[static_cast<Eigen::Index>(i)];
            found = true;
            break;
        }
    }
    if (!found) return kMissRank;

    auto filtered = [&](int e) {
        return e != gold && std::binary_search(filter_set.begin(), filter_set.end(), e);
    };

    long above = 0;
    long tied = 0;
    for (size_t i = 0; i < entity_ids.size(); ++i) {
        const int e = entity_ids[i];
        if (e == gold || filtered(e)) continue;
        const double s = scores[static_cast<Eigen::Index>(i)];
        if (s > gold_score) {
            ++above;
        } else if (s == gold_score) {
            ++tied;
        }
    }
    double rank = 1.0 + static_cast<double>(above);
    if (policy == TiePolicy::Average) rank += 0.5 * static_cast<double>(tied);
    return rank;
}

namespace {

MetricBlock block_from_ranks(const std::vector<double>& ranks) {
    MetricBlock block;
    block.n_queries = static_cast<long>(ranks.size());
    if (ranks.empty()) {
        for (int n : hits_levels()) block.hits[n] = 0.0;
        return block;
    }
    double rr_sum = 0.0;
    std::map<int, long> hit_counts;
    for (int n : hits_levels()) hit_counts[n] = 0;
    for (double rank : ranks) {
        if (std::isfinite(rank)) {
            rr_sum += 1.0 / rank;
            for (int n : hits_levels()) {
                if (rank <= static_cast<double>(n)) ++hit_counts[n];
            }
        }
    }
    block.mrr = rr_sum / static_cast<double>(ranks.size());
    for (int n : hits_levels()) {
        block.hits[n] = 100.0 * static_cast<double>(hit_counts[n]) /
                        static_cast<double>(ranks.size());
    }
    return block;
}

}  // namespace

EvalReport compute_metrics(const std::vector<QueryRank>& ranks) {
    if (ranks.empty()) throw std::invalid_argument("compute_metrics: empty rank list");

    std::vector<double> head, tail;
    for (const QueryRank& qr : ranks) {
        (qr.direction == Direction::Head ? head : tail).push_back(qr.rank);
    }

    EvalReport report;
    report.head = block_from_ranks(head);
    report.tail = block_from_ranks(tail);

    // Overall is the average of head and tail prediction; with one side empty
    // it degenerates to the other.
    if (head.empty() || tail.empty()) {
        report.overall = head.empty() ? report.tail : report.head;
        report.overall.n_queries = static_cast<long>(ranks.size());
        return report;
    }
    report.overall.mrr = 0.5 * (report.head.mrr + report.tail.mrr);
    for (int n : hits_levels()) {
        report.overall.hits[n] = 0.5 * (report.head.hits.at(n) + report.tail.hits.at(n));
    }
    report.overall.n_queries = static_cast<long>(ranks.size());
    return report;
}

std::string report_table(const EvalReport& report, const std::string& label) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << label << "\tMRR\tH1\tH10\tH50\tN\n";
    auto row = [&](const char* name, const MetricBlock& b) {
        out << name << '\t' << b.mrr << '\t' << std::setprecision(2) << b.hits.at(1) << '\t'
            << b.hits.at(10) << '\t' << b.hits.at(50) << std::setprecision(4) << '\t'
            << b.n_queries << '\n';
    };
    row("overall", report.overall);
    row("head", report.head);
    row("tail", report.tail);
    return out.str();
}

namespace {

nlohmann::ordered_json block_json(const MetricBlock& b) {
    nlohmann::ordered_json hits;
    for (int n : hits_levels()) hits[std::to_string(n)] = b.hits.at(n);
    return {{"mrr", b.mrr}, {"hits", hits}, {"n_queries", b.n_queries}};
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j = block_json(report.overall);
    j["head"] = block_json(report.head);
    j["tail"] = block_json(report.tail);
    return j.dump();
}

ConfusionCounts confusion_matrix(const std::vector<int>& stage1_top1,
                                 const std::vector<int>& stage2_top1,
                                 const std::vector<int>& golds) {
    if (stage1_top1.size() != golds.size() || stage2_top1.size() != golds.size()) {
        throw std::invalid_argument("confusion_matrix: prediction/gold length mismatch");
    }
    ConfusionCounts counts;
    for (size_t i = 0; i < golds.size(); ++i) {
        const bool s1 = stage1_top1[i] == golds[i];
        const bool s2 = stage2_top1[i] == golds[i];
        if (s1 && s2) {
            ++counts.c11;
        } else if (s1) {
            ++counts.c10;
        } else if (s2) {
            ++counts.c01;
        } else {
            ++counts.c00;
        }
    }
    return counts;
}

double degradation_rate(const ConfusionCounts& counts) {
    const long total = counts.total();
    if (total == 0) throw std::invalid_argument("degradation_rate: zero total");
    return 100.0 * static_cast<double>(counts.c10) / static_cast<double>(total);
}

std::vector<long> rank_histogram(const std::vector<int>& stage1_rank_of_predicted, int k) {
    if (k < 1) throw std::invalid_argument("rank_histogram: k must be >= 1");
    std::vector<long> bins(static_cast<size_t>(k), 0);
    for (int rank : stage1_rank_of_predicted) {
        if (rank < 1 || rank > k) {
            throw std::out_of_range("rank_histogram: rank " + std::to_string(rank) +
                                    " outside 1.." + std::to_string(k));
        }
        ++bins[static_cast<size_t>(rank - 1)];
    }
    return bins;
}

}  // namespace kbc
