#include "bhlr/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "bhlr/errors.hpp"

namespace bhlr {

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw LengthMismatch("roc_auc: scores and labels differ in length");
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw DomainError("roc_auc: labels must be 0 or 1");
    pos += static_cast<std::size_t>(l);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw SingleClass("roc_auc needs both positive and negative labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of (1-based, tie-averaged) ranks of the positives, kept doubled so
  // every quantity stays an exact integer.
  std::size_t rank_sum2 = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t pos_in_group = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) pos_in_group += static_cast<std::size_t>(labels[order[j++]]);
    rank_sum2 += pos_in_group * (i + 1 + j);
    i = j;
  }
  const double u2 = static_cast<double>(rank_sum2) - static_cast<double>(pos) * static_cast<double>(pos + 1);
  return u2 / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double mse(std::span<const double> predicted, std::span<const double> observed) {
  if (predicted.size() != observed.size()) throw LengthMismatch("mse: inputs differ in length");
  if (predicted.empty()) throw LengthMismatch("mse: empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double d = predicted[i] - observed[i];
    s += d * d;
  }
  return s / static_cast<double>(predicted.size());
}

std::vector<double> score_tuples(const SimilarityModel& model, const Hypernetwork& net,
                                 std::span<const HyperIndex> indices) {
  SimilarityEvaluator ev(model);
  std::vector<std::span<const double>> rows;
  std::vector<double> out;
  out.reserve(indices.size());
  for (const auto& idx : indices) {
    net.fill_rows(idx, rows);
    out.push_back(ev.forward(rows));
  }
  return out;
}

}  // namespace bhlr
