#include "gsmote/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace gsmote {

std::vector<int> argmax_rows(const Matrix& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index v = 0; v < probs.rows(); ++v) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probs.cols(); ++c) {
      if (probs(v, c) > probs(v, best)) best = c;
    }
    out[static_cast<std::size_t>(v)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth, std::span<const NodeIndex> mask) {
  if (mask.empty()) throw std::invalid_argument("accuracy: empty mask");
  std::size_t correct = 0;
  for (const NodeIndex v : mask) {
    correct += predicted[static_cast<std::size_t>(v)] == truth[static_cast<std::size_t>(v)] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(mask.size());
}

namespace {

// Mann-Whitney statistic via sorted scores with midranks for ties.
double class_auc(const std::vector<std::pair<double, bool>>& scored, std::size_t positives) {
  const std::size_t negatives = scored.size() - positives;
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < scored.size()) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (scored[k].second) rank_sum += midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

}  // namespace

double macro_auc_roc(const Matrix& probs, std::span<const int> truth, std::span<const NodeIndex> mask,
                     std::vector<int>* skipped, std::vector<double>* per_class) {
  if (mask.empty()) throw std::invalid_argument("macro_auc_roc: empty mask");
  const Eigen::Index m = probs.cols();
  if (per_class) per_class->assign(static_cast<std::size_t>(m), 0.0);
  double total = 0.0;
  int used = 0;
  std::vector<std::pair<double, bool>> scored(mask.size());
  for (Eigen::Index c = 0; c < m; ++c) {
    std::size_t positives = 0;
    for (std::size_t k = 0; k < mask.size(); ++k) {
      const bool pos = truth[static_cast<std::size_t>(mask[k])] == c;
      scored[k] = {probs(mask[k], c), pos};
      positives += pos ? 1 : 0;
    }
    if (positives == 0 || positives == mask.size()) {
      if (skipped) skipped->push_back(static_cast<int>(c));
      continue;
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    const double auc = class_auc(scored, positives);
    if (per_class) (*per_class)[static_cast<std::size_t>(c)] = auc;
    total += auc;
    ++used;
  }
  if (used == 0) throw std::invalid_argument("macro_auc_roc: no class has both positives and negatives");
  return total / used;
}

namespace {

std::vector<ClassReport> prf(std::span<const int> predicted, std::span<const int> truth,
                             std::span<const NodeIndex> mask, int m) {
  std::vector<std::size_t> tp(static_cast<std::size_t>(m)), fp(tp), fn(tp);
  for (const NodeIndex v : mask) {
    const int p = predicted[static_cast<std::size_t>(v)];
    const int t = truth[static_cast<std::size_t>(v)];
    if (p == t) {
      ++tp[static_cast<std::size_t>(t)];
    } else {
      if (p >= 0 && p < m) ++fp[static_cast<std::size_t>(p)];
      if (t >= 0 && t < m) ++fn[static_cast<std::size_t>(t)];
    }
  }
  std::vector<ClassReport> out(static_cast<std::size_t>(m));
  for (std::size_t c = 0; c < out.size(); ++c) {
    const double t = static_cast<double>(tp[c]);
    out[c].precision = tp[c] + fp[c] > 0 ? t / static_cast<double>(tp[c] + fp[c]) : 0.0;
    out[c].recall = tp[c] + fn[c] > 0 ? t / static_cast<double>(tp[c] + fn[c]) : 0.0;
    const double s = out[c].precision + out[c].recall;
    out[c].f1 = s > 0.0 ? 2.0 * out[c].precision * out[c].recall / s : 0.0;
  }
  return out;
}

}  // namespace

double macro_f1(std::span<const int> predicted, std::span<const int> truth, std::span<const NodeIndex> mask,
                int m) {
  if (mask.empty()) throw std::invalid_argument("macro_f1: empty mask");
  const auto reports = prf(predicted, truth, mask, m);
  double total = 0.0;
  for (const auto& r : reports) total += r.f1;
  return total / m;
}

EvalReport evaluate(const Matrix& probs, std::span<const int> truth, std::span<const NodeIndex> mask) {
  EvalReport report;
  const int m = static_cast<int>(probs.cols());
  const auto predicted = argmax_rows(probs);
  report.accuracy = accuracy(predicted, truth, mask);
  std::vector<double> auc;
  report.macro_auc = macro_auc_roc(probs, truth, mask, &report.auc_skipped_classes, &auc);
  report.per_class = prf(predicted, truth, mask, m);
  for (int c = 0; c < m; ++c) {
    report.per_class[static_cast<std::size_t>(c)].auc = auc[static_cast<std::size_t>(c)];
    report.per_class[static_cast<std::size_t>(c)].auc_defined =
        std::find(report.auc_skipped_classes.begin(), report.auc_skipped_classes.end(), c) ==
        report.auc_skipped_classes.end();
  }
  double f = 0.0;
  for (const auto& r : report.per_class) f += r.f1;
  report.macro_f = f / m;
  return report;
}

}  // namespace gsmote
