#pragma once

#include <span>
#include <vector>

#include "gsmote/graph.hpp"

namespace gsmote {

struct ClassReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;
  bool auc_defined = false;  // false when the class has no positive or no negative in the mask
};

struct EvalReport {
  double accuracy = 0.0;
  double macro_auc = 0.0;
  double macro_f = 0.0;
  std::vector<ClassReport> per_class;
  std::vector<int> auc_skipped_classes;
};

/// Row-wise argmax, lowest index on ties.
std::vector<int> argmax_rows(const Matrix& probs);

double accuracy(std::span<const int> predicted, std::span<const int> truth, std::span<const NodeIndex> mask);

/// Exact one-vs-rest AUC per class (ties count 1/2), averaged with equal
/// weight over classes that have both positives and negatives in the mask.
/// Classes without are listed in `skipped` when given.
double macro_auc_roc(const Matrix& probs, std::span<const int> truth, std::span<const NodeIndex> mask,
                     std::vector<int>* skipped = nullptr, std::vector<double>* per_class = nullptr);

/// Mean per-class F1 over m classes; a class with P + R = 0 contributes 0.
double macro_f1(std::span<const int> predicted, std::span<const int> truth, std::span<const NodeIndex> mask,
                int m);

EvalReport evaluate(const Matrix& probs, std::span<const int> truth, std::span<const NodeIndex> mask);

}  // namespace gsmote
