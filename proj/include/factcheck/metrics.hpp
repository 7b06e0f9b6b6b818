#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "factcheck/checker.hpp"
#include "factcheck/core.hpp"

namespace factcheck::metrics {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;

  std::size_t positives() const { return tp + fn; }
  std::size_t negatives() const { return tn + fp; }
  bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion(std::span<const SupportLabel> predictions, std::span<const SupportLabel> gold);

/// ½(TP/(TP+FN) + TN/(TN+FP)). Throws DataError when a gold class is absent.
double bacc(const ConfusionCounts& c);
double bacc(std::span<const SupportLabel> predictions, std::span<const SupportLabel> gold);

struct ScoredItem {
  double score = 0.0;
  SupportLabel gold = SupportLabel::unsupported;
};

struct TunedThreshold {
  double threshold = 0.0;
  double bacc = 0.0;
};

/// Candidate thresholds are the range endpoints and midpoints between consecutive distinct
/// scores; the best BAcc wins with ties going to the smallest threshold.
TunedThreshold tune_threshold(std::span<const ScoredItem> items, const checker::ScoreRange& range);

/// BAcc of `score > t` predictions.
double bacc_at(std::span<const ScoredItem> items, double threshold);

/// Resample index stream: `runs` draws of n indices with replacement. Draws where gold lacks a
/// class are redrawn from the same generator, so the stream depends only on (n, gold, runs, seed).
std::vector<std::vector<std::size_t>> bootstrap_indices(std::span<const SupportLabel> gold, std::size_t runs,
                                                        std::uint64_t seed);

struct BootstrapResult {
  std::size_t runs = 0;
  double p_value = 1.0;
  bool significant = false;
};

/// p = fraction of resamples where BAcc(challenger) >= BAcc(champion); significant when p < alpha.
BootstrapResult paired_bootstrap(std::span<const SupportLabel> champion, std::span<const SupportLabel> challenger,
                                 std::span<const SupportLabel> gold, std::size_t runs, std::uint64_t seed,
                                 double alpha = 0.05);

/// Same statistic over an explicit index stream.
BootstrapResult paired_bootstrap_on(const std::vector<std::vector<std::size_t>>& stream,
                                    std::span<const SupportLabel> champion,
                                    std::span<const SupportLabel> challenger, std::span<const SupportLabel> gold,
                                    double alpha = 0.05);

/// Fleiss' kappa over an items x raters matrix of category ids. Returns 1.0 (with a warning)
/// when expected agreement is 1.
double fleiss_kappa(const std::vector<std::vector<int>>& ratings);

}  // namespace factcheck::metrics
