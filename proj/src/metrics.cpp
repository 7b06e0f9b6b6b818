#include "factcheck/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "factcheck/errors.hpp"
#include "factcheck/random.hpp"

namespace factcheck::metrics {

ConfusionCounts confusion(std::span<const SupportLabel> predictions, std::span<const SupportLabel> gold) {
  if (predictions.size() != gold.size())
    throw DataError("prediction/gold length mismatch: " + std::to_string(predictions.size()) + " vs " +
                    std::to_string(gold.size()));
  ConfusionCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    bool p = is_supported(predictions[i]);
    if (is_supported(gold[i]))
      (p ? c.tp : c.fn)++;
    else
      (p ? c.fp : c.tn)++;
  }
  return c;
}

double bacc(const ConfusionCounts& c) {
  if (c.positives() == 0) throw DataError("BAcc undefined: no gold 'supported' items");
  if (c.negatives() == 0) throw DataError("BAcc undefined: no gold 'unsupported' items");
  return 0.5 * (static_cast<double>(c.tp) / static_cast<double>(c.positives()) +
                static_cast<double>(c.tn) / static_cast<double>(c.negatives()));
}

double bacc(std::span<const SupportLabel> predictions, std::span<const SupportLabel> gold) {
  return bacc(confusion(predictions, gold));
}

namespace {

// BAcc scaled by P*N; exact for comparing two confusions over the same gold.
std::uint64_t scaled_bacc(const ConfusionCounts& c) {
  return static_cast<std::uint64_t>(c.tp) * c.negatives() + static_cast<std::uint64_t>(c.tn) * c.positives();
}

}  // namespace

double bacc_at(std::span<const ScoredItem> items, double threshold) {
  ConfusionCounts c;
  for (const auto& it : items) {
    bool p = it.score > threshold;
    if (is_supported(it.gold))
      (p ? c.tp : c.fn)++;
    else
      (p ? c.fp : c.tn)++;
  }
  return bacc(c);
}

TunedThreshold tune_threshold(std::span<const ScoredItem> items, const checker::ScoreRange& range) {
  std::vector<double> pos, neg;
  for (const auto& it : items) (is_supported(it.gold) ? pos : neg).push_back(it.score);
  if (pos.empty() || neg.empty()) throw DataError("threshold tuning needs both gold classes");
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  std::vector<double> scores;
  scores.reserve(items.size());
  for (const auto& it : items) scores.push_back(it.score);
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());

  std::vector<double> candidates{range.min, range.max};
  for (std::size_t i = 1; i < scores.size(); ++i) candidates.push_back(scores[i - 1] + (scores[i] - scores[i - 1]) / 2);
  std::sort(candidates.begin(), candidates.end());

  auto above = [](const std::vector<double>& v, double t) {
    return static_cast<std::size_t>(v.end() - std::upper_bound(v.begin(), v.end(), t));
  };
  std::optional<std::pair<std::uint64_t, double>> best;
  ConfusionCounts best_counts;
  for (double t : candidates) {
    ConfusionCounts c;
    c.tp = above(pos, t);
    c.fn = pos.size() - c.tp;
    c.fp = above(neg, t);
    c.tn = neg.size() - c.fp;
    auto s = scaled_bacc(c);
    if (!best || s > best->first) {
      best = {s, t};
      best_counts = c;
    }
  }
  return {best->second, bacc(best_counts)};
}

std::vector<std::vector<std::size_t>> bootstrap_indices(std::span<const SupportLabel> gold, std::size_t runs,
                                                        std::uint64_t seed) {
  const std::size_t n = gold.size();
  if (n == 0) throw DataError("bootstrap over an empty evaluation set");
  if (runs == 0) throw UsageError("bootstrap needs at least one run");
  bool has_pos = std::any_of(gold.begin(), gold.end(), is_supported);
  bool has_neg = !std::all_of(gold.begin(), gold.end(), is_supported);
  if (!has_pos || !has_neg) throw DataError("bootstrap needs both gold classes");

  SeededRng rng(seed);
  std::vector<std::vector<std::size_t>> stream;
  stream.reserve(runs);
  std::vector<std::size_t> draw(n);
  while (stream.size() < runs) {
    bool pos = false, neg = false;
    for (auto& d : draw) {
      d = rng.below(n);
      (is_supported(gold[d]) ? pos : neg) = true;
    }
    if (pos && neg) stream.push_back(draw);
  }
  return stream;
}

BootstrapResult paired_bootstrap_on(const std::vector<std::vector<std::size_t>>& stream,
                                    std::span<const SupportLabel> champion,
                                    std::span<const SupportLabel> challenger, std::span<const SupportLabel> gold,
                                    double alpha) {
  if (champion.size() != gold.size() || challenger.size() != gold.size())
    throw DataError("bootstrap: prediction vectors and gold differ in length");
  if (stream.empty()) throw UsageError("bootstrap needs at least one run");
  std::size_t wins = 0;
  for (const auto& sample : stream) {
    ConfusionCounts a, b;
    for (auto i : sample) {
      if (i >= gold.size()) throw UsageError("bootstrap index out of range");
      bool g = is_supported(gold[i]);
      bool pa = is_supported(champion[i]);
      bool pb = is_supported(challenger[i]);
      if (g) {
        (pa ? a.tp : a.fn)++;
        (pb ? b.tp : b.fn)++;
      } else {
        (pa ? a.fp : a.tn)++;
        (pb ? b.fp : b.tn)++;
      }
    }
    if (a.positives() == 0 || a.negatives() == 0) throw DataError("bootstrap resample lacks a gold class");
    if (scaled_bacc(b) >= scaled_bacc(a)) ++wins;
  }
  BootstrapResult r;
  r.runs = stream.size();
  r.p_value = static_cast<double>(wins) / static_cast<double>(stream.size());
  r.significant = r.p_value < alpha;
  return r;
}

BootstrapResult paired_bootstrap(std::span<const SupportLabel> champion, std::span<const SupportLabel> challenger,
                                 std::span<const SupportLabel> gold, std::size_t runs, std::uint64_t seed,
                                 double alpha) {
  if (champion.size() != gold.size() || challenger.size() != gold.size())
    throw DataError("bootstrap: prediction vectors and gold differ in length");
  return paired_bootstrap_on(bootstrap_indices(gold, runs, seed), champion, challenger, gold, alpha);
}

double fleiss_kappa(const std::vector<std::vector<int>>& ratings) {
  if (ratings.empty()) throw DataError("Fleiss' kappa needs at least one item");
  const std::size_t raters = ratings.front().size();
  if (raters < 2) throw DataError("Fleiss' kappa needs at least two raters");
  std::vector<int> categories;
  for (const auto& row : ratings) {
    if (row.size() != raters) throw DataError("Fleiss' kappa: every item needs the same number of ratings");
    categories.insert(categories.end(), row.begin(), row.end());
  }
  std::sort(categories.begin(), categories.end());
  categories.erase(std::unique(categories.begin(), categories.end()), categories.end());

  const double n = static_cast<double>(raters);
  const double items = static_cast<double>(ratings.size());
  std::vector<double> totals(categories.size(), 0.0);
  double p_bar = 0.0;
  for (const auto& row : ratings) {
    double agree = 0.0;
    for (std::size_t c = 0; c < categories.size(); ++c) {
      double count = static_cast<double>(std::count(row.begin(), row.end(), categories[c]));
      totals[c] += count;
      agree += count * count;
    }
    p_bar += (agree - n) / (n * (n - 1.0));
  }
  p_bar /= items;
  double p_e = 0.0;
  for (double t : totals) {
    double p = t / (items * n);
    p_e += p * p;
  }
  if (std::abs(1.0 - p_e) < 1e-15) {
    spdlog::warn("Fleiss' kappa: every rating is the same category; returning 1.0");
    return 1.0;
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

}  // namespace factcheck::metrics
