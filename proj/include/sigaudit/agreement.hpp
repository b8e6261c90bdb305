#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sigaudit/significance.hpp"

namespace sigaudit {

enum class PairLabel { TP, FN, TN, FP };

[[nodiscard]] constexpr PairLabel label_for(bool gold_significant, bool alt_significant) noexcept {
  if (gold_significant) return alt_significant ? PairLabel::TP : PairLabel::FN;
  return alt_significant ? PairLabel::FP : PairLabel::TN;
}

const char* to_string(PairLabel label) noexcept;

struct PairClassification {
  PairId pair;
  bool gold_significant = false;
  bool alt_significant = false;
  PairLabel label = PairLabel::TN;
};

/// Four percentages; an empty value means NA.
struct RatePercentages {
  std::optional<double> tp;
  std::optional<double> fn;
  std::optional<double> tn;
  std::optional<double> fp;
};

/// Confusion counts and percentages over the gold classes. A percentage is empty (NA)
/// when its gold class has no pairs.
struct ConfusionRates {
  std::size_t tp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;

  [[nodiscard]] std::size_t gold_positive() const noexcept { return tp + fn; }
  [[nodiscard]] std::size_t gold_negative() const noexcept { return tn + fp; }

  [[nodiscard]] std::optional<double> tp_pct() const;
  [[nodiscard]] std::optional<double> fn_pct() const;
  [[nodiscard]] std::optional<double> tn_pct() const;
  [[nodiscard]] std::optional<double> fp_pct() const;
  [[nodiscard]] RatePercentages percentages() const { return {tp_pct(), fn_pct(), tn_pct(), fp_pct()}; }
};

/// Throws ValidationError unless both sets cover the same run tags in the same order.
void require_same_pool(const std::vector<std::string>& gold, const std::vector<std::string>& alt);

std::vector<PairClassification> classify_pairs(const SignificanceSet& gold,
                                               const SignificanceSet& alt);

ConfusionRates confusion_rates(const std::vector<PairClassification>& classifications);

/// `dataset,metric,tp,fn,tn,fp,gold_pos,gold_neg`
void write_agreement_header(std::ostream& out);
void write_agreement_row(std::ostream& out, const std::string& dataset, const std::string& metric,
                         const ConfusionRates& rates);
void write_agreement_row(std::ostream& out, const std::string& dataset, const std::string& metric,
                         const RatePercentages& pct, std::size_t gold_pos, std::size_t gold_neg);

/// Percentages print with 6 decimals; NA prints as "NA".
std::string format_pct(const std::optional<double>& pct);

}  // namespace sigaudit
