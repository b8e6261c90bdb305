#include "sigaudit/agreement.hpp"

#include <fmt/format.h>

namespace sigaudit {

namespace {

std::optional<double> percent(std::size_t part, std::size_t whole) {
  if (whole == 0) return std::nullopt;
  return 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

}  // namespace

const char* to_string(PairLabel label) noexcept {
  switch (label) {
    case PairLabel::TP: return "TP";
    case PairLabel::FN: return "FN";
    case PairLabel::TN: return "TN";
    case PairLabel::FP: return "FP";
  }
  return "?";
}

std::optional<double> ConfusionRates::tp_pct() const { return percent(tp, gold_positive()); }
std::optional<double> ConfusionRates::fn_pct() const { return percent(fn, gold_positive()); }
std::optional<double> ConfusionRates::tn_pct() const { return percent(tn, gold_negative()); }
std::optional<double> ConfusionRates::fp_pct() const { return percent(fp, gold_negative()); }

void require_same_pool(const std::vector<std::string>& gold, const std::vector<std::string>& alt) {
  if (gold != alt) {
    throw ValidationError(fmt::format(
        "gold and alternative tables cover different run pools ({} vs {} runs)", gold.size(),
        alt.size()));
  }
}

std::vector<PairClassification> classify_pairs(const SignificanceSet& gold,
                                               const SignificanceSet& alt) {
  require_same_pool(gold.run_tags, alt.run_tags);
  if (gold.flags.size() != alt.flags.size()) throw ValidationError("significance sets differ in size");
  const std::size_t m = gold.runs();
  std::vector<PairClassification> out;
  out.reserve(gold.flags.size());
  for (std::size_t i = 0; i < gold.flags.size(); ++i) {
    const bool g = gold.flags[i];
    const bool a = alt.flags[i];
    out.push_back(PairClassification{pair_at(i, m), g, a, label_for(g, a)});
  }
  return out;
}

ConfusionRates confusion_rates(const std::vector<PairClassification>& classifications) {
  ConfusionRates rates;
  for (const auto& c : classifications) {
    switch (c.label) {
      case PairLabel::TP: ++rates.tp; break;
      case PairLabel::FN: ++rates.fn; break;
      case PairLabel::TN: ++rates.tn; break;
      case PairLabel::FP: ++rates.fp; break;
    }
  }
  return rates;
}

std::string format_pct(const std::optional<double>& pct) {
  return pct ? fmt::format("{:.6f}", *pct) : std::string("NA");
}

void write_agreement_header(std::ostream& out) {
  out << "dataset,metric,tp,fn,tn,fp,gold_pos,gold_neg\n";
}

void write_agreement_row(std::ostream& out, const std::string& dataset, const std::string& metric,
                         const ConfusionRates& rates) {
  write_agreement_row(out, dataset, metric, rates.percentages(), rates.gold_positive(),
                      rates.gold_negative());
}

void write_agreement_row(std::ostream& out, const std::string& dataset, const std::string& metric,
                         const RatePercentages& pct, std::size_t gold_pos, std::size_t gold_neg) {
  out << fmt::format("{},{},{},{},{},{},{},{}\n", dataset, metric, format_pct(pct.tp),
                     format_pct(pct.fn), format_pct(pct.tn), format_pct(pct.fp), gold_pos,
                     gold_neg);
}

}  // namespace sigaudit
