#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "sigaudit/significance.hpp"

namespace sigaudit {

/// Number of significant pairs touching each run, in pool order.
std::vector<std::size_t> per_run_counts(const SignificanceSet& sig);

/// Five-number summary plus mean. Quartiles are medians of the lower and upper halves,
/// each half including the overall median when the sample size is odd.
struct DistributionSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

DistributionSummary summarize(std::span<const double> values);

struct RunDrop {
  std::string run_tag;
  double gold_count = 0.0;
  double alt_count = 0.0;
  double drop = 0.0;          // significant under gold, lost under alt (per-run FN count)
  double signed_delta = 0.0;  // gold_count - alt_count
};

/// Per-run values are integers for a single comparison and iteration means after
/// replicate averaging.
struct DropReport {
  std::vector<RunDrop> per_run;
  DistributionSummary summary;
};

DropReport per_run_drops(const SignificanceSet& gold, const SignificanceSet& alt);

/// Averages several drop reports run by run and re-summarizes the means.
DropReport average_drops(std::span<const DropReport> reports);

/// `run,gold_count,alt_count,drop,signed_delta`
void write_drops(std::ostream& out, const DropReport& report);
/// `dataset,metric,min,q1,median,q3,max,mean`
void write_drop_summary_header(std::ostream& out);
void write_drop_summary_row(std::ostream& out, const std::string& dataset, const std::string& metric,
                            const DistributionSummary& summary);

}  // namespace sigaudit
