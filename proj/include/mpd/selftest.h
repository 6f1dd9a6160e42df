#ifndef MPD_SELFTEST_H_
#define MPD_SELFTEST_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mpd/pwp.h"

namespace mpd {

struct CheckResult {
  std::string module;  // pwp, nn, mpd, baselines, data
  std::string name;
  bool passed;
  std::string detail;
};

using SumFn = std::function<PwpFunction(std::span<const PwpFunction>)>;

struct SelfTestOptions {
  // Module name to run alone; empty runs everything.
  std::string filter;
  // Implementation checked by the merge properties. Defaults to SumPwp.
  SumFn sum;
};

// Small-scale property checks of every module. Throws DomainError for an
// unknown filter.
std::vector<CheckResult> RunSelfTest(const SelfTestOptions& options);

// SumPwp with the right tail of the result shifted by 1e-6. Exists so that
// the self-test can be shown to catch a broken merge.
PwpFunction CorruptedSum(std::span<const PwpFunction> fs);

}  // namespace mpd

#endif  // MPD_SELFTEST_H_
