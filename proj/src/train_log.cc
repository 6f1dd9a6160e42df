#include "mpd/train_log.h"

#include <cstdio>
#include <ostream>

#include "mpd/errors.h"

namespace mpd {

void TrainLog::Append(const LogRecord& r) {
  if (!records.empty() && r.batch_step <= records.back().batch_step) {
    throw DomainError("log steps must be strictly increasing");
  }
  records.push_back(r);
}

void WriteLogCsv(std::ostream& out, const TrainLog& log, bool include_timing) {
  out << "step,train_loss,val_loss,wall_ms\n";
  char buf[128];
  for (const LogRecord& r : log.records) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g,%.3f\n", r.batch_step, r.train_loss,
                  r.val_loss, include_timing ? r.wall_ms : 0.0);
    out << buf;
  }
}

void WriteParams(std::ostream& out, const NetworkParams& params) {
  char buf[40];
  for (double v : params.flat()) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    out << buf;
  }
}

}  // namespace mpd
