#ifndef MPD_TRAIN_LOG_H_
#define MPD_TRAIN_LOG_H_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mpd/network.h"

namespace mpd {

struct LogRecord {
  std::size_t batch_step;
  double train_loss;
  double val_loss;
  double wall_ms;
};

// Loss trajectory of one training run. Record 0 is the initial state; a run
// with a zero step budget has no records.
struct TrainLog {
  std::vector<LogRecord> records;
  std::optional<NetworkParams> final_params;

  // Appends a record; batch_step must exceed the previous one.
  void Append(const LogRecord& r);
};

// CSV with header "step,train_loss,val_loss,wall_ms". With
// include_timing == false the wall_ms column is written as 0 so that
// seeded runs produce byte-identical files.
void WriteLogCsv(std::ostream& out, const TrainLog& log, bool include_timing);

// One value per line, 17 significant digits, flat parameter order.
void WriteParams(std::ostream& out, const NetworkParams& params);

}  // namespace mpd

#endif  // MPD_TRAIN_LOG_H_
