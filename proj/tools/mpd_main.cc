// Command-line front end: train one method, compare methods from a shared
// initialization, or run the property self-test.
//
//   mpd train --method mpd --synthetic terrain --samples 4096 --hidden 64 --steps 50
//   mpd compare --csv data.csv --x-cols 0,1,2 --y-cols 3 --header --outdir out
//   mpd selftest --filter pwp

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpd/baselines.h"
#include "mpd/dataset.h"
#include "mpd/errors.h"
#include "mpd/selftest.h"
#include "mpd/trainer.h"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kPropertyFailure = 3 };

struct Flags {
  // Data.
  std::string csv;
  std::vector<std::size_t> x_cols;
  std::vector<std::size_t> y_cols;
  bool header = false;
  std::string synthetic;
  std::size_t samples = 4096;
  std::size_t d_in = 2;
  // Model and training.
  std::vector<std::string> methods;
  std::size_t hidden = 500;
  std::size_t steps = 50;
  std::size_t minibatch = 0;  // 0: the method's default
  std::size_t gd_minibatch = 256;
  std::string growth = "on";
  double lr = 1e-3;
  std::uint64_t seed = 1;
  std::string sweep = "permutation";
  std::size_t log_every = 1;
  bool timing = false;
  std::string outdir = ".";
  // Self-test.
  std::string filter;
  bool mutate_sum = false;
};

struct Problem {
  mpd::Dataset data;
  std::vector<mpd::Sample> train;
  std::vector<mpd::Sample> val;
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

Problem LoadProblem(const Flags& f) {
  if (f.csv.empty() == f.synthetic.empty()) {
    throw UsageError("give exactly one of --csv and --synthetic");
  }
  mpd::Dataset raw;
  if (!f.csv.empty()) {
    if (f.x_cols.empty() || f.y_cols.empty()) {
      throw UsageError("--csv needs --x-cols and --y-cols");
    }
    raw = mpd::LoadCsv(f.csv, f.x_cols, f.y_cols, f.header);
  } else {
    mpd::SyntheticKind kind;
    if (f.synthetic == "terrain") {
      kind = mpd::SyntheticKind::kTerrain;
    } else if (f.synthetic == "teacher_pwl") {
      kind = mpd::SyntheticKind::kTeacherPwl;
    } else {
      throw UsageError("unknown --synthetic kind '" + f.synthetic + "'");
    }
    raw = mpd::SyntheticRugged(kind, f.samples, f.d_in, f.seed);
  }
  Problem problem;
  problem.data = mpd::Standardize(raw);
  const mpd::Split split = mpd::Split80_20(problem.data.size(), f.seed);
  problem.train = mpd::Select(problem.data, split.train);
  problem.val = mpd::Select(problem.data, split.val);
  return problem;
}

mpd::MinibatchGrowth ParseGrowth(const std::string& text) {
  mpd::MinibatchGrowth growth;
  if (text == "on") return growth;
  if (text == "off") {
    growth.enabled = false;
    return growth;
  }
  // start,factor,interval[,cap]
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string part; std::getline(in, part, ',');) parts.push_back(part);
  if (parts.size() < 3 || parts.size() > 4) {
    throw UsageError("--minibatch-growth takes on, off or start,factor,interval[,cap]");
  }
  try {
    growth.start_step = std::stoul(parts[0]);
    growth.factor = std::stod(parts[1]);
    growth.interval = std::stoul(parts[2]);
    if (parts.size() == 4) growth.cap = std::stoul(parts[3]);
  } catch (const std::exception&) {
    throw UsageError("bad --minibatch-growth value '" + text + "'");
  }
  return growth;
}

mpd::TrainConfig MpdConfig(const Flags& f) {
  mpd::TrainConfig config;
  config.total_batch_steps = f.steps;
  config.minibatch_size = f.minibatch == 0 ? 2048 : f.minibatch;
  config.growth = ParseGrowth(f.growth);
  config.seed = f.seed;
  config.log_every = f.log_every;
  if (f.sweep == "permutation") {
    config.sweep_mode = mpd::SweepMode::kPermutationSweep;
  } else if (f.sweep == "random") {
    config.sweep_mode = mpd::SweepMode::kRandomWithReplacement;
  } else {
    throw UsageError("--sweep must be permutation or random");
  }
  return config;
}

mpd::GdConfig GdConfigFor(const Flags& f, std::size_t minibatch) {
  mpd::GdConfig config;
  config.learning_rate = f.lr;
  config.minibatch_size = minibatch;
  config.total_batch_steps = f.steps;
  config.seed = f.seed;
  config.log_every = f.log_every;
  return config;
}

mpd::TrainLog RunMethod(const std::string& method, const mpd::NetworkParams& init,
                        const Problem& problem, const Flags& f, std::size_t gd_minibatch) {
  if (method == "mpd") return mpd::TrainMpd(init, problem.train, problem.val, MpdConfig(f));
  if (method == "adam") {
    return mpd::TrainGd(init, problem.train, problem.val, GdConfigFor(f, gd_minibatch),
                        mpd::GdMethod::kAdam);
  }
  if (method == "nag") {
    return mpd::TrainGd(init, problem.train, problem.val, GdConfigFor(f, gd_minibatch),
                        mpd::GdMethod::kNag);
  }
  throw UsageError("unknown method '" + method + "' (expected mpd, adam or nag)");
}

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw mpd::DataError("cannot write " + path.string());
  return out;
}

mpd::NetworkShape ShapeFor(const Problem& problem, const Flags& f) {
  mpd::NetworkShape shape{problem.data.d_in(), f.hidden, problem.data.d_out()};
  shape.Validate();
  return shape;
}

int CmdTrain(const Flags& f) {
  if (f.methods.size() != 1) throw UsageError("train takes exactly one --method");
  const std::string& method = f.methods.front();
  const Problem problem = LoadProblem(f);
  const mpd::NetworkShape shape = ShapeFor(problem, f);
  const mpd::NetworkParams init = mpd::InitParams(shape, f.seed);
  const std::size_t gd_minibatch = f.minibatch == 0 ? f.gd_minibatch : f.minibatch;
  const mpd::TrainLog log = RunMethod(method, init, problem, f, gd_minibatch);

  std::filesystem::create_directories(f.outdir);
  const std::filesystem::path dir(f.outdir);
  auto csv = OpenOut(dir / (method + "_loss.csv"));
  mpd::WriteLogCsv(csv, log, f.timing);
  auto params = OpenOut(dir / (method + "_params.txt"));
  mpd::WriteParams(params, log.final_params.value_or(init));
  auto stats = OpenOut(dir / "standardization.txt");
  mpd::WriteStats(stats, problem.data);

  if (log.records.empty()) {
    std::printf("%s: no batch steps run\n", method.c_str());
  } else {
    std::printf("%s: final train loss %.10g, val loss %.10g after %zu batch steps\n",
                method.c_str(), log.records.back().train_loss, log.records.back().val_loss,
                log.records.back().batch_step);
  }
  return kOk;
}

int CmdCompare(const Flags& f) {
  std::vector<std::string> methods = f.methods;
  if (methods.empty()) methods = {"mpd", "adam", "nag"};
  if (methods.size() < 2) throw UsageError("compare needs at least two methods");
  const Problem problem = LoadProblem(f);
  const mpd::NetworkShape shape = ShapeFor(problem, f);
  const mpd::NetworkParams init = mpd::InitParams(shape, f.seed);

  std::vector<mpd::TrainLog> logs;
  for (const std::string& m : methods) logs.push_back(RunMethod(m, init, problem, f, f.gd_minibatch));

  std::filesystem::create_directories(f.outdir);
  auto csv = OpenOut(std::filesystem::path(f.outdir) / "compare.csv");
  csv << "step";
  for (const auto& m : methods) csv << ',' << m;
  for (const auto& m : methods) csv << ',' << m << "_val";
  csv << '\n';
  // Every method logs on the same batch steps.
  const std::size_t rows = logs.front().records.size();
  char buf[64];
  for (std::size_t r = 0; r < rows; ++r) {
    csv << logs.front().records[r].batch_step;
    for (const auto& log : logs) {
      std::snprintf(buf, sizeof(buf), ",%.12g", log.records[r].train_loss);
      csv << buf;
    }
    for (const auto& log : logs) {
      std::snprintf(buf, sizeof(buf), ",%.12g", log.records[r].val_loss);
      csv << buf;
    }
    csv << '\n';
  }

  std::string summary = "final train loss:";
  if (rows == 0) {
    summary += " none (no batch steps run)";
  } else {
    std::size_t best = 0;
    for (std::size_t k = 0; k < methods.size(); ++k) {
      std::snprintf(buf, sizeof(buf), " %s=%.10g", methods[k].c_str(),
                    logs[k].records.back().train_loss);
      summary += buf;
      if (logs[k].records.back().train_loss < logs[best].records.back().train_loss) best = k;
    }
    summary += "; least: " + methods[best];
  }
  std::puts(summary.c_str());
  auto text = OpenOut(std::filesystem::path(f.outdir) / "summary.txt");
  text << summary << '\n';
  return kOk;
}

int CmdSelfTest(const Flags& f) {
  mpd::SelfTestOptions options;
  options.filter = f.filter;
  if (f.mutate_sum) options.sum = mpd::CorruptedSum;
  const auto results = mpd::RunSelfTest(options);
  int failures = 0;
  for (const auto& r : results) {
    std::printf("%-4s %s/%s %s\n", r.passed ? "ok" : "FAIL", r.module.c_str(), r.name.c_str(),
                r.detail.c_str());
    failures += r.passed ? 0 : 1;
  }
  std::printf("%zu checks, %d failed\n", results.size(), failures);
  return failures == 0 ? kOk : kPropertyFailure;
}

void AddDataFlags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--csv", f.csv, "Input CSV path");
  cmd->add_option("--x-cols", f.x_cols, "Input column indices (0-based)")->delimiter(',');
  cmd->add_option("--y-cols", f.y_cols, "Output column indices (0-based)")->delimiter(',');
  cmd->add_flag("--header", f.header, "CSV has a header line");
  cmd->add_option("--synthetic", f.synthetic, "Synthetic dataset: terrain or teacher_pwl");
  cmd->add_option("--samples", f.samples, "Synthetic sample count")->capture_default_str();
  cmd->add_option("--d-in", f.d_in, "Synthetic input dimension")->capture_default_str();
}

void AddTrainingFlags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--hidden", f.hidden, "Hidden units")->capture_default_str();
  cmd->add_option("--steps", f.steps, "Batch steps")->capture_default_str();
  cmd->add_option("--minibatch", f.minibatch,
                  "Mini-batch size (train: of the chosen method, default 2048 for mpd and "
                  "--gd-minibatch otherwise; compare: MPD)");
  cmd->add_option("--gd-minibatch", f.gd_minibatch, "Adam/NAG mini-batch size")
      ->capture_default_str();
  cmd->add_option("--minibatch-growth", f.growth,
                  "MPD mini-batch growth: on, off or start,factor,interval[,cap]")
      ->capture_default_str();
  cmd->add_option("--lr", f.lr, "Adam/NAG learning rate")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Seed for data, split, init and schedules")
      ->capture_default_str();
  cmd->add_option("--sweep", f.sweep, "MPD parameter order: permutation or random")
      ->capture_default_str();
  cmd->add_option("--log-every", f.log_every, "Log every n batch steps")->capture_default_str();
  cmd->add_flag("--timing", f.timing, "Write wall-clock times into loss CSVs");
  cmd->add_option("--outdir", f.outdir, "Output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Message passing descent and gradient baselines for one-hidden-layer networks"};
  app.require_subcommand(1);
  Flags f;

  CLI::App* train = app.add_subcommand("train", "Train one method");
  train->add_option("--method", f.methods, "mpd, adam or nag")->required()->expected(1);
  AddDataFlags(train, f);
  AddTrainingFlags(train, f);

  CLI::App* compare = app.add_subcommand("compare", "Train several methods from one init");
  compare->add_option("--method", f.methods, "Methods (default mpd,adam,nag)")->delimiter(',');
  AddDataFlags(compare, f);
  AddTrainingFlags(compare, f);

  CLI::App* selftest = app.add_subcommand("selftest", "Run property checks");
  selftest->add_option("--filter", f.filter, "Only this module: pwp, nn, mpd, baselines, data");
  selftest->add_flag("--mutate-sum", f.mutate_sum, "Check against a deliberately broken merge");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (train->parsed()) return CmdTrain(f);
    if (compare->parsed()) return CmdCompare(f);
    return CmdSelfTest(f);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const mpd::DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const mpd::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kDataError;
  }
}
