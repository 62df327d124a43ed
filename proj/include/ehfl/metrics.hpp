#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ehfl {

/// Unweighted mean of per-class F1 = 2TP / (2TP + FP + FN). A class with an
/// empty denominator (absent from both arguments) scores 0.
double macro_f1(std::span<const int> predictions, std::span<const int> truth, int classes);

/// Network-wide energy accounting for granted actions only.
class EnergyLedger {
 public:
  explicit EnergyLedger(std::int64_t kappa) : kappa_(kappa) {}

  void record_training_start() noexcept {
    cum_energy_ += kappa_;
    ++trainings_;
  }
  void record_transmission() noexcept {
    cum_energy_ += 1;
    ++transmissions_;
  }

  std::int64_t cum_energy() const noexcept { return cum_energy_; }
  std::int64_t trainings() const noexcept { return trainings_; }
  std::int64_t transmissions() const noexcept { return transmissions_; }

 private:
  std::int64_t kappa_;
  std::int64_t cum_energy_ = 0;
  std::int64_t trainings_ = 0;
  std::int64_t transmissions_ = 0;
};

/// Divides every value by the group maximum. Throws on an empty or all-zero group.
std::vector<double> normalize_energy(std::span<const double> values);

struct EpochMetrics {
  std::int64_t epoch = 0;
  double macro_f1 = 0.0;
  double mean_vaoi = 0.0;
  std::int64_t cum_energy = 0;
  std::int64_t trainings_started = 0;  // this epoch
  std::int64_t transmissions = 0;      // this epoch
  std::int64_t participants = 0;       // |N(t)|
};

/// Identifies a run in CSV rows.
struct RunLabel {
  std::string run_id;
  std::string policy;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double p_bc = 0.0;
};

inline constexpr const char* kCsvHeader =
    "run_id,policy,seed,alpha,p_bc,epoch,macro_f1,mean_vaoi,cum_energy,trainings_started,transmissions,participants";

/// One CSV row (no trailing newline); reals use fixed 6-digit precision.
std::string csv_row(const RunLabel& label, const EpochMetrics& m);

void write_csv(std::ostream& os, const RunLabel& label, std::span<const EpochMetrics> series, bool header = true);

/// Checks a row against the schema: column count, integer/real fields,
/// macro_f1 in [0,1], mean_vaoi >= 0.
bool validate_csv_row(const std::string& row);

}  // namespace ehfl
