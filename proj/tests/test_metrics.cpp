#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "ehfl/metrics.hpp"
#include "ehfl/rng.hpp"

using namespace ehfl;

namespace {

// Confusion-matrix oracle: per-class precision and recall, then harmonic mean.
double oracle_macro_f1(const std::vector<int>& pred, const std::vector<int>& truth, int classes) {
  std::vector<std::vector<double>> cm(classes, std::vector<double>(classes, 0.0));
  for (std::size_t i = 0; i < pred.size(); ++i) cm[truth[i]][pred[i]] += 1.0;
  double sum = 0.0;
  for (int c = 0; c < classes; ++c) {
    double col = 0.0, row = 0.0;
    for (int j = 0; j < classes; ++j) {
      col += cm[j][c];
      row += cm[c][j];
    }
    const double tp = cm[c][c];
    const double precision = col > 0 ? tp / col : 0.0;
    const double recall = row > 0 ? tp / row : 0.0;
    sum += (precision + recall) > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  }
  return sum / classes;
}

}  // namespace

TEST_CASE("macro F1 examples") {
  const std::vector<int> truth{0, 1, 2, 3, 0, 1};
  CHECK(macro_f1(truth, truth, 4) == 1.0);

  // class 0: TP1 FP1 FN1; class 1: TP1 FP1 FN1
  const std::vector<int> t2{0, 0, 1, 1};
  const std::vector<int> p2{0, 1, 1, 0};
  CHECK(macro_f1(p2, t2, 2) == doctest::Approx(0.5));

  std::vector<int> uniform;
  for (int i = 0; i < 40; ++i) uniform.push_back(i % 4);
  const std::vector<int> constant(40, 2);
  CHECK(macro_f1(constant, uniform, 4) == doctest::Approx(oracle_macro_f1(constant, uniform, 4)));
  CHECK(macro_f1(constant, uniform, 4) == doctest::Approx(0.1));

  CHECK_THROWS_AS(macro_f1(p2, truth, 4), std::invalid_argument);
}

TEST_CASE("macro F1 matches the confusion-matrix oracle and ignores relabeling") {
  Rng rng{12};
  for (int trial = 0; trial < 300; ++trial) {
    const int classes = 2 + static_cast<int>(uniform01(rng) * 5);
    const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * 50);
    std::vector<int> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(uniform01(rng) * classes);
      t[i] = uniform01(rng) < 0.5 ? p[i] : static_cast<int>(uniform01(rng) * classes);
    }
    const double f = macro_f1(p, t, classes);
    CHECK(f == doctest::Approx(oracle_macro_f1(p, t, classes)).epsilon(1e-12));
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);

    std::vector<int> perm(classes);
    for (int c = 0; c < classes; ++c) perm[c] = (c + 1 + trial) % classes;
    std::vector<int> pp(n), tp(n);
    for (std::size_t i = 0; i < n; ++i) {
      pp[i] = perm[p[i]];
      tp[i] = perm[t[i]];
    }
    CHECK(macro_f1(pp, tp, classes) == doctest::Approx(f).epsilon(1e-12));
  }
}

TEST_CASE("energy ledger") {
  EnergyLedger fresh(20);
  CHECK(fresh.cum_energy() == 0);
  EnergyLedger l(20);
  l.record_training_start();
  l.record_transmission();
  CHECK(l.cum_energy() == 21);
  CHECK(l.trainings() == 1);
  CHECK(l.transmissions() == 1);
}

TEST_CASE("energy normalization") {
  const std::vector<double> v{50, 80, 100, 40};
  CHECK(normalize_energy(v) == std::vector<double>{0.5, 0.8, 1.0, 0.4});
  CHECK(normalize_energy(std::vector<double>{7}) == std::vector<double>{1.0});
  const auto once = normalize_energy(v);
  CHECK(normalize_energy(once) == once);
  CHECK_THROWS_AS(normalize_energy(std::vector<double>{0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(normalize_energy(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("csv rows follow the schema") {
  RunLabel label{"vaoi_a0.1_p1_s3", "vaoi", 3, 0.1, 1.0};
  EpochMetrics m{4, 0.75, 1.5, 210, 2, 3, 5};
  const auto row = csv_row(label, m);
  CHECK(row == "vaoi_a0.1_p1_s3,vaoi,3,0.100000,1.000000,4,0.750000,1.500000,210,2,3,5");
  CHECK(validate_csv_row(row));
  CHECK_FALSE(validate_csv_row("a,b,c"));
  CHECK_FALSE(validate_csv_row("r,vaoi,3,0.1,1.0,4,1.5,1.5,210,2,3,5"));  // f1 > 1
  CHECK_FALSE(validate_csv_row("r,vaoi,3,0.1,1.0,4,0.5,1.5,-1,2,3,5"));

  std::ostringstream os;
  const std::vector<EpochMetrics> series{m, m};
  write_csv(os, label, series);
  CHECK(os.str() == std::string(kCsvHeader) + "\n" + row + "\n" + row + "\n");
}
