#include "ehfl/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ehfl {

double macro_f1(std::span<const int> predictions, std::span<const int> truth, int classes) {
  if (predictions.size() != truth.size()) throw std::invalid_argument("macro_f1: length mismatch");
  if (classes < 1) throw std::invalid_argument("macro_f1: classes must be >= 1");
  const auto c = static_cast<std::size_t>(classes);
  std::vector<std::int64_t> tp(c, 0), fp(c, 0), fn(c, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto p = static_cast<std::size_t>(predictions[i]);
    const auto t = static_cast<std::size_t>(truth[i]);
    if (p >= c || t >= c) throw std::invalid_argument("macro_f1: class id out of range");
    if (p == t) {
      ++tp[t];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    const std::int64_t denom = 2 * tp[k] + fp[k] + fn[k];
    if (denom > 0) sum += 2.0 * static_cast<double>(tp[k]) / static_cast<double>(denom);
  }
  return sum / static_cast<double>(c);
}

std::vector<double> normalize_energy(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("normalize_energy: empty group");
  const double mx = *std::max_element(values.begin(), values.end());
  if (!(mx > 0.0)) throw std::invalid_argument("normalize_energy: group maximum is not positive");
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) v /= mx;
  return out;
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool is_int(const std::string& s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && p == s.data() + s.size();
}

bool as_real(const std::string& s, double& v) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

std::string csv_row(const RunLabel& label, const EpochMetrics& m) {
  std::string row;
  row += label.run_id + ',' + label.policy + ',' + std::to_string(label.seed) + ',' + fixed6(label.alpha) + ',' +
         fixed6(label.p_bc) + ',';
  row += std::to_string(m.epoch) + ',' + fixed6(m.macro_f1) + ',' + fixed6(m.mean_vaoi) + ',' +
         std::to_string(m.cum_energy) + ',' + std::to_string(m.trainings_started) + ',' +
         std::to_string(m.transmissions) + ',' + std::to_string(m.participants);
  return row;
}

void write_csv(std::ostream& os, const RunLabel& label, std::span<const EpochMetrics> series, bool header) {
  if (header) os << kCsvHeader << '\n';
  for (const auto& m : series) os << csv_row(label, m) << '\n';
}

bool validate_csv_row(const std::string& row) {
  const auto f = split(row, ',');
  if (f.size() != 12) return false;
  if (f[0].empty() || f[1].empty()) return false;
  double alpha = 0, p_bc = 0, f1 = 0, vaoi = 0;
  if (!is_int(f[2]) || !as_real(f[3], alpha) || !as_real(f[4], p_bc)) return false;
  if (!is_int(f[5]) || !as_real(f[6], f1) || !as_real(f[7], vaoi)) return false;
  for (std::size_t i = 8; i < 12; ++i)
    if (!is_int(f[i]) || f[i].front() == '-') return false;
  return f1 >= 0.0 && f1 <= 1.0 && vaoi >= 0.0 && p_bc >= 0.0 && p_bc <= 1.0 && alpha > 0.0;
}

}  // namespace ehfl
