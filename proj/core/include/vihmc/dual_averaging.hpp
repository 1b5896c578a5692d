#pragma once

#include <cmath>

namespace vihmc {

// Nesterov dual averaging of log step size towards a target mean acceptance
// statistic (Hoffman & Gelman, 2014).
class DualAveraging {
 public:
  struct Settings {
    double target = 0.8;
    double gamma = 0.05;
    double t0 = 10.0;
    double kappa = 0.75;
  };

  DualAveraging(double initial_step, Settings settings)
      : s_(settings), mu_(std::log(10.0 * initial_step)), log_step_(std::log(initial_step)) {}

  /// Feeds the acceptance statistic of the proposal made with step(); returns
  /// the next step size to try.
  double update(double accept_stat) {
    ++m_;
    const double m = static_cast<double>(m_);
    const double w = 1.0 / (m + s_.t0);
    h_bar_ = (1.0 - w) * h_bar_ + w * (s_.target - accept_stat);
    log_step_ = mu_ - std::sqrt(m) / s_.gamma * h_bar_;
    const double eta = std::pow(m, -s_.kappa);
    log_step_bar_ = eta * log_step_ + (1.0 - eta) * log_step_bar_;
    return step();
  }

  [[nodiscard]] double step() const { return std::exp(log_step_); }
  /// Averaged iterate; the step size to use once adaptation stops.
  [[nodiscard]] double final_step() const {
    return m_ == 0 ? step() : std::exp(log_step_bar_);
  }
  [[nodiscard]] long iterations() const { return m_; }

 private:
  Settings s_;
  double mu_;
  double log_step_;
  double log_step_bar_ = 0.0;
  double h_bar_ = 0.0;
  long m_ = 0;
};

}  // namespace vihmc
