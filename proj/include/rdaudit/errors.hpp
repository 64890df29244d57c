#pragma once

#include <stdexcept>
#include <string>

namespace rdaudit {

/// Invalid or inconsistent user configuration. The CLI maps this to exit code 5.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear-solver breakdown, time-step collapse or exhausted step budget.
/// The CLI maps this to exit code 4.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what, double residual = 0.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// L-infinity blow-up guard tripped during time integration. Exit code 3.
class blowup_error : public std::runtime_error {
 public:
  blowup_error(const std::string& what, long step, double t)
      : std::runtime_error(what), step_(step), t_(t) {}
  long step() const noexcept { return step_; }
  double time() const noexcept { return t_; }

 private:
  long step_;
  double t_;
};

}  // namespace rdaudit
