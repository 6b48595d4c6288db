#pragma once

#include <stdexcept>
#include <string>

namespace finsler {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct invalid_input : error {
  using error::error;
};

struct ill_conditioned : error {
  double condition;
  ill_conditioned(const std::string& msg, double cond)
      : error(msg + " (condition ~ " + std::to_string(cond) + ")"), condition(cond) {}
};

struct convergence_failure : error {
  double residual;
  convergence_failure(const std::string& msg, double res)
      : error(msg + " (residual " + std::to_string(res) + ")"), residual(res) {}
};

// a flow left the region where the metric family is defined
struct domain_exit : error {
  using error::error;
};

// no boundary crossing within the allotted integration time
struct runaway_flow : error {
  double t_max;
  explicit runaway_flow(double tmax)
      : error("flow did not exit the domain within t_max = " + std::to_string(tmax)), t_max(tmax) {}
  runaway_flow(const std::string& msg, double tmax)
      : error(msg + " (t_max = " + std::to_string(tmax) + ")"), t_max(tmax) {}
};

struct conjugate_point : error {
  double r;
  explicit conjugate_point(double rr)
      : error("polar density: Jacobian sign flip at r = " + std::to_string(rr)), r(rr) {}
};

struct unsupported_domain : error {
  using error::error;
};

struct config_error : error {
  std::string key;
  config_error(const std::string& msg, std::string k) : error(msg), key(std::move(k)) {}
};

}  // namespace finsler
