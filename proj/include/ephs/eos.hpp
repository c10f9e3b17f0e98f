#pragma once

// =============================================================================
// Equations of state closing the fluid thermodynamics.
//
//   polytropic           U(rho) = K * rho^gamma / (gamma - 1)
//   ideal-gas-entropy    U(sigma, rho) = K * rho^gamma * exp(sigma / (c_v rho))
//
// Intensive quantities: mu = dU/drho, theta = dU/dsigma,
// pi = theta*sigma + mu*rho - U (entropy variant) or mu*rho - U (barotropic).
// =============================================================================

#include <cmath>
#include <stdexcept>

namespace ephs {

struct eos_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PolytropicEos {
    double K = 1.0;
    double gamma = 2.0;

    PolytropicEos() = default;
    PolytropicEos(double K_, double gamma_) : K(K_), gamma(gamma_) {
        if (!(K > 0.0)) throw eos_error("polytropic EOS: K must be positive");
        if (!(gamma > 1.0)) throw eos_error("polytropic EOS: gamma must exceed 1");
    }

    double U(double rho) const { return K * std::pow(rho, gamma) / (gamma - 1.0); }
    double mu(double rho) const {
        return K * gamma * std::pow(rho, gamma - 1.0) / (gamma - 1.0);
    }
    double pi(double rho) const { return K * std::pow(rho, gamma); }
};

struct IdealGasEntropyEos {
    double K = 1.0;
    double gamma = 1.4;
    double c_v = 1.0;

    IdealGasEntropyEos() = default;
    IdealGasEntropyEos(double K_, double gamma_, double c_v_) : K(K_), gamma(gamma_), c_v(c_v_) {
        if (!(K > 0.0)) throw eos_error("ideal-gas EOS: K must be positive");
        if (!(gamma > 1.0)) throw eos_error("ideal-gas EOS: gamma must exceed 1");
        if (!(c_v > 0.0)) throw eos_error("ideal-gas EOS: c_v must be positive");
    }

    double U(double sigma, double rho) const {
        return K * std::pow(rho, gamma) * std::exp(sigma / (c_v * rho));
    }
    double theta(double sigma, double rho) const { return U(sigma, rho) / (c_v * rho); }
    double mu(double sigma, double rho) const {
        const double u = U(sigma, rho);
        return (u / rho) * gamma - theta(sigma, rho) * (sigma / rho);
    }
    double pi(double sigma, double rho) const { return (gamma - 1.0) * U(sigma, rho); }
};

}  // namespace ephs
