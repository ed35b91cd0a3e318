// SPDX-License-Identifier: Apache-2.0
#include "snet/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace snet {

void AdamState::step(const NamedParams& params, const GradMap& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (const auto& [name, param] : params) {
    const auto git = grads.find(name);
    if (git == grads.end()) throw std::invalid_argument("adam_step: missing gradient for " + name);
    const MatrixD& g = git->second;
    if (g.rows != param->rows || g.cols != param->cols)
      throw std::invalid_argument("adam_step: gradient shape mismatch for " + name);

    auto mit = first_moment_.find(name);
    if (mit == first_moment_.end()) {
      mit = first_moment_.emplace(name, Matrix(param->rows, param->cols)).first;
      second_moment_.emplace(name, Matrix(param->rows, param->cols));
    }
    Matrix& m = mit->second;
    Matrix& v = second_moment_.at(name);
    if (!m.same_shape(*param))
      throw std::invalid_argument("adam_step: parameter shape changed for " + name);

    for (std::size_t i = 0; i < param->size(); ++i) {
      const double gi = g.data[i];
      const double mi = cfg_.beta1 * static_cast<double>(m.data[i]) + (1.0 - cfg_.beta1) * gi;
      const double vi = cfg_.beta2 * static_cast<double>(v.data[i]) + (1.0 - cfg_.beta2) * gi * gi;
      m.data[i] = static_cast<float>(mi);
      v.data[i] = static_cast<float>(vi);
      const double m_hat = mi / bc1;
      const double v_hat = vi / bc2;
      param->data[i] = static_cast<float>(static_cast<double>(param->data[i]) -
                                          cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.epsilon));
    }
  }
}

}  // namespace snet
