#include "signembed/loss.hpp"

#include <cmath>

#include "signembed/common.hpp"

namespace signembed {

namespace {

// Adds the row-direction cross-entropy term and its gradient.
void row_term(const Eigen::MatrixXd& s, double tau, double weight, double& loss,
              Eigen::MatrixXd& grad) {
  const Eigen::Index n = s.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd logits = s.row(i).transpose() / tau;
    const double m = logits.maxCoeff();
    const Eigen::VectorXd e = (logits.array() - m).exp();
    const double z = e.sum();
    loss += weight * (std::log(z) + m - logits(i)) / static_cast<double>(n);
    const double gscale = weight / (tau * static_cast<double>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
      double p = e(j) / z;
      grad(i, j) += gscale * (p - (i == j ? 1.0 : 0.0));
    }
  }
}

}  // namespace

InfoNceResult info_nce_loss(const Eigen::MatrixXd& s, double tau, bool symmetric) {
  if (s.rows() != s.cols()) throw ValidationError("InfoNCE needs a square matrix");
  if (s.rows() == 0) throw ValidationError("InfoNCE needs a non-empty batch");
  if (!(tau > 0.0)) throw ValidationError("temperature must be positive");
  if (!s.allFinite()) throw ValidationError("similarity matrix has non-finite entries");

  InfoNceResult r;
  r.grad = Eigen::MatrixXd::Zero(s.rows(), s.cols());
  if (symmetric) {
    row_term(s, tau, 0.5, r.loss, r.grad);
    Eigen::MatrixXd gt = Eigen::MatrixXd::Zero(s.cols(), s.rows());
    row_term(s.transpose(), tau, 0.5, r.loss, gt);
    r.grad += gt.transpose();
  } else {
    row_term(s, tau, 1.0, r.loss, r.grad);
  }
  return r;
}

}  // namespace signembed
