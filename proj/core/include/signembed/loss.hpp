#pragma once

#include <Eigen/Dense>

namespace signembed {

struct InfoNceResult {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // d(loss)/d(S), same shape as S
};

// InfoNCE over an N x N similarity matrix of paired examples. The
// video-to-text term is the mean over rows i of -log softmax(S[i,:]/tau)[i];
// the text-to-video term is the transposed column version; symmetric mode
// averages the two. Gradients are analytic.
InfoNceResult info_nce_loss(const Eigen::MatrixXd& similarities, double tau,
                            bool symmetric = true);

}  // namespace signembed
