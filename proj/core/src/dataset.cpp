#include "lbnn/dataset.hpp"

#include <cmath>
#include <string>

#include "lbnn/error.hpp"

namespace lbnn {

void Dataset::validate() const {
  if (X.rows() < 1) throw InvalidArgument("dataset: need at least one training example");
  if (Y.rows() != X.rows()) throw InvalidArgument("dataset: X and Y have different numbers of rows");
  if (Y.cols() < 1) throw InvalidArgument("dataset: Y has no columns");
  if (X.cols() < X.rows()) throw InvalidArgument("dataset: n0 < p, training Gram matrix cannot be invertible");
  if (Xhat.cols() != X.cols()) throw InvalidArgument("dataset: Xhat and X have different input dimension");
  if (Yhat && (Yhat->rows() != Xhat.rows() || Yhat->cols() != Y.cols())) {
    throw InvalidArgument("dataset: Yhat shape does not match Xhat rows and Y columns");
  }
  if (!X.allFinite() || !Y.allFinite() || !Xhat.allFinite() || (Yhat && !Yhat->allFinite())) {
    throw InvalidArgument("dataset: non-finite entries");
  }
}

Dataset Dataset::training_as_test() const {
  Dataset out = *this;
  out.Xhat = X;
  out.Yhat = Y;
  return out;
}

GramSet build_gram_set(const Dataset& ds, double condition_cap) {
  ds.validate();
  const double n0 = static_cast<double>(ds.n0());
  const double nd = static_cast<double>(ds.nd());
  GramSet g;
  g.Gxx = symmetrize(ds.X * ds.X.transpose() / n0);
  g.Gxxh = ds.X * ds.Xhat.transpose() / n0;
  g.Gxhxh = symmetrize(ds.Xhat * ds.Xhat.transpose() / n0);
  g.Gyy = symmetrize(ds.Y * ds.Y.transpose() / nd);
  if (ds.Yhat) g.Gyhyh = symmetrize(*ds.Yhat * ds.Yhat->transpose() / nd);
  const double cond = condition_number(g.Gxx);
  if (!(cond <= condition_cap)) {
    throw InvalidArgument("training Gram matrix is singular or ill-conditioned (cond = " + std::to_string(cond) +
                          ")");
  }
  return g;
}

void NetworkShape::validate() const {
  if (widths.size() < 2) throw InvalidArgument("shape: need at least [n0, nd] (depth >= 1)");
  for (int w : widths) {
    if (w < 1) throw InvalidArgument("shape: layer widths must be positive");
  }
  for (int l = 1; l < depth(); ++l) {
    if (width(l) < nd()) {
      throw InvalidArgument("shape: hidden width n" + std::to_string(l) + " = " + std::to_string(width(l)) +
                            " is a bottleneck (< nd = " + std::to_string(nd()) + ")");
    }
  }
  if (std::isnan(beta) || beta < 0.0) throw InvalidArgument("shape: beta must be >= 0");
}

void NetworkShape::validate_against(const Dataset& ds) const {
  validate();
  ds.validate();
  if (ds.n0() != n0()) throw InvalidArgument("shape: n0 does not match dataset input dimension");
  if (ds.nd() != nd()) throw InvalidArgument("shape: nd does not match dataset output dimension");
}

}  // namespace lbnn
