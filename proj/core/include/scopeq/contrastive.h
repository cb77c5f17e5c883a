#pragma once

#include <span>
#include <vector>

namespace scopeq {

// Projected embeddings z_i^1, z_i^2 of the two augmented views of frame i.
struct ViewPair {
  std::vector<double> first;
  std::vector<double> second;
};

// u.v / (|u||v|). Throws DegenerateInputError on a zero-norm input and
// ShapeError on a length mismatch.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

// Batch-mean contrastive loss over N >= 2 view pairs at temperature tau.
//
// For frame i the loss is
//   -log( exp(s(z_i^1, z_i^2)/tau) / sum_{k != i} sum_{a,b} exp(s(z_i^a, z_k^b)/tau) )
// with s the cosine similarity. The positive pair is not part of the
// denominator and there is one term per frame, not per view.
double nt_xent_loss(std::span<const ViewPair> pairs, double tau);

struct NtXentGradient {
  double loss = 0.0;
  std::vector<ViewPair> grads;  // d loss / d z_i^a, same shapes as the input
};

NtXentGradient nt_xent_grad(std::span<const ViewPair> pairs, double tau);

}  // namespace scopeq
