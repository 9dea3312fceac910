#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "adasim/render.hpp"

namespace adasim {

// One Gaussian per class in the reduced latent space.
struct GmmComponent {
  int class_id = 0;
  Eigen::VectorXd mean;      // P
  Eigen::VectorXd var_diag;  // P, floored at kCovFloor
  double prior = 0.0;
};

// Maps a raw uncertainty value onto [0, 1]: 0 below the quantile threshold,
// linear between threshold and the largest value seen while fitting, 1 above.
struct UncertaintyNormalizer {
  bool fitted = false;
  double threshold = 0.0;  // quantile threshold (80th percentile of the fitted Gaussian)
  double max_seen = 0.0;   // largest raw uncertainty observed during fitting
};

constexpr double kCovFloor = 1e-6;

// Linear per-pixel segmentation model: a latent projection followed by a
// linear class head, plus a PCA+GMM density estimator over the latent space
// for epistemic uncertainty. Snapshots are plain values; copying one yields
// an independent, immutable-by-convention snapshot.
struct SegModel {
  Eigen::MatrixXd latent_proj;    // L x F
  Eigen::MatrixXd class_weights;  // K x L
  Eigen::VectorXd biases;         // K

  bool estimator_fitted = false;
  Eigen::VectorXd pca_mean;   // L
  Eigen::MatrixXd pca_basis;  // P x L, orthonormal rows
  std::vector<GmmComponent> gmm;
  UncertaintyNormalizer normalizer;

  int feature_dim() const { return static_cast<int>(latent_proj.cols()); }
  int latent_dim() const { return static_cast<int>(latent_proj.rows()); }
  int num_classes() const { return static_cast<int>(class_weights.rows()); }
  int pca_dim() const { return static_cast<int>(pca_basis.rows()); }
};

// Fresh model: identity-like latent projection, small seeded head weights.
SegModel make_seg_model(int feature_dim, int latent_dim, int num_classes, uint64_t seed);

struct Prediction {
  Eigen::VectorXi labels;   // per pixel, kNoLabel for invalid pixels
  Eigen::MatrixXd logits;   // K x N
  Eigen::MatrixXd latents;  // L x N
};

// Per-pixel forward pass. Invalid (no-hit) pixels get kNoLabel.
Prediction predict(const SegModel& model, const SensorFrame& frame);

// Forward pass over a bare feature matrix (F x N), all columns valid.
Prediction predict_features(const SegModel& model, const Eigen::MatrixXd& features);

// Raw epistemic uncertainty: negative log density of each latent column under
// the PCA-projected class mixture. Throws if the estimator is not fitted.
Eigen::VectorXd estimate_uncertainty(const SegModel& model, const Eigen::MatrixXd& latents);

// Fits PCA (top pca_dim components) and the per-class Gaussians on the given
// latent samples with their predicted classes. Classes with fewer than two
// samples are dropped from the mixture; priors are the class frequencies
// among the kept samples. Requires at least pca_dim + 1 samples.
void fit_estimator(SegModel& model, const Eigen::MatrixXd& latents, const Eigen::VectorXi& classes,
                   int pca_dim);

// Fits the normalizer on raw uncertainty samples: Gaussian (mean, MLE std),
// threshold at the 80th percentile so that P(U > threshold) = 0.2, max_seen =
// the largest sample.
void fit_normalizer(SegModel& model, const Eigen::VectorXd& raw_samples);

// Piecewise-linear normalization onto [0, 1]. Requires a fitted normalizer.
double normalize_uncertainty(const SegModel& model, double raw);
Eigen::VectorXd normalize_uncertainty(const SegModel& model, const Eigen::VectorXd& raw);

// One cross-entropy SGD step on a pixel batch (features F x B, labels B).
// Returns the pre-step mean batch loss.
double train_step(SegModel& model, const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                  double lr_latent, double lr_head);

// Mean cross-entropy of the model on a labeled pixel batch.
double cross_entropy(const SegModel& model, const Eigen::MatrixXd& features,
                     const Eigen::VectorXi& labels);

// Inverse standard normal CDF (rational approximation, |error| < 1e-9).
double inv_normal_cdf(double p);

// Versioned text checkpoint with hex-float payload; round-trips bit-exactly.
void save_checkpoint(const SegModel& model, const std::string& path);
SegModel load_checkpoint(const std::string& path);

}  // namespace adasim
