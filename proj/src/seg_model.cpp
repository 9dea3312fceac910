#include "adasim/seg_model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "adasim/io_util.hpp"
#include "adasim/rng.hpp"

namespace adasim {

SegModel make_seg_model(int feature_dim, int latent_dim, int num_classes, uint64_t seed) {
  SegModel m;
  Rng rng(derive_seed(seed, "model-init"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (latent_dim == feature_dim) {
    m.latent_proj = Eigen::MatrixXd::Identity(latent_dim, feature_dim);
  } else {
    m.latent_proj.resize(latent_dim, feature_dim);
    const double scale = 1.0 / std::sqrt(static_cast<double>(feature_dim));
    for (int i = 0; i < latent_dim; ++i)
      for (int j = 0; j < feature_dim; ++j) m.latent_proj(i, j) = scale * gauss(rng);
  }
  m.class_weights.resize(num_classes, latent_dim);
  for (int i = 0; i < num_classes; ++i)
    for (int j = 0; j < latent_dim; ++j) m.class_weights(i, j) = 0.01 * gauss(rng);
  m.biases = Eigen::VectorXd::Zero(num_classes);
  return m;
}

Prediction predict_features(const SegModel& model, const Eigen::MatrixXd& features) {
  if (features.rows() != model.feature_dim())
    throw std::invalid_argument("predict: feature dimension mismatch");
  Prediction p;
  p.latents = model.latent_proj * features;
  p.logits = (model.class_weights * p.latents).colwise() + model.biases;
  const int n = static_cast<int>(features.cols());
  p.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    Eigen::Index best;
    p.logits.col(i).maxCoeff(&best);
    p.labels[i] = static_cast<int>(best);
  }
  return p;
}

Prediction predict(const SegModel& model, const SensorFrame& frame) {
  Prediction p = predict_features(model, frame.features.cast<double>());
  for (int i = 0; i < frame.pixels(); ++i)
    if (!frame.valid(i)) p.labels[i] = kNoLabel;
  return p;
}

Eigen::VectorXd estimate_uncertainty(const SegModel& model, const Eigen::MatrixXd& latents) {
  if (!model.estimator_fitted) throw std::runtime_error("uncertainty estimator not fitted");
  const int n = static_cast<int>(latents.cols());
  const int P = model.pca_dim();
  const Eigen::MatrixXd projected = model.pca_basis * (latents.colwise() - model.pca_mean);

  const int J = static_cast<int>(model.gmm.size());
  Eigen::VectorXd log_norm(J);  // log prior - 0.5*sum(log 2 pi var)
  for (int j = 0; j < J; ++j) {
    double s = std::log(model.gmm[j].prior);
    for (int p = 0; p < P; ++p) s -= 0.5 * std::log(2.0 * M_PI * model.gmm[j].var_diag[p]);
    log_norm[j] = s;
  }

  Eigen::VectorXd out(n);
  Eigen::VectorXd log_terms(J);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < J; ++j) {
      double quad = 0.0;
      for (int p = 0; p < P; ++p) {
        const double d = projected(p, i) - model.gmm[j].mean[p];
        quad += d * d / model.gmm[j].var_diag[p];
      }
      log_terms[j] = log_norm[j] - 0.5 * quad;
    }
    const double m = log_terms.maxCoeff();
    out[i] = -(m + std::log((log_terms.array() - m).exp().sum()));
  }
  return out;
}

void fit_estimator(SegModel& model, const Eigen::MatrixXd& latents, const Eigen::VectorXi& classes,
                   int pca_dim) {
  const int n = static_cast<int>(latents.cols());
  const int L = model.latent_dim();
  if (latents.rows() != L) throw std::invalid_argument("fit_estimator: latent dimension mismatch");
  if (pca_dim < 1 || pca_dim > L) throw std::invalid_argument("fit_estimator: bad pca_dim");
  if (n < pca_dim + 1) throw std::runtime_error("fit_estimator: too few samples");

  model.pca_mean = latents.rowwise().mean();
  const Eigen::MatrixXd centered = latents.colwise() - model.pca_mean;
  const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  // Eigenvalues come out ascending; keep the top pca_dim directions.
  model.pca_basis.resize(pca_dim, L);
  for (int p = 0; p < pca_dim; ++p)
    model.pca_basis.row(p) = eig.eigenvectors().col(L - 1 - p).transpose();

  const Eigen::MatrixXd projected = model.pca_basis * centered;

  std::map<int, std::vector<int>> by_class;
  for (int i = 0; i < n; ++i) by_class[classes[i]].push_back(i);

  model.gmm.clear();
  int kept_samples = 0;
  for (const auto& [cls, idx] : by_class) {
    if (idx.size() < 2) {
      std::cerr << "fit_estimator: dropping class " << cls << " with " << idx.size()
                << " sample(s)\n";
      continue;
    }
    GmmComponent comp;
    comp.class_id = cls;
    comp.mean = Eigen::VectorXd::Zero(pca_dim);
    for (int i : idx) comp.mean += projected.col(i);
    comp.mean /= static_cast<double>(idx.size());
    comp.var_diag = Eigen::VectorXd::Zero(pca_dim);
    for (int i : idx) comp.var_diag += (projected.col(i) - comp.mean).array().square().matrix();
    comp.var_diag /= static_cast<double>(idx.size());
    comp.var_diag = comp.var_diag.cwiseMax(kCovFloor);
    comp.prior = static_cast<double>(idx.size());
    kept_samples += static_cast<int>(idx.size());
    model.gmm.push_back(std::move(comp));
  }
  if (model.gmm.empty()) throw std::runtime_error("fit_estimator: no class with >= 2 samples");
  for (GmmComponent& comp : model.gmm) comp.prior /= static_cast<double>(kept_samples);
  model.estimator_fitted = true;
}

void fit_normalizer(SegModel& model, const Eigen::VectorXd& raw_samples) {
  const int n = static_cast<int>(raw_samples.size());
  if (n < 2) throw std::runtime_error("fit_normalizer: need at least 2 samples");
  const double mean = raw_samples.mean();
  const double var = (raw_samples.array() - mean).square().sum() / static_cast<double>(n);
  const double std_dev = std::sqrt(var);
  model.normalizer.max_seen = raw_samples.maxCoeff();
  model.normalizer.threshold =
      std_dev == 0.0 ? mean : mean + std_dev * inv_normal_cdf(0.8);
  // Invariant max_seen >= threshold; heavily skewed samples could break it.
  model.normalizer.threshold = std::min(model.normalizer.threshold, model.normalizer.max_seen);
  model.normalizer.fitted = true;
}

double normalize_uncertainty(const SegModel& model, double raw) {
  const UncertaintyNormalizer& nz = model.normalizer;
  if (!nz.fitted) throw std::runtime_error("uncertainty normalizer not fitted");
  if (raw > nz.max_seen) return 1.0;
  if (raw < nz.threshold) return 0.0;
  const double span = nz.max_seen - nz.threshold;
  if (span <= 0.0) return 0.0;  // degenerate fit: everything <= max_seen maps to 0
  return (raw - nz.threshold) / span;
}

Eigen::VectorXd normalize_uncertainty(const SegModel& model, const Eigen::VectorXd& raw) {
  Eigen::VectorXd out(raw.size());
  for (int i = 0; i < raw.size(); ++i) out[i] = normalize_uncertainty(model, raw[i]);
  return out;
}

namespace {

// Softmax columns in place, returns mean cross-entropy against labels.
double softmax_loss(Eigen::MatrixXd& logits, const Eigen::VectorXi& labels) {
  const int n = static_cast<int>(logits.cols());
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = logits.col(i).maxCoeff();
    Eigen::VectorXd e = (logits.col(i).array() - m).exp();
    const double z = e.sum();
    loss -= std::log(e[labels[i]] / z);
    logits.col(i) = e / z;
  }
  return loss / n;
}

}  // namespace

double cross_entropy(const SegModel& model, const Eigen::MatrixXd& features,
                     const Eigen::VectorXi& labels) {
  Eigen::MatrixXd logits =
      (model.class_weights * (model.latent_proj * features)).colwise() + model.biases;
  return softmax_loss(logits, labels);
}

double train_step(SegModel& model, const Eigen::MatrixXd& features, const Eigen::VectorXi& labels,
                  double lr_latent, double lr_head) {
  const int B = static_cast<int>(features.cols());
  if (B == 0) return 0.0;
  const Eigen::MatrixXd latents = model.latent_proj * features;
  Eigen::MatrixXd probs = (model.class_weights * latents).colwise() + model.biases;
  const double loss = softmax_loss(probs, labels);

  // probs now holds softmax; turn it into dL/dlogits.
  for (int i = 0; i < B; ++i) probs(labels[i], i) -= 1.0;
  probs /= static_cast<double>(B);

  const Eigen::MatrixXd grad_head = probs * latents.transpose();
  const Eigen::VectorXd grad_bias = probs.rowwise().sum();
  const Eigen::MatrixXd grad_latent = (model.class_weights.transpose() * probs) * features.transpose();

  model.class_weights -= lr_head * grad_head;
  model.biases -= lr_head * grad_bias;
  model.latent_proj -= lr_latent * grad_latent;
  return loss;
}

double inv_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inv_normal_cdf: p outside (0,1)");
  // Acklam's rational approximation with one Halley refinement step.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement against the CDF expressed with erfc.
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

namespace {

void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
  out << name << " " << m.rows() << " " << m.cols() << "\n";
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) out << (j ? " " : "") << hex_double(m(i, j));
    out << "\n";
  }
}

Eigen::MatrixXd read_matrix(std::istream& in, const std::string& expect) {
  std::string name;
  int rows, cols;
  in >> name >> rows >> cols;
  if (name != expect) throw std::runtime_error("checkpoint: expected " + expect + ", got " + name);
  Eigen::MatrixXd m(rows, cols);
  std::string tok;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      in >> tok;
      m(i, j) = parse_double(tok);
    }
  return m;
}

}  // namespace

void save_checkpoint(const SegModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << "adasim-checkpoint v1\n";
  write_matrix(out, "latent_proj", model.latent_proj);
  write_matrix(out, "class_weights", model.class_weights);
  write_matrix(out, "biases", model.biases);
  out << "estimator " << (model.estimator_fitted ? 1 : 0) << "\n";
  if (model.estimator_fitted) {
    write_matrix(out, "pca_mean", model.pca_mean);
    write_matrix(out, "pca_basis", model.pca_basis);
    out << "gmm " << model.gmm.size() << "\n";
    for (const GmmComponent& comp : model.gmm) {
      out << comp.class_id << " " << hex_double(comp.prior);
      for (int p = 0; p < comp.mean.size(); ++p) out << " " << hex_double(comp.mean[p]);
      for (int p = 0; p < comp.var_diag.size(); ++p) out << " " << hex_double(comp.var_diag[p]);
      out << "\n";
    }
  }
  out << "normalizer " << (model.normalizer.fitted ? 1 : 0);
  if (model.normalizer.fitted)
    out << " " << hex_double(model.normalizer.threshold) << " "
        << hex_double(model.normalizer.max_seen);
  out << "\n";
}

SegModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  std::string line;
  std::getline(in, line);
  if (line != "adasim-checkpoint v1") throw std::runtime_error("bad checkpoint header: " + line);
  SegModel m;
  m.latent_proj = read_matrix(in, "latent_proj");
  m.class_weights = read_matrix(in, "class_weights");
  m.biases = read_matrix(in, "biases").col(0);
  std::string tok;
  int flag;
  in >> tok >> flag;
  m.estimator_fitted = flag != 0;
  if (m.estimator_fitted) {
    m.pca_mean = read_matrix(in, "pca_mean").col(0);
    m.pca_basis = read_matrix(in, "pca_basis");
    int count;
    in >> tok >> count;
    const int P = static_cast<int>(m.pca_basis.rows());
    for (int j = 0; j < count; ++j) {
      GmmComponent comp;
      in >> comp.class_id >> tok;
      comp.prior = parse_double(tok);
      comp.mean.resize(P);
      comp.var_diag.resize(P);
      for (int p = 0; p < P; ++p) {
        in >> tok;
        comp.mean[p] = parse_double(tok);
      }
      for (int p = 0; p < P; ++p) {
        in >> tok;
        comp.var_diag[p] = parse_double(tok);
      }
      m.gmm.push_back(std::move(comp));
    }
  }
  in >> tok >> flag;
  m.normalizer.fitted = flag != 0;
  if (m.normalizer.fitted) {
    in >> tok;
    m.normalizer.threshold = parse_double(tok);
    in >> tok;
    m.normalizer.max_seen = parse_double(tok);
  }
  return m;
}

}  // namespace adasim
