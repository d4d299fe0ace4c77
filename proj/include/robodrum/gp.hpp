#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "robodrum/errors.hpp"

namespace robodrum {

// Exact GP regression with a squared-exponential kernel over scalar time,
// shared across any number of output channels that sample the same times.
// The posterior follows the standard closed form: with K the train/train
// kernel matrix and k* the train/query column,
//   mean = k*^T (K + sigma_n^2 I)^{-1} y
//   var  = k(q, q) - k*^T (K + sigma_n^2 I)^{-1} k*
// computed through a cached Cholesky factorization. When the factorization
// fails (near-duplicate inputs at long length-scales) a diagonal jitter is
// escalated and recorded on the model.

class GpModel {
 public:
  /// Fits one factorization for all channels. Times must be strictly
  /// increasing; channels must all have times.size() values.
  static GpModel fit(std::span<const double> times,
                     std::span<const std::vector<double>> channels,
                     double length_scale, double noise_variance,
                     double signal_variance = 1.0) {
    if (times.size() < 2)
      throw std::invalid_argument("GpModel: need at least 2 points");
    if (!(length_scale > 0.0))
      throw std::invalid_argument("GpModel: non-positive length scale");
    if (noise_variance < 0.0)
      throw std::invalid_argument("GpModel: negative noise variance");
    if (!(signal_variance > 0.0))
      throw std::invalid_argument("GpModel: non-positive signal variance");
    for (size_t i = 1; i < times.size(); ++i)
      if (!(times[i] > times[i - 1]))
        throw std::invalid_argument(
            "GpModel: times must be strictly increasing (duplicate inputs)");
    for (const auto& ch : channels)
      if (ch.size() != times.size())
        throw std::invalid_argument("GpModel: channel length mismatch");

    GpModel m;
    m.length_scale_ = length_scale;
    m.noise_variance_ = noise_variance;
    m.signal_variance_ = signal_variance;
    m.times_ = Eigen::Map<const Eigen::VectorXd>(times.data(),
                                                 static_cast<long>(times.size()));

    const long n = m.times_.size();
    Eigen::MatrixXd kernel(n, n);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j <= i; ++j) {
        double v = m.kernel_value(m.times_[i], m.times_[j]);
        kernel(i, j) = v;
        kernel(j, i) = v;
      }

    for (double jitter : {0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4}) {
      Eigen::MatrixXd reg = kernel;
      reg.diagonal().array() += noise_variance + jitter * signal_variance;
      m.llt_.compute(reg);
      if (m.llt_.info() == Eigen::Success) {
        m.jitter_ = jitter;
        break;
      }
      m.jitter_ = -1.0;
    }
    if (m.jitter_ < 0.0)
      throw std::runtime_error("GpModel: factorization failed at max jitter");

    m.alpha_.resize(n, static_cast<long>(channels.size()));
    for (size_t c = 0; c < channels.size(); ++c) {
      Eigen::Map<const Eigen::VectorXd> y(channels[c].data(), n);
      m.alpha_.col(static_cast<long>(c)) = m.llt_.solve(y);
    }
    return m;
  }

  struct Prediction {
    std::vector<std::vector<double>> mean;  // [channel][query]
    std::vector<double> variance;           // per query, shared by channels
    bool extrapolated = false;  // any query outside [t_min, t_max]
  };

  Prediction predict(std::span<const double> query_times) const {
    const long n = times_.size();
    const long channels = alpha_.cols();
    Prediction out;
    out.mean.assign(static_cast<size_t>(channels),
                    std::vector<double>(query_times.size(), 0.0));
    out.variance.assign(query_times.size(), 0.0);

    Eigen::VectorXd kstar(n);
    for (size_t q = 0; q < query_times.size(); ++q) {
      double t = query_times[q];
      if (t < times_[0] || t > times_[n - 1]) out.extrapolated = true;
      for (long i = 0; i < n; ++i) kstar[i] = kernel_value(t, times_[i]);
      for (long c = 0; c < channels; ++c)
        out.mean[static_cast<size_t>(c)][q] = kstar.dot(alpha_.col(c));
      Eigen::VectorXd v = llt_.solve(kstar);
      out.variance[q] = std::max(0.0, signal_variance_ - kstar.dot(v));
    }
    return out;
  }

  /// Convenience for single-channel mean-only use.
  std::vector<double> predict_mean(std::span<const double> query_times,
                                   size_t channel = 0) const {
    return predict(query_times).mean.at(channel);
  }

  double kernel_value(double a, double b) const {
    double d = a - b;
    return signal_variance_ *
           std::exp(-d * d / (2.0 * length_scale_ * length_scale_));
  }

  double length_scale() const { return length_scale_; }
  double noise_variance() const { return noise_variance_; }
  double signal_variance() const { return signal_variance_; }
  double jitter_used() const { return jitter_; }
  long num_points() const { return times_.size(); }
  double t_min() const { return times_[0]; }
  double t_max() const { return times_[times_.size() - 1]; }

 private:
  GpModel() = default;

  Eigen::VectorXd times_;
  Eigen::MatrixXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double length_scale_ = 0.1;
  double noise_variance_ = 0.0;
  double signal_variance_ = 1.0;
  double jitter_ = 0.0;
};

}  // namespace robodrum
