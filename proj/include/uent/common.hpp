#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace uent {

// Row-major so a sample row is contiguous in memory.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DuplicatePoints : Error { using Error::Error; };
struct InvalidK : Error { using Error::Error; };
struct OutOfDomain : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct Diverged : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

// Immutable N x d sample matrix. Construction validates finiteness; estimators
// enforce their own minimum-count preconditions on top.
class SampleSet {
 public:
  explicit SampleSet(Matrix data);
  SampleSet(const std::vector<std::vector<double>>& rows);

  long n() const { return data_.rows(); }
  long dim() const { return data_.cols(); }
  const Matrix& data() const { return data_; }
  const double* row(long i) const { return data_.row(i).data(); }

  SampleSet select_rows(const std::vector<long>& idx) const;

 private:
  Matrix data_;
};

struct EstimateReport {
  double value = 0.0;
  std::string estimator;  // "KL", "KSG", "tKL", "tKSG", "UM-tKL", "UM-tKSG", "NF"
  int k = 1;
  std::string norm = "inf";  // KL only; others always use the sup norm
  long n_used = 0;
  long d = 0;
  std::optional<std::uint64_t> seed;
  double wall_time = 0.0;  // seconds
  std::string rng = "mt19937_64/splitmix64";
  // Uniformization reports record both addends of value = base_value + correction.
  std::optional<double> base_value;
  std::optional<double> correction;
  // Within-sample standard error of the per-point contributions.
  std::optional<double> std_err;
};

// CSV uses header x1..xd; doubles written with 17 significant digits so a
// write/read cycle is value-exact. Binary is a fixed little-endian layout.
void save_csv(const std::string& path, const SampleSet& s);
SampleSet load_csv(const std::string& path);
void save_binary(const std::string& path, const SampleSet& s);
SampleSet load_binary(const std::string& path);

std::string format_double(double v);  // shortest exact decimal, 17 digits max

}  // namespace uent
