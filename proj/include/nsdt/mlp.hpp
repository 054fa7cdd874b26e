#pragma once

#include "nsdt/common.hpp"

#include <string>
#include <vector>

namespace nsdt {

// A named parameter block with an accumulated gradient of the same shape.
struct Tensor {
  std::string name;
  Matrix value;
  Matrix grad;

  void zero_grad() { grad = Matrix::Zero(value.rows(), value.cols()); }
  Index size() const { return value.size(); }
};

struct MlpCache {
  std::vector<Matrix> inputs;   // layer inputs; inputs[0] = X
  std::vector<Matrix> pre_act;  // tanh outputs before dropout, per hidden layer
  std::vector<Matrix> mask;     // dropout masks (scaled), empty when not training
  Vector y;                     // sigmoid outputs
};

// Shallow feed-forward operator module: tanh hidden layers, scalar sigmoid
// output in (0,1). Emulates one fuzzy relational operator over concatenated
// (argument, threshold) embedding pairs.
class OperatorMlp {
 public:
  void init(const std::string& name, int input_width, const std::vector<int>& hidden, Rng& rng);

  // rows of X are independent evaluations
  Vector forward(const Matrix& X, MlpCache* cache = nullptr, double dropout = 0.0,
                 Rng* rng = nullptr) const;
  double forward_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;

  // accumulates weight gradients, returns dL/dX
  Matrix backward(const MlpCache& cache, const Vector& dy);

  // this(x) == 1 - other(x) exactly: copy weights, negate the output layer
  void mirror_complement_of(const OperatorMlp& other);

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  int input_width() const { return input_; }
  bool initialized() const { return !layers_.empty(); }

 private:
  struct Layer {
    Tensor w;  // out x in
    Tensor b;  // 1 x out
  };
  std::vector<Layer> layers_;  // hidden layers then the scalar output layer
  int input_ = 0;
};

double stable_sigmoid(double z);

}  // namespace nsdt
