#pragma once

#include <functional>

#include "adas/backbone17.hpp"
#include "adas/kernels.hpp"
#include "adas/weights.hpp"

namespace adas {

/// Squeeze-and-excitation: gates = sigmoid(fc2(relu(fc1(avgpool(x))))),
/// output = x scaled per channel by its gate.
Tensor4 se_block(const Tensor4& input, const SeParams& se);

/// Reported after every numbered layer and after the head (layer 0).
struct LayerTrace {
  int layer = 0;
  const Tensor4& output;
  const Tensor4* pre_se = nullptr;  // set for layers carrying an SE block
  double elapsed_ms = 0.0;
};

using ForwardObserver = std::function<void(const LayerTrace&)>;

/// Immutable once built; forward() may run concurrently on distinct inputs.
class Backbone17Det {
 public:
  Backbone17Det(NetworkSpec spec, const WeightStore& store);
  Backbone17Det(NetworkSpec spec, NetworkWeights weights);

  const NetworkSpec& spec() const { return spec_; }
  const NetworkWeights& weights() const { return weights_; }

  /// image: (1,3,s,s), s a multiple of 32 in [320,608]. Returns the raw
  /// head tensor (1, anchors*(5+C), s/32, s/32).
  Tensor4 forward(const Tensor4& image, const ExecOptions& exec = {},
                  const ForwardObserver& observer = {}) const;

 private:
  void validate() const;

  NetworkSpec spec_;
  NetworkWeights weights_;
};

Tensor4 forward(const NetworkSpec& net, const WeightStore& store,
                const Tensor4& image, const ExecOptions& exec = {});

}  // namespace adas
