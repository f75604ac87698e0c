#include "popa/classify.hpp"
#include "popa/error.hpp"

namespace popa {

TrainedModel train_knn(const Dataset& data, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  if (k > data.size()) {
    throw Error(ErrorCode::KTooLarge,
                "k=" + std::to_string(k) + " with " + std::to_string(data.size()) + " instances");
  }
  EncodedLabels enc = encode_labels(data);
  KnnPayload payload;
  payload.k = k;
  payload.points = data.values;
  payload.point_labels = std::move(enc.codes);

  TrainedModel model;
  model.labels = std::move(enc.names);
  model.feature_dim = data.feature_dim;
  model.payload = std::move(payload);
  return model;
}

}  // namespace popa
