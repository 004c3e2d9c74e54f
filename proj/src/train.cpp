#include <Eigen/Core>

#include <cmath>
#include <sstream>

#include "dpcnn/dpcnn.hpp"

namespace dpcnn {
namespace {

template <class T>
void gather_batch(const Dataset& data, const std::vector<size_t>& idx,
                  std::vector<T>& stacks, std::vector<int>& labels) {
  const size_t block = data.examples.empty() ? 0 : data.examples[0].images.size();
  stacks.resize(idx.size() * block);
  labels.resize(idx.size());
  for (size_t b = 0; b < idx.size(); ++b) {
    const SubImageStack& ex = data.examples[idx[b]];
    T* dst = stacks.data() + b * block;
    for (size_t i = 0; i < block; ++i) dst[i] = static_cast<T>(ex.images[i]);
    labels[b] = ex.label;
  }
}

template <class T>
TrainedModel<T> run_training(const Dataset& train, const Dataset& test,
                             const std::vector<double>* w_fixed,
                             const TrainConfig& cfg) {
  cfg.validate();
  if (train.examples.empty()) throw std::invalid_argument("train: empty training set");
  const int L = static_cast<int>(train.header.led_count);
  const int side = static_cast<int>(train.header.height);
  if (train.header.width != train.header.height)
    throw std::invalid_argument("train: detector images must be square");
  const int P = side * side;
  const int classes = static_cast<int>(train.header.class_count);
  const int B = cfg.batch;

  const int old_threads = Eigen::nbThreads();
  if (cfg.deterministic) Eigen::setNbThreads(1);
  else if (cfg.threads > 0) Eigen::setNbThreads(cfg.threads);

  TrainedModel<T> out;
  out.model = std::make_unique<Cnn<T>>(side, classes, std::max(B, 100));
  Cnn<T>& model = *out.model;
  model.set_keep_prob(cfg.dropout_keep);
  model.init_params(cfg.seed);

  // physical-layer weights: learned from a random signed start, or frozen
  Tensor<T> w({L}), gw({L});
  if (w_fixed) {
    if (w_fixed->size() != static_cast<size_t>(L))
      throw std::invalid_argument("train: fixed weight length mismatch");
    for (int l = 0; l < L; ++l) w[l] = static_cast<T>((*w_fixed)[l]);
  } else {
    Rng wrng = make_stream(cfg.seed, StreamTag::kWeightInit);
    for (int l = 0; l < L; ++l) w[l] = static_cast<T>(wrng.uniform(-0.5, 0.5));
  }

  std::vector<Tensor<T>*> params = model.params();
  std::vector<Tensor<T>*> grads = model.grads();
  if (!w_fixed) {
    params.insert(params.begin(), &w);
    grads.insert(grads.begin(), &gw);
  }
  nn::AdamState<T> adam;
  adam.init(params, cfg.step_size);

  std::vector<T> stacks, images(static_cast<size_t>(B) * P),
      dimages(static_cast<size_t>(B) * P);
  std::vector<int> labels;
  std::vector<size_t> batch_idx(B);
  TrialResult& result = out.result;
  result.loss_trace.reserve(static_cast<size_t>(cfg.iterations));

  for (long it = 0; it < cfg.iterations; ++it) {
    Rng brng = make_stream(cfg.seed, StreamTag::kBatch, static_cast<uint64_t>(it));
    for (int b = 0; b < B; ++b)
      batch_idx[b] = brng.below(train.examples.size());
    gather_batch(train, batch_idx, stacks, labels);

    physical_layer_forward(stacks.data(), B, L, P, w.data(), images.data());
    Rng drng = make_stream(cfg.seed, StreamTag::kDropout, static_cast<uint64_t>(it));
    const double loss =
        model.forward(images.data(), B, labels.data(), true, &drng);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "training diverged: non-finite loss at iteration " << it
          << " (batch of " << B << " starting with example " << batch_idx[0] << ")";
      Eigen::setNbThreads(old_threads);
      throw TrainingDivergedError(msg.str());
    }
    result.loss_trace.push_back(loss);

    model.backward(w_fixed ? nullptr : dimages.data());
    if (!w_fixed)
      physical_layer_backward(stacks.data(), B, L, P, w.data(), dimages.data(),
                              gw.data(), static_cast<T*>(nullptr));

    if (cfg.optimizer == TrainConfig::Optimizer::kAdam)
      nn::adam_step(params, grads, adam);
    else
      nn::sgd_step(params, grads, cfg.step_size);
  }

  out.w.assign(w.data(), w.data() + L);
  EvalResult ev = evaluate(model, out.w, test);
  result.w.assign(out.w.begin(), out.w.end());
  result.test_accuracy = ev.accuracy;
  result.predictions = std::move(ev.predictions);
  result.confusion = std::move(ev.confusion);

  Eigen::setNbThreads(old_threads);
  return out;
}

}  // namespace

template <class T>
TrainedModel<T> train_dpcnn(const Dataset& train, const Dataset& test,
                            const TrainConfig& cfg) {
  return run_training<T>(train, test, nullptr, cfg);
}

template <class T>
TrainedModel<T> train_fixed(const Dataset& train, const Dataset& test,
                            const std::vector<double>& w_fixed,
                            const TrainConfig& cfg) {
  return run_training<T>(train, test, &w_fixed, cfg);
}

template <class T>
EvalResult evaluate(Cnn<T>& model, const std::vector<T>& w, const Dataset& test) {
  if (test.examples.empty()) throw std::invalid_argument("evaluate: empty test set");
  const int L = static_cast<int>(test.header.led_count);
  if (w.size() != static_cast<size_t>(L))
    throw std::invalid_argument("evaluate: weight length mismatch");
  const int side = static_cast<int>(test.header.height);
  const int P = side * side;
  const int classes = model.classes();
  const int cap = model.batch_capacity();

  EvalResult ev;
  ev.predictions.resize(test.examples.size());
  ev.confusion.assign(static_cast<size_t>(classes),
                      std::vector<long>(static_cast<size_t>(classes), 0));

  std::vector<T> stacks, images;
  std::vector<int> labels;
  std::vector<size_t> idx;
  size_t done = 0;
  long correct = 0;
  while (done < test.examples.size()) {
    const size_t n = std::min<size_t>(cap, test.examples.size() - done);
    idx.resize(n);
    for (size_t i = 0; i < n; ++i) idx[i] = done + i;
    gather_batch(test, idx, stacks, labels);
    images.resize(n * P);
    physical_layer_forward(stacks.data(), static_cast<int>(n), L, P, w.data(),
                           images.data());
    model.forward(images.data(), static_cast<int>(n), nullptr, false, nullptr);
    const T* logits = model.logits();
    for (size_t i = 0; i < n; ++i) {
      const T* z = logits + i * classes;
      int arg = 0;
      for (int c = 1; c < classes; ++c)
        if (z[c] > z[arg]) arg = c;
      ev.predictions[done + i] = arg;
      const int y = labels[i];
      if (y >= 0 && y < classes) {
        ev.confusion[static_cast<size_t>(y)][static_cast<size_t>(arg)]++;
        if (arg == y) ++correct;
      }
    }
    done += n;
  }
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(test.examples.size());
  return ev;
}

template TrainedModel<float> train_dpcnn<float>(const Dataset&, const Dataset&,
                                                const TrainConfig&);
template TrainedModel<double> train_dpcnn<double>(const Dataset&, const Dataset&,
                                                  const TrainConfig&);
template TrainedModel<float> train_fixed<float>(const Dataset&, const Dataset&,
                                                const std::vector<double>&,
                                                const TrainConfig&);
template TrainedModel<double> train_fixed<double>(const Dataset&, const Dataset&,
                                                  const std::vector<double>&,
                                                  const TrainConfig&);
template EvalResult evaluate<float>(Cnn<float>&, const std::vector<float>&,
                                    const Dataset&);
template EvalResult evaluate<double>(Cnn<double>&, const std::vector<double>&,
                                     const Dataset&);

}  // namespace dpcnn
