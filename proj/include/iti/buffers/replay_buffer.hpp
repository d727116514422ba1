#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>

#include "iti/errors.hpp"
#include "iti/nn/checkpoint.hpp"
#include "iti/rng.hpp"

namespace iti::buffers {

// (o_t, a_t, o_{t+1}); deliberately has no reward field.
struct Transition {
  Eigen::VectorXd observation;
  Eigen::VectorXd action;
  Eigen::VectorXd next_observation;
};

// (z_t, a_t, z_{t+1}) with z from the frozen pretrained encoder.
struct LatentTransition {
  Eigen::VectorXd latent;
  Eigen::VectorXd action;
  Eigen::VectorXd next_latent;
};

// Column-stacked view of a set of transitions.
struct TransitionBatch {
  Eigen::MatrixXd first;
  Eigen::MatrixXd action;
  Eigen::MatrixXd next;

  Eigen::Index size() const { return first.cols(); }
};

template <typename Record>
struct RecordFields;

template <>
struct RecordFields<Transition> {
  static auto fields(const Transition& r) { return std::tie(r.observation, r.action, r.next_observation); }
  static Transition make(Eigen::VectorXd a, Eigen::VectorXd b, Eigen::VectorXd c) {
    return {std::move(a), std::move(b), std::move(c)};
  }
};

template <>
struct RecordFields<LatentTransition> {
  static auto fields(const LatentTransition& r) { return std::tie(r.latent, r.action, r.next_latent); }
  static LatentTransition make(Eigen::VectorXd a, Eigen::VectorXd b, Eigen::VectorXd c) {
    return {std::move(a), std::move(b), std::move(c)};
  }
};

// Bounded FIFO ring; once full, each push evicts the oldest record.
template <typename Record>
class ReplayBuffer {
 public:
  ReplayBuffer() = default;
  ReplayBuffer(Eigen::Index first_dim, Eigen::Index action_dim, Eigen::Index capacity)
      : first_dim_(first_dim), action_dim_(action_dim), capacity_(capacity) {
    if (first_dim < 1 || action_dim < 1 || capacity < 1)
      throw ConfigError("ReplayBuffer: dims and capacity must be >= 1");
  }

  Eigen::Index first_dim() const { return first_dim_; }
  Eigen::Index action_dim() const { return action_dim_; }
  Eigen::Index capacity() const { return capacity_; }
  Eigen::Index size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::uint64_t inserted() const { return inserted_; }

  void push(const Record& r) {
    const auto& [a, b, c] = RecordFields<Record>::fields(r);
    push(a, b, c);
  }

  void push(const Eigen::Ref<const Eigen::VectorXd>& first, const Eigen::Ref<const Eigen::VectorXd>& action,
            const Eigen::Ref<const Eigen::VectorXd>& next) {
    if (first.size() != first_dim_ || next.size() != first_dim_ || action.size() != action_dim_)
      throw ConfigError("ReplayBuffer: record dims do not match the buffer");
    Eigen::Index slot;
    if (size_ < capacity_) {
      slot = (head_ + size_) % capacity_;
      ensure_storage(slot + 1);
      ++size_;
    } else {
      slot = head_;
      head_ = (head_ + 1) % capacity_;
    }
    first_.col(slot) = first;
    action_.col(slot) = action;
    next_.col(slot) = next;
    ++inserted_;
  }

  // i = 0 is the oldest stored record.
  Record at(Eigen::Index i) const {
    const auto s = slot_of(i);
    return RecordFields<Record>::make(first_.col(s), action_.col(s), next_.col(s));
  }

  template <typename Indices>
  TransitionBatch gather(const Indices& indices) const {
    TransitionBatch b;
    const auto n = static_cast<Eigen::Index>(std::size(indices));
    b.first.resize(first_dim_, n);
    b.action.resize(action_dim_, n);
    b.next.resize(first_dim_, n);
    Eigen::Index k = 0;
    for (auto i : indices) {
      const auto s = slot_of(static_cast<Eigen::Index>(i));
      b.first.col(k) = first_.col(s);
      b.action.col(k) = action_.col(s);
      b.next.col(k) = next_.col(s);
      ++k;
    }
    return b;
  }

  // Oldest-first.
  TransitionBatch all() const {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(size_));
    for (Eigen::Index i = 0; i < size_; ++i) idx[std::size_t(i)] = i;
    return gather(idx);
  }

  // Uniform with replacement.
  TransitionBatch sample_batch(Eigen::Index batch_size, Rng& rng) const {
    if (empty()) throw UsageError("sample_batch: buffer is empty");
    if (batch_size < 1) throw ConfigError("sample_batch: batch size must be >= 1");
    std::uniform_int_distribution<Eigen::Index> pick(0, size_ - 1);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(batch_size));
    for (auto& i : idx) i = pick(rng);
    return gather(idx);
  }

  void save_to(nn::Checkpoint& ckpt, const std::string& prefix) const {
    const auto b = all();
    ckpt.put(prefix + ".observations", b.first.transpose());
    ckpt.put(prefix + ".actions", b.action.transpose());
    ckpt.put(prefix + ".next_observations", b.next.transpose());
    ckpt.put(prefix + ".capacity", Eigen::Matrix<double, 1, 1>::Constant(double(capacity_)));
  }

  static ReplayBuffer load_from(const nn::Checkpoint& ckpt, const std::string& prefix) {
    const Eigen::MatrixXd first = ckpt.get(prefix + ".observations");
    const Eigen::MatrixXd action = ckpt.get(prefix + ".actions");
    const Eigen::MatrixXd next = ckpt.get(prefix + ".next_observations");
    const auto capacity = static_cast<Eigen::Index>(ckpt.get(prefix + ".capacity")(0, 0));
    if (first.rows() != action.rows() || first.rows() != next.rows() || first.cols() != next.cols())
      throw ConfigError("checkpoint: inconsistent buffer tensors under " + prefix);
    ReplayBuffer buf(first.cols(), action.cols(), capacity);
    for (Eigen::Index i = 0; i < first.rows(); ++i)
      buf.push(first.row(i).transpose(), action.row(i).transpose(), next.row(i).transpose());
    return buf;
  }

 private:
  Eigen::Index slot_of(Eigen::Index i) const {
    if (i < 0 || i >= size_) throw UsageError("ReplayBuffer: index out of range");
    return (head_ + i) % capacity_;
  }

  void ensure_storage(Eigen::Index cols) {
    if (cols <= first_.cols()) return;
    const Eigen::Index grown = std::min(capacity_, std::max<Eigen::Index>(cols, 2 * first_.cols() + 64));
    first_.conservativeResize(first_dim_, grown);
    action_.conservativeResize(action_dim_, grown);
    next_.conservativeResize(first_dim_, grown);
  }

  Eigen::Index first_dim_ = 0;
  Eigen::Index action_dim_ = 0;
  Eigen::Index capacity_ = 0;
  Eigen::Index head_ = 0;
  Eigen::Index size_ = 0;
  std::uint64_t inserted_ = 0;
  Eigen::MatrixXd first_, action_, next_;
};

using TransitionBuffer = ReplayBuffer<Transition>;
using LatentBuffer = ReplayBuffer<LatentTransition>;

// z = F(o) on both endpoints of every transition; actions pass through.
template <typename Encoder>
LatentBuffer encode_source_buffer(const TransitionBuffer& buffer, const Encoder& encoder) {
  if (encoder.input_dim() != buffer.first_dim())
    throw ConfigError("encode_source_buffer: encoder input width does not match observations");
  LatentBuffer out(encoder.output_dim(), buffer.action_dim(), buffer.capacity());
  constexpr Eigen::Index chunk = 4096;
  for (Eigen::Index start = 0; start < buffer.size(); start += chunk) {
    const auto n = std::min(chunk, buffer.size() - start);
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[std::size_t(i)] = start + i;
    const auto b = buffer.gather(idx);
    const Eigen::MatrixXd z = encoder.encode(b.first);
    const Eigen::MatrixXd z_next = encoder.encode(b.next);
    for (Eigen::Index i = 0; i < n; ++i) out.push(z.col(i), b.action.col(i), z_next.col(i));
  }
  return out;
}

}  // namespace iti::buffers
