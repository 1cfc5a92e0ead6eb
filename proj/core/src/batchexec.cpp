//
// Project     : gcah2
// Module      : batchexec.cpp
// Description : task lists, worker pool and deterministic scatter
//

#include "gcah2/batchexec.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

namespace gcah2 {

BatchExecutor::BatchExecutor(const PairIntegrator& integrator, Options options)
    : integrator_(&integrator), options_(options), workers_count_(resolve_threads(options.threads)) {
  if (options_.capacity == 0) throw ParameterError("BatchExecutor: capacity must be positive");
  // a single thread executes sealed lists inline
  if (workers_count_ > 1)
    for (unsigned w = 0; w < workers_count_; ++w) workers_.emplace_back([this] { worker_loop(); });
}

BatchExecutor::~BatchExecutor() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  work_ready_.notify_all();
  workers_.clear();
}

Index BatchExecutor::add_block(Index rows, Index cols) {
  std::lock_guard lock(mutex_);
  if (finalized_) throw StateError("BatchExecutor: add_block after finalize");
  blocks_.push_back(Eigen::MatrixXd::Zero(rows, cols));
  next_sequence_.push_back(0);
  return static_cast<Index>(blocks_.size() - 1);
}

void BatchExecutor::enqueue(const QuadTask& task) {
  const auto c = integrator_->classify(task.row_triangle, task.col_triangle);
  std::unique_lock lock(mutex_);
  if (finalized_) throw StateError("BatchExecutor: enqueue after finalize");
  if (task.block < 0 || static_cast<std::size_t>(task.block) >= blocks_.size())
    throw ArgumentError("BatchExecutor: unknown block");

  auto& list = lists_[static_cast<int>(c.kind)];
  list.push_back({task, next_sequence_[task.block]++, c});
  if (list.size() >= options_.capacity) {
    Batch batch{c.kind, std::move(list)};
    list = {};
    list.reserve(options_.capacity);
    submit(std::move(batch), lock);
  }
}

void BatchExecutor::enqueue_block(Index block, const TriangleTable& rows, const TriangleTable& cols) {
  for (const auto& r : rows)
    for (const auto& c : cols) enqueue({r.triangle, c.triangle, block, r.slots, c.slots});
}

void BatchExecutor::submit(Batch batch, std::unique_lock<std::mutex>& lock) {
  if (workers_.empty()) {
    lock.unlock();
    execute(batch);
    lock.lock();
    return;
  }
  queue_.push_back(std::move(batch));
  lock.unlock();
  work_ready_.notify_one();
  lock.lock();
}

void BatchExecutor::execute(const Batch& batch) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<Result> local;
  local.reserve(batch.tasks.size());
  bool homogeneous = true;
  for (const auto& p : batch.tasks) {
    homogeneous = homogeneous && p.configuration.kind == batch.kind;
    local.push_back({p.task.block, p.sequence, p.task.row_slots, p.task.col_slots,
                     integrator_->integrate(p.task.row_triangle, p.task.col_triangle, p.configuration)});
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  std::lock_guard lock(mutex_);
  results_.insert(results_.end(), local.begin(), local.end());
  records_.push_back({batch.kind, batch.tasks.size(), homogeneous});
  auto& s = stats_[static_cast<int>(batch.kind)];
  ++s.batches;
  s.tasks += batch.tasks.size();
  s.seconds += seconds;
  executed_ += batch.tasks.size();
}

void BatchExecutor::worker_loop() {
  std::unique_lock lock(mutex_);
  for (;;) {
    work_ready_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
    if (queue_.empty()) return;
    Batch batch = std::move(queue_.front());
    queue_.pop_front();
    ++running_;
    lock.unlock();
    execute(batch);
    lock.lock();
    --running_;
    if (queue_.empty() && running_ == 0) work_done_.notify_all();
  }
}

void BatchExecutor::finalize() {
  std::unique_lock lock(mutex_);
  if (finalized_) return;
  for (auto& list : lists_) {
    if (list.empty()) continue;
    Batch batch{list.front().configuration.kind, std::move(list)};
    list = {};
    submit(std::move(batch), lock);
  }
  work_done_.wait(lock, [this] { return queue_.empty() && running_ == 0; });
  finalized_ = true;

  std::sort(results_.begin(), results_.end(), [](const Result& a, const Result& b) {
    return a.block < b.block || (a.block == b.block && a.sequence < b.sequence);
  });
  for (const auto& r : results_) scatter_add(blocks_[r.block], r.row_slots, r.col_slots, r.values);
  results_.clear();
  results_.shrink_to_fit();
}

const Eigen::MatrixXd& BatchExecutor::block(Index b) const {
  if (!finalized_) throw StateError("BatchExecutor: blocks are available after finalize");
  return blocks_.at(b);
}

Eigen::MatrixXd BatchExecutor::take_block(Index b) {
  if (!finalized_) throw StateError("BatchExecutor: blocks are available after finalize");
  return std::move(blocks_.at(b));
}

std::string BatchExecutor::statistics_csv() const {
  std::ostringstream out;
  out << "case,batches,tasks,seconds\n";
  for (int k = 0; k < pair_kind_count; ++k)
    out << to_string(static_cast<PairKind>(k)) << ',' << stats_[k].batches << ',' << stats_[k].tasks << ','
        << stats_[k].seconds << '\n';
  return out.str();
}

}  // namespace gcah2
