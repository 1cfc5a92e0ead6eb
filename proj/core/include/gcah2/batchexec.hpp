#pragma once
//
// Project     : gcah2
// Module      : batchexec.hpp
// Description : batched execution of triangle pair quadrature tasks, one
//               task list per singularity case
//

#include <array>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>

#include "gcah2/assembly.hpp"

namespace gcah2 {

struct QuadTask {
  Index row_triangle;
  Index col_triangle;
  Index block;
  std::array<Index, 3> row_slots;  // local rows in the target block, or none
  std::array<Index, 3> col_slots;
};

struct BatchRecord {
  PairKind kind;
  std::size_t size;
  bool homogeneous;  // every task classified as `kind`
};

struct CaseStatistics {
  std::size_t batches = 0;
  std::size_t tasks = 0;
  double seconds = 0.0;
};

inline constexpr std::size_t default_batch_capacity = 4096;

//
// Tasks are appended to the list of their singularity case; a full list
// is sealed and executed by the worker pool while enqueueing continues.
// finalize() adds all results to the target blocks sorted by (block,
// enqueue order within the block), so the blocks do not depend on the
// capacity or the number of threads. Several producers may enqueue
// concurrently as long as each block is filled by a single producer.
//
class BatchExecutor {
 public:
  struct Options {
    std::size_t capacity = default_batch_capacity;
    unsigned threads = 0;  // 0: hardware concurrency
  };

  explicit BatchExecutor(const PairIntegrator& integrator) : BatchExecutor(integrator, Options{}) {}
  BatchExecutor(const PairIntegrator& integrator, Options options);
  ~BatchExecutor();

  BatchExecutor(const BatchExecutor&) = delete;
  BatchExecutor& operator=(const BatchExecutor&) = delete;

  // new zero block, returns its identifier
  Index add_block(Index rows, Index cols);

  void enqueue(const QuadTask& task);
  // enqueues all pairs of the two tables for the block
  void enqueue_block(Index block, const TriangleTable& rows, const TriangleTable& cols);

  void finalize();
  bool finalized() const { return finalized_; }

  std::size_t block_count() const { return blocks_.size(); }
  const Eigen::MatrixXd& block(Index b) const;
  Eigen::MatrixXd take_block(Index b);

  const std::array<CaseStatistics, pair_kind_count>& statistics() const { return stats_; }
  const std::vector<BatchRecord>& batches() const { return records_; }
  std::size_t executed_tasks() const { return executed_; }
  // header line plus one row per case
  std::string statistics_csv() const;

 private:
  struct Pending {
    QuadTask task;
    Index sequence;
    SingularityCase configuration;
  };
  struct Result {
    Index block;
    Index sequence;
    std::array<Index, 3> row_slots, col_slots;
    LocalMatrix values;
  };
  struct Batch {
    PairKind kind;
    std::vector<Pending> tasks;
  };

  void submit(Batch batch, std::unique_lock<std::mutex>& lock);
  void execute(const Batch& batch);
  void worker_loop();

  const PairIntegrator* integrator_;
  Options options_;
  unsigned workers_count_;

  std::mutex mutex_;
  std::condition_variable work_ready_, work_done_;
  std::deque<Batch> queue_;
  std::size_t running_ = 0;
  bool stopping_ = false;
  std::vector<std::jthread> workers_;

  std::array<std::vector<Pending>, pair_kind_count> lists_;
  std::vector<Eigen::MatrixXd> blocks_;
  std::vector<Index> next_sequence_;
  std::vector<Result> results_;
  std::vector<BatchRecord> records_;
  std::array<CaseStatistics, pair_kind_count> stats_{};
  std::size_t executed_ = 0;
  bool finalized_ = false;
};

}  // namespace gcah2
