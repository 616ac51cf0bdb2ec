#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gvt/error.hpp"
#include "gvt/random.hpp"
#include "gvt/records.hpp"

// Weighted multi-subset sampling.
namespace gvt {

enum class TaskKind { Detection, Grounding, Conversation };
std::string_view to_string(TaskKind t);
TaskKind parse_task(std::string_view name);

struct SubsetUnit {
  std::string name;
  TaskKind task = TaskKind::Detection;
  std::vector<Record> records;
  double weight = 1.0;
};

struct Draw {
  std::uint64_t index = 0;  // position in the draw stream
  std::size_t subset = 0;
  std::size_t record = 0;
};

// Subsets are chosen with probability w_i / sum(w) on every draw (with replacement).
// Within a subset, records come from a shuffled stream that is reshuffled whenever
// it runs out. Subsets with positive weight but no records are left out of the
// distribution with a warning; if nothing remains, construction throws EmptySubset.
//
// The whole stream is a function of the seed. A consumer k of m that needs its own
// share takes draws k, k + m, ... of the same stream.
class WeightedSampler {
 public:
  WeightedSampler(const std::vector<SubsetUnit>& units, std::uint64_t seed);

  Draw next();
  const Diagnostics& warnings() const { return warnings_; }

 private:
  struct Stream {
    Rng rng;
    std::vector<std::size_t> order;
    std::size_t pos = 0;
    std::size_t size = 0;
  };

  std::vector<double> cumulative_;
  std::vector<std::size_t> subset_of_;  // entry in cumulative_ -> unit index
  std::vector<Stream> streams_;
  Rng choose_;
  std::uint64_t drawn_ = 0;
  Diagnostics warnings_;
};

}  // namespace gvt
