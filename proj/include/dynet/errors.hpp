#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dynet {

/// Input carried no usable data (no cascades, no candidate edges, empty network).
class EmptyInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The undirected support graph of a candidate-edge set is not connected.
/// Carries the connected components (as node index lists) for diagnostics.
class GraphDisconnectedError : public std::runtime_error {
 public:
  GraphDisconnectedError(std::string what, std::vector<std::vector<int>> comps)
      : std::runtime_error(std::move(what)), components(std::move(comps)) {}
  std::vector<std::vector<int>> components;
};

/// A node index was referenced that the model has never observed.
class UnknownNodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Count-table manipulation that would break the collapsed-state invariants,
/// e.g. removing an observation that is not present.
class BookkeepingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Exact enumeration requested on an instance above the supported size.
class SizeLimitError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A non-root infected node has no candidate parent of positive probability.
class OrphanNodeError : public std::runtime_error {
 public:
  OrphanNodeError(std::string what, int node_index)
      : std::runtime_error(std::move(what)), node(node_index) {}
  int node;
};

class InvalidConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Snapshot and ground-truth windows do not line up.
class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dynet
