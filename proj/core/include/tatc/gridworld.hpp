#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace tatc {

using Rng = std::mt19937_64;

struct Cell {
  int row = 0;
  int col = 0;

  auto operator<=>(const Cell&) const = default;
};

enum class Move : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kNumMoves = 4;

class MazeParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable maze geometry. Free cells are enumerated in row-major order and
/// that enumeration defines the one-hot index of every state.
class GridSpec {
 public:
  /// Parses '#' (wall), '.' (free), 'S' (start, exactly one) and 'G' (goal,
  /// at most one). Rejects ragged rows and disconnected free space.
  static GridSpec from_ascii(std::string_view text);

  /// Open rows x cols room with the start in the bottom-left corner.
  static GridSpec open_room(int rows, int cols);

  int width() const { return width_; }
  int height() const { return height_; }
  Cell start() const { return start_; }
  std::optional<Cell> goal() const { return goal_; }
  std::span<const Cell> free_cells() const { return free_cells_; }
  int onehot_dim() const { return static_cast<int>(free_cells_.size()); }
  std::vector<Cell> walls() const;

  bool in_bounds(Cell c) const {
    return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_;
  }
  bool is_free(Cell c) const { return in_bounds(c) && index_[flat(c)] >= 0; }

  /// One-hot index of a free cell; throws std::out_of_range otherwise.
  int index_of(Cell c) const;
  Cell cell_at(int index) const { return free_cells_.at(static_cast<std::size_t>(index)); }

  GridSpec with_goal(Cell goal) const;
  GridSpec with_start(Cell start) const;
  std::string to_ascii() const;

 private:
  GridSpec() = default;
  int flat(Cell c) const { return c.row * width_ + c.col; }
  void validate_connected() const;

  int width_ = 0;
  int height_ = 0;
  Cell start_;
  std::optional<Cell> goal_;
  std::vector<Cell> free_cells_;
  std::vector<int> index_;  // flat cell -> free index, -1 for walls
};

GridSpec load_maze(std::string_view text);

/// Text of a shipped maze: "u-maze", "t-maze" or "4-rooms".
std::string_view builtin_maze_text(std::string_view name);

/// Built-in mazes plus "room-<n>" for an open n x n room.
GridSpec builtin_maze(std::string_view name);

struct Trajectory {
  std::vector<Cell> states;   // c + 1 entries
  std::vector<Move> actions;  // c entries
};

/// Moves to the neighbouring cell if it is free; bumping into a wall or the
/// boundary leaves the agent in place.
Cell step(const GridSpec& spec, Cell s, Move a);

Eigen::VectorXd one_hot(const GridSpec& spec, Cell s);

/// Reset decision of the non-uniform prior. The gate is only evaluated at the
/// boundary of a K-step block (step_counter % K == 0) and fires with
/// probability p_r there.
bool reset_gate(std::int64_t step_counter, std::int64_t K, double p_r, Rng& rng);

/// c steps of the uniformly random policy.
Trajectory random_walk(const GridSpec& spec, Cell start, int c, Rng& rng);

/// Draws from [0, n) uniformly.
int uniform_index(int n, Rng& rng);
double uniform_unit(Rng& rng);

}  // namespace tatc
