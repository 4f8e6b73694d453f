#include "tatc/gridworld.hpp"

#include <algorithm>
#include <charconv>
#include <deque>

namespace tatc {

namespace {

std::vector<std::string_view> split_rows(std::string_view text) {
  std::vector<std::string_view> rows;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view row = text.substr(pos, end - pos);
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
    rows.push_back(row);
    pos = end + 1;
  }
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  return rows;
}

constexpr Cell offset(Move a) {
  switch (a) {
    case Move::kUp: return {-1, 0};
    case Move::kDown: return {1, 0};
    case Move::kLeft: return {0, -1};
    case Move::kRight: return {0, 1};
  }
  return {0, 0};
}

}  // namespace

GridSpec GridSpec::from_ascii(std::string_view text) {
  const auto rows = split_rows(text);
  if (rows.empty()) throw MazeParseError("maze is empty");

  GridSpec spec;
  spec.height_ = static_cast<int>(rows.size());
  spec.width_ = static_cast<int>(rows.front().size());
  if (spec.width_ == 0) throw MazeParseError("maze row 0 is empty");
  spec.index_.assign(static_cast<std::size_t>(spec.width_ * spec.height_), -1);

  int starts = 0;
  int goals = 0;
  for (int r = 0; r < spec.height_; ++r) {
    const auto row = rows[static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != spec.width_) {
      throw MazeParseError("maze row " + std::to_string(r) + " has length " +
                           std::to_string(row.size()) + ", expected " +
                           std::to_string(spec.width_));
    }
    for (int c = 0; c < spec.width_; ++c) {
      const char ch = row[static_cast<std::size_t>(c)];
      const Cell cell{r, c};
      switch (ch) {
        case '#':
          continue;
        case 'S':
          ++starts;
          spec.start_ = cell;
          break;
        case 'G':
          ++goals;
          spec.goal_ = cell;
          break;
        case '.':
          break;
        default:
          throw MazeParseError(std::string("unexpected character '") + ch + "' at row " +
                               std::to_string(r) + ", col " + std::to_string(c));
      }
      spec.index_[static_cast<std::size_t>(spec.flat(cell))] =
          static_cast<int>(spec.free_cells_.size());
      spec.free_cells_.push_back(cell);
    }
  }
  if (starts != 1) {
    throw MazeParseError("maze must contain exactly one 'S', found " + std::to_string(starts));
  }
  if (goals > 1) {
    throw MazeParseError("maze may contain at most one 'G', found " + std::to_string(goals));
  }
  spec.validate_connected();
  return spec;
}

GridSpec GridSpec::open_room(int rows, int cols) {
  if (rows < 1 || cols < 1) throw MazeParseError("room dimensions must be positive");
  std::string text;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) text += (r == rows - 1 && c == 0) ? 'S' : '.';
    text += '\n';
  }
  return from_ascii(text);
}

void GridSpec::validate_connected() const {
  std::vector<char> seen(free_cells_.size(), 0);
  std::deque<int> frontier{index_of(start_)};
  seen[static_cast<std::size_t>(frontier.front())] = 1;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const Cell cur = cell_at(frontier.front());
    frontier.pop_front();
    for (int a = 0; a < kNumMoves; ++a) {
      const Cell d = offset(static_cast<Move>(a));
      const Cell next{cur.row + d.row, cur.col + d.col};
      if (!is_free(next)) continue;
      const int idx = index_of(next);
      if (seen[static_cast<std::size_t>(idx)]) continue;
      seen[static_cast<std::size_t>(idx)] = 1;
      ++reached;
      frontier.push_back(idx);
    }
  }
  if (reached != free_cells_.size()) {
    throw MazeParseError("free cells are not connected: " + std::to_string(reached) + " of " +
                         std::to_string(free_cells_.size()) + " reachable from the start");
  }
}

std::vector<Cell> GridSpec::walls() const {
  std::vector<Cell> out;
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      if (index_[static_cast<std::size_t>(flat({r, c}))] < 0) out.push_back({r, c});
    }
  }
  return out;
}

int GridSpec::index_of(Cell c) const {
  if (!in_bounds(c) || index_[static_cast<std::size_t>(flat(c))] < 0) {
    throw std::out_of_range("cell (" + std::to_string(c.row) + ", " + std::to_string(c.col) +
                            ") is not a free cell");
  }
  return index_[static_cast<std::size_t>(flat(c))];
}

GridSpec GridSpec::with_goal(Cell goal) const {
  if (!is_free(goal)) throw std::invalid_argument("goal must be a free cell");
  GridSpec copy = *this;
  copy.goal_ = goal;
  return copy;
}

GridSpec GridSpec::with_start(Cell start) const {
  if (!is_free(start)) throw std::invalid_argument("start must be a free cell");
  GridSpec copy = *this;
  copy.start_ = start;
  return copy;
}

std::string GridSpec::to_ascii() const {
  std::string out;
  out.reserve(static_cast<std::size_t>((width_ + 1) * height_));
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      const Cell cell{r, c};
      if (!is_free(cell)) {
        out += '#';
      } else if (cell == start_) {
        out += 'S';
      } else if (goal_ && cell == *goal_) {
        out += 'G';
      } else {
        out += '.';
      }
    }
    out += '\n';
  }
  return out;
}

GridSpec load_maze(std::string_view text) { return GridSpec::from_ascii(text); }

GridSpec builtin_maze(std::string_view name) {
  constexpr std::string_view kRoom = "room-";
  if (name.starts_with(kRoom)) {
    int n = 0;
    const auto digits = name.substr(kRoom.size());
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || n < 1) {
      throw std::invalid_argument("bad room size in '" + std::string(name) + "'");
    }
    return GridSpec::open_room(n, n);
  }
  return load_maze(builtin_maze_text(name));
}

Cell step(const GridSpec& spec, Cell s, Move a) {
  const Cell d = offset(a);
  const Cell next{s.row + d.row, s.col + d.col};
  return spec.is_free(next) ? next : s;
}

Eigen::VectorXd one_hot(const GridSpec& spec, Cell s) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(spec.onehot_dim());
  v[spec.index_of(s)] = 1.0;
  return v;
}

int uniform_index(int n, Rng& rng) {
  return std::uniform_int_distribution<int>(0, n - 1)(rng);
}

double uniform_unit(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

bool reset_gate(std::int64_t step_counter, std::int64_t K, double p_r, Rng& rng) {
  if (K <= 0) throw std::invalid_argument("reset_gate: K must be positive");
  if (!(p_r >= 0.0 && p_r <= 1.0)) throw std::invalid_argument("reset_gate: p_r outside [0, 1]");
  if (step_counter % K != 0) return false;
  return uniform_unit(rng) < p_r;
}

Trajectory random_walk(const GridSpec& spec, Cell start, int c, Rng& rng) {
  if (c < 1) throw std::invalid_argument("random_walk: c must be >= 1");
  Trajectory traj;
  traj.states.reserve(static_cast<std::size_t>(c) + 1);
  traj.actions.reserve(static_cast<std::size_t>(c));
  traj.states.push_back(start);
  Cell s = start;
  for (int t = 0; t < c; ++t) {
    const auto a = static_cast<Move>(uniform_index(kNumMoves, rng));
    s = step(spec, s, a);
    traj.actions.push_back(a);
    traj.states.push_back(s);
  }
  return traj;
}

}  // namespace tatc
