use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::error::{Error, FormatError, Result};

pub type State = [f64; 2];
pub type Cell = (usize, usize);

/// The eight unit move directions, `k · 45°` counter-clockwise from `+x`
/// in a frame where `y` (the row index) grows downwards.
pub const ACTIONS: [[f64; 2]; 8] = {
    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;
    [
        [1.0, 0.0],
        [H, H],
        [0.0, 1.0],
        [-H, H],
        [-1.0, 0.0],
        [-H, -H],
        [0.0, -1.0],
        [H, -H],
    ]
};

pub const ACTION_NAMES: [&str; 8] = [
    "right",
    "down-right",
    "down",
    "down-left",
    "left",
    "up-left",
    "up",
    "up-right",
];

pub const LEFT: usize = 4;

/// Continuous maze over a `width × height` grid of unit cells. Walls sit on
/// cell edges; a move that would cross a wall or leave the grid is
/// rejected outright.
#[derive(Debug, Clone, PartialEq)]
pub struct MazeEnv {
    width: usize,
    height: usize,
    /// `h_walls[r * width + c]`: wall between `(c, r)` and `(c, r + 1)`.
    h_walls: Vec<bool>,
    /// `v_walls[r * (width - 1) + c]`: wall between `(c, r)` and `(c + 1, r)`.
    v_walls: Vec<bool>,
    step: f64,
}

impl MazeEnv {
    pub fn open(width: usize, height: usize, step: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(
                "maze needs at least one cell".into(),
            ));
        }
        if !(step > 0.0 && step < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "step must lie in (0, 1), got {step}"
            )));
        }
        Ok(Self {
            width,
            height,
            h_walls: vec![false; width * height.saturating_sub(1)],
            v_walls: vec![false; width.saturating_sub(1) * height],
            step,
        })
    }

    /// 14 × 14 maze whose left half (columns 0–6) is split by horizontal
    /// walls into one alleyway per row, each open only to the right.
    pub fn fork(step: f64) -> Result<Self> {
        let mut env = Self::open(14, 14, step)?;
        for r in 0..13 {
            for c in 0..7 {
                env.set_wall_below((c, r), true)?;
            }
        }
        Ok(env)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    pub fn set_step_size(&mut self, step: f64) -> Result<()> {
        if !(step > 0.0 && step < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "step must lie in (0, 1), got {step}"
            )));
        }
        self.step = step;
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn cell_index(&self, cell: Cell) -> usize {
        cell.1 * self.width + cell.0
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |r| (0..self.width).map(move |c| (c, r)))
    }

    pub fn contains(&self, s: State) -> bool {
        s[0] >= 0.0 && s[1] >= 0.0 && s[0] < self.width as f64 && s[1] < self.height as f64
    }

    pub fn cell_of(&self, s: State) -> Cell {
        (s[0].floor() as usize, s[1].floor() as usize)
    }

    pub fn center(cell: Cell) -> State {
        [cell.0 as f64 + 0.5, cell.1 as f64 + 0.5]
    }

    fn check_cell(&self, cell: Cell) -> Result<()> {
        if cell.0 >= self.width || cell.1 >= self.height {
            return Err(Error::InvalidArgument(format!(
                "cell {cell:?} outside {}x{} maze",
                self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn set_wall_below(&mut self, cell: Cell, wall: bool) -> Result<()> {
        self.check_cell(cell)?;
        if cell.1 + 1 >= self.height {
            return Err(Error::InvalidArgument(
                "no interior edge below the last row".into(),
            ));
        }
        self.h_walls[cell.1 * self.width + cell.0] = wall;
        Ok(())
    }

    pub fn set_wall_right(&mut self, cell: Cell, wall: bool) -> Result<()> {
        self.check_cell(cell)?;
        if cell.0 + 1 >= self.width {
            return Err(Error::InvalidArgument(
                "no interior edge right of the last column".into(),
            ));
        }
        self.v_walls[cell.1 * (self.width - 1) + cell.0] = wall;
        Ok(())
    }

    pub fn wall_below(&self, cell: Cell) -> bool {
        cell.1 + 1 >= self.height || self.h_walls[cell.1 * self.width + cell.0]
    }

    pub fn wall_right(&self, cell: Cell) -> bool {
        cell.0 + 1 >= self.width || self.v_walls[cell.1 * (self.width - 1) + cell.0]
    }

    /// Whether two 4-adjacent cells share an open edge.
    pub fn open_between(&self, a: Cell, b: Cell) -> bool {
        match (b.0 as isize - a.0 as isize, b.1 as isize - a.1 as isize) {
            (1, 0) => !self.wall_right(a),
            (-1, 0) => !self.wall_right(b),
            (0, 1) => !self.wall_below(a),
            (0, -1) => !self.wall_below(b),
            (0, 0) => true,
            _ => false,
        }
    }

    /// Moves `step` along `action`; returns the unchanged state if the move
    /// leaves the grid or crosses a wall. A diagonal move through a corner
    /// needs both two-edge routes open.
    pub fn step(&self, s: State, action: [f64; 2]) -> Result<State> {
        let norm = (action[0] * action[0] + action[1] * action[1]).sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "action must be a unit vector, norm {norm}"
            )));
        }
        if !self.contains(s) {
            return Err(Error::Domain(format!("state {s:?} outside the maze")));
        }
        let h = self.step_size();
        let next = [s[0] + h * action[0], s[1] + h * action[1]];
        if !self.contains(next) {
            return Ok(s);
        }
        let from = self.cell_of(s);
        let to = self.cell_of(next);
        let allowed = if from.0 != to.0 && from.1 != to.1 {
            let via_x = (to.0, from.1);
            let via_y = (from.0, to.1);
            self.open_between(from, via_x)
                && self.open_between(via_x, to)
                && self.open_between(from, via_y)
                && self.open_between(via_y, to)
        } else {
            self.open_between(from, to)
        };
        Ok(if allowed { next } else { s })
    }

    /// Cells reachable from `start` through open edges.
    pub fn reachable(&self, start: Cell) -> Vec<bool> {
        let mut seen = vec![false; self.n_cells()];
        let mut queue = VecDeque::from([start]);
        seen[self.cell_index(start)] = true;
        while let Some((c, r)) = queue.pop_front() {
            let mut nbrs = Vec::with_capacity(4);
            if c > 0 {
                nbrs.push((c - 1, r));
            }
            if r > 0 {
                nbrs.push((c, r - 1));
            }
            if c + 1 < self.width {
                nbrs.push((c + 1, r));
            }
            if r + 1 < self.height {
                nbrs.push((c, r + 1));
            }
            for n in nbrs {
                let i = self.cell_index(n);
                if !seen[i] && self.open_between((c, r), n) {
                    seen[i] = true;
                    queue.push_back(n);
                }
            }
        }
        seen
    }

    /// Shortest path length in cell moves between two cells, if connected.
    pub fn cell_distance(&self, from: Cell, to: Cell) -> Option<usize> {
        Some(self.distances_to(to)[self.cell_index(from)]).filter(|&d| d != usize::MAX)
    }

    /// Shortest path lengths from every cell to `goal` in row-major cell
    /// order; `usize::MAX` marks cells that cannot reach it.
    pub fn distances_to(&self, goal: Cell) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n_cells()];
        let mut queue = VecDeque::from([goal]);
        dist[self.cell_index(goal)] = 0;
        while let Some(cur) = queue.pop_front() {
            let d = dist[self.cell_index(cur)];
            let (c, r) = cur;
            let cand = [
                (c.wrapping_sub(1), r),
                (c + 1, r),
                (c, r.wrapping_sub(1)),
                (c, r + 1),
            ];
            for n in cand {
                if n.0 < self.width && n.1 < self.height && self.open_between(cur, n) {
                    let i = self.cell_index(n);
                    if dist[i] == usize::MAX {
                        dist[i] = d + 1;
                        queue.push_back(n);
                    }
                }
            }
        }
        dist
    }

    /// ASCII wall map: `+` corners, `-` and `|` walls, one character per
    /// cell interior.
    pub fn to_ascii(&self) -> String {
        let mut s = String::new();
        for r in 0..self.height {
            s.push('+');
            for c in 0..self.width {
                let wall = r == 0 || self.wall_below((c, r - 1));
                s.push(if wall { '-' } else { ' ' });
                s.push('+');
            }
            s.push('\n');
            s.push('|');
            for c in 0..self.width {
                s.push(' ');
                s.push(if self.wall_right((c, r)) { '|' } else { ' ' });
            }
            s.push('\n');
        }
        s.push('+');
        for _ in 0..self.width {
            s.push_str("-+");
        }
        s.push('\n');
        s
    }

    pub fn from_ascii(text: &str, step: f64) -> Result<Self> {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .collect();
        let bad =
            |line: usize, reason: String| Error::Format(FormatError::BadText { line, reason });
        if lines.len() < 3 || lines.len() % 2 == 0 {
            return Err(bad(
                lines.len(),
                "expected an odd number (>= 3) of map lines".into(),
            ));
        }
        let height = (lines.len() - 1) / 2;
        let first: Vec<char> = lines[0].chars().collect();
        if first.len() < 3 || first.len() % 2 == 0 {
            return Err(bad(1, "malformed top border".into()));
        }
        let width = (first.len() - 1) / 2;
        let mut env = Self::open(width, height, step)?;
        for (i, line) in lines.iter().enumerate() {
            let chars: Vec<char> = line.chars().collect();
            if chars.len() != 2 * width + 1 {
                return Err(bad(
                    i + 1,
                    format!("expected {} characters, got {}", 2 * width + 1, chars.len()),
                ));
            }
            if i % 2 == 0 {
                let r = i / 2;
                for c in 0..width {
                    let wall = match chars[2 * c + 1] {
                        '-' => true,
                        ' ' => false,
                        other => {
                            return Err(bad(i + 1, format!("unexpected {other:?} in edge row")))
                        }
                    };
                    if r == 0 || r == height {
                        if !wall {
                            return Err(bad(i + 1, "outer boundary must be closed".into()));
                        }
                    } else {
                        env.set_wall_below((c, r - 1), wall)?;
                    }
                }
            } else {
                let r = i / 2;
                if chars[0] != '|' || chars[2 * width] != '|' {
                    return Err(bad(i + 1, "outer boundary must be closed".into()));
                }
                for c in 0..width - 1 {
                    let wall = match chars[2 * c + 2] {
                        '|' => true,
                        ' ' => false,
                        other => {
                            return Err(bad(i + 1, format!("unexpected {other:?} in cell row")))
                        }
                    };
                    env.set_wall_right((c, r), wall)?;
                }
            }
        }
        Ok(env)
    }

    /// Human-readable map with optional marked cells (`*`).
    pub fn render_with(&self, marked: &[Cell]) -> String {
        let base = self.to_ascii();
        let mut lines: Vec<Vec<char>> = base.lines().map(|l| l.chars().collect()).collect();
        for &(c, r) in marked {
            if c < self.width && r < self.height {
                lines[2 * r + 1][2 * c + 1] = '*';
            }
        }
        let mut out = String::new();
        for l in lines {
            let _ = writeln!(out, "{}", l.into_iter().collect::<String>());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeedRng;
    use rand::Rng;

    #[test]
    fn actions_are_unit() {
        for a in ACTIONS {
            assert!(((a[0] * a[0] + a[1] * a[1]).sqrt() - 1.0).abs() < 1e-15);
        }
        assert_eq!(ACTION_NAMES[LEFT], "left");
    }

    #[test]
    fn open_move_and_rejections() {
        let env = MazeEnv::open(3, 3, 0.5).unwrap();
        assert_eq!(env.step([1.2, 1.5], ACTIONS[0]).unwrap(), [1.7, 1.5]);
        assert_eq!(env.step([0.2, 1.5], ACTIONS[LEFT]).unwrap(), [0.2, 1.5]);
        assert!(env.step([1.0, 1.0], [1.0, 1.0]).is_err());
    }

    #[test]
    fn fork_blocks_alleyway_crossing() {
        let env = MazeEnv::fork(0.5).unwrap();
        let s = [2.5, 6.5];
        assert_eq!(env.step(s, ACTIONS[6]).unwrap(), [2.5, 6.0]);
        assert_eq!(env.step([2.5, 6.25], ACTIONS[6]).unwrap(), [2.5, 6.25]);
        assert_eq!(env.step([2.5, 6.75], ACTIONS[2]).unwrap(), [2.5, 6.75]);
        assert_eq!(env.step(s, ACTIONS[LEFT]).unwrap(), [2.0, 6.5]);
        // the right half is open
        assert_eq!(env.step([9.5, 6.5], ACTIONS[2]).unwrap(), [9.5, 7.0]);
    }

    #[test]
    fn diagonal_needs_both_routes() {
        let mut env = MazeEnv::open(2, 2, 0.5).unwrap();
        env.set_wall_right((0, 0), true).unwrap();
        // (0,0) → (1,1) via (0,1) is open but via (1,0) is not
        let s = [0.8, 0.8];
        assert_eq!(env.step(s, ACTIONS[1]).unwrap(), s);
    }

    #[test]
    fn random_walks_stay_in_reachable_region() {
        let env = MazeEnv::fork(0.5).unwrap();
        let mut rng = SeedRng::new(3);
        for ep in 0..50 {
            let start_cell = (rng.gen_range(0..14), rng.gen_range(0..14));
            let reach = env.reachable(start_cell);
            let mut s = MazeEnv::center(start_cell);
            for _ in 0..200 {
                s = env.step(s, ACTIONS[rng.gen_range(0..8)]).unwrap();
                assert!(
                    reach[env.cell_index(env.cell_of(s))],
                    "episode {ep} left its region"
                );
            }
        }
    }

    #[test]
    fn ascii_roundtrip() {
        let env = MazeEnv::fork(0.5).unwrap();
        let text = env.to_ascii();
        assert_eq!(MazeEnv::from_ascii(&text, 0.5).unwrap(), env);
        assert_eq!(text.lines().count(), 29);
        assert!(MazeEnv::from_ascii("+-+\n| \n+-+\n", 0.5).is_err());
    }

    #[test]
    fn fork_distances() {
        let env = MazeEnv::fork(0.5).unwrap();
        assert_eq!(env.cell_distance((2, 6), (0, 6)), Some(2));
        // any other row of column 0 goes through column 7
        assert_eq!(env.cell_distance((2, 6), (0, 7)), Some(5 + 1 + 7));
    }
}
