//! ASCII Pacman layouts.
//!
//! `%` wall, `.` food, `o` cherry, `G` ghost start, `P` Pacman start, space
//! empty. Every row must have the same width and exactly one `P` must appear.

use crate::error::{Error, Result};

pub type Cell = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacmanLayout {
    pub rows: usize,
    pub cols: usize,
    walls: Vec<bool>,
    pub pacman: Cell,
    pub ghosts: Vec<Cell>,
    pub food: Vec<Cell>,
    pub cherries: Vec<Cell>,
}

impl PacmanLayout {
    pub fn is_wall(&self, (r, c): Cell) -> bool {
        self.walls[r * self.cols + c]
    }

    /// Neighbouring open cell in direction `(dr, dc)`, if any.
    pub fn neighbour(&self, (r, c): Cell, (dr, dc): (isize, isize)) -> Option<Cell> {
        let nr = r.checked_add_signed(dr)?;
        let nc = c.checked_add_signed(dc)?;
        if nr >= self.rows || nc >= self.cols || self.is_wall((nr, nc)) {
            None
        } else {
            Some((nr, nc))
        }
    }

    pub fn open_cells(&self) -> usize {
        self.walls.iter().filter(|&&w| !w).count()
    }
}

fn layout_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Layout {
        line,
        column,
        message: message.into(),
    }
}

/// Parses a layout; trailing blank lines are ignored.
pub fn load_layout(text: &str) -> Result<PacmanLayout> {
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    let end = lines
        .iter()
        .rposition(|l| !l.is_empty())
        .map_or(0, |i| i + 1);
    let lines = &lines[..end];
    if lines.is_empty() {
        return Err(layout_error(1, 1, "empty layout"));
    }
    let cols = lines[0].chars().count();
    let mut walls = Vec::with_capacity(lines.len() * cols);
    let mut pacman = None;
    let mut ghosts = Vec::new();
    let mut food = Vec::new();
    let mut cherries = Vec::new();
    for (r, line) in lines.iter().enumerate() {
        let width = line.chars().count();
        if width != cols {
            return Err(layout_error(
                r + 1,
                width.min(cols) + 1,
                format!("row has {width} cells, expected {cols}"),
            ));
        }
        for (c, ch) in line.chars().enumerate() {
            walls.push(ch == '%');
            match ch {
                '%' | ' ' => {}
                '.' => food.push((r, c)),
                'o' => cherries.push((r, c)),
                'G' => ghosts.push((r, c)),
                'P' => {
                    if pacman.is_some() {
                        return Err(layout_error(r + 1, c + 1, "second Pacman start"));
                    }
                    pacman = Some((r, c));
                }
                other => {
                    return Err(layout_error(
                        r + 1,
                        c + 1,
                        format!("unknown cell character {other:?}"),
                    ))
                }
            }
        }
    }
    let pacman =
        pacman.ok_or_else(|| layout_error(lines.len(), 1, "layout has no Pacman start 'P'"))?;
    Ok(PacmanLayout {
        rows: lines.len(),
        cols,
        walls,
        pacman,
        ghosts,
        food,
        cherries,
    })
}

/// Layouts shipped with the crate, matching the three experimental settings.
pub mod bundled {
    pub const SMALL_7X7: &str = include_str!("../../layouts/small_7x7.lay");
    pub const MEDIUM_7X17: &str = include_str!("../../layouts/medium_7x17.lay");
    pub const LARGE_17X19: &str = include_str!("../../layouts/large_17x19.lay");

    pub fn by_name(name: &str) -> Option<&'static str> {
        match name {
            "small_7x7" | "7x7" => Some(SMALL_7X7),
            "medium_7x17" | "7x17" => Some(MEDIUM_7X17),
            "large_17x19" | "17x19" => Some(LARGE_17X19),
            _ => None,
        }
    }
}
