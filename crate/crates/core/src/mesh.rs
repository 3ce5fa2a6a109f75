//! Structured 8-node quadrilateral mesh of |x1| <= a, -h_b <= x2 <= h_a.
//!
//! Nodes live on a "fine" grid of `(2 nx + 1) x (2 ny + 1)` points (corner and
//! mid-edge positions); element centres are skipped. The debond is a seam:
//! interface nodes strictly between the two crack tips are duplicated, layer A
//! elements keep the original ids (upper face) and layer B elements use the
//! duplicates (lower face). The tips stay shared.
//!
//! ```text
//!  3----6----2
//!  |         |
//!  7         5
//!  |         |
//!  0----4----1
//! ```

use std::io::Write;

use crate::config::{BilayerPlate, Layer};
use crate::error::{Error, Result};

const SNAP_TOL: f64 = 1e-3;
const MAX_SNAP_FACTOR: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: usize,
    pub x1: f64,
    pub x2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Q8Element {
    /// Corners counterclockwise from bottom-left, then mid-edges
    /// (bottom, right, top, left).
    pub node_ids: [usize; 8],
    pub layer: Layer,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nodes: Vec<Node>,
    pub elements: Vec<Q8Element>,
    /// Nodes on x1 = -a, sorted by x2.
    pub gamma1: Vec<usize>,
    /// Nodes on x1 = +a, sorted by x2.
    pub gamma2: Vec<usize>,
    /// Upper-face crack nodes sorted by x1, tips included.
    pub crack_upper: Vec<usize>,
    /// Lower-face partners of `crack_upper` (tips share the same id).
    pub crack_lower: Vec<usize>,
    pub top: Vec<usize>,
    pub bottom: Vec<usize>,
    /// Corner-line x1 coordinates, `elems_x + 1` values.
    pub x_lines: Vec<f64>,
    /// Corner-line x2 coordinates, `elems_y_b + elems_y_a + 1` values.
    pub y_lines: Vec<f64>,
    pub elems_y_a: usize,
    pub elems_y_b: usize,
    /// Node ids column by column, duplicates right after their twins.
    band_order: Vec<usize>,
}

impl Mesh {
    pub fn elems_x(&self) -> usize {
        self.x_lines.len() - 1
    }

    pub fn elems_y(&self) -> usize {
        self.y_lines.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn a_virtual(&self) -> f64 {
        *self.x_lines.last().unwrap()
    }

    /// Element at column `i` (along x1) and row `j` (from the bottom face).
    pub fn element_at(&self, i: usize, j: usize) -> usize {
        i * self.elems_y() + j
    }

    pub fn element_coords(&self, elem: &Q8Element) -> [[f64; 2]; 8] {
        elem.node_ids.map(|id| [self.nodes[id].x1, self.nodes[id].x2])
    }

    /// Node ids in a low-bandwidth order for banded factorization.
    pub fn band_order(&self) -> &[usize] {
        &self.band_order
    }

    /// Number of duplicated (lower-face) crack nodes.
    pub fn duplicate_count(&self) -> usize {
        self.crack_lower
            .iter()
            .zip(&self.crack_upper)
            .filter(|(l, u)| l != u)
            .count()
    }

    /// Finds the element containing (x1, x2) and the reference coordinates of
    /// the point in it. Points on the interface resolve to the layer A element.
    pub fn locate(&self, x1: f64, x2: f64) -> Option<(usize, f64, f64)> {
        let i = find_interval(&self.x_lines, x1)?;
        let j = find_interval(&self.y_lines, x2)?;
        let (x0, x1r) = (self.x_lines[i], self.x_lines[i + 1]);
        let (y0, y1) = (self.y_lines[j], self.y_lines[j + 1]);
        let xi = 2.0 * (x1 - x0) / (x1r - x0) - 1.0;
        let eta = 2.0 * (x2 - y0) / (y1 - y0) - 1.0;
        Some((self.element_at(i, j), xi, eta))
    }

    /// Writes the node table, a blank line, then the element table.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "node_id,x1_m,x2_m")?;
        for n in &self.nodes {
            writeln!(out, "{},{:.12e},{:.12e}", n.id, n.x1, n.x2)?;
        }
        writeln!(out)?;
        writeln!(out, "elem_id,n1,n2,n3,n4,n5,n6,n7,n8,layer")?;
        for (e, el) in self.elements.iter().enumerate() {
            let ids: Vec<String> = el.node_ids.iter().map(|i| i.to_string()).collect();
            writeln!(out, "{},{},{:?}", e, ids.join(","), el.layer)?;
        }
        Ok(())
    }
}

/// Index of the interval of sorted `lines` containing `v` (upper interval on
/// shared lines, last interval at the far end).
fn find_interval(lines: &[f64], v: f64) -> Option<usize> {
    let n = lines.len();
    let span = lines[n - 1] - lines[0];
    let slack = 1e-12 * span;
    if v < lines[0] - slack || v > lines[n - 1] + slack {
        return None;
    }
    let idx = lines.partition_point(|&l| l <= v);
    Some(idx.saturating_sub(1).min(n - 2))
}

/// Corner x-lines with the crack tips on grid lines. Returns the lines and
/// the corner indices of the two tips (equal for an intact plate).
fn snap_x_lines(a: f64, crack: f64, requested: usize) -> Result<(Vec<f64>, usize, usize)> {
    if crack == 0.0 {
        let lines = (0..=requested)
            .map(|i| -a + 2.0 * a * i as f64 / requested as f64)
            .collect();
        return Ok((lines, requested / 2, requested / 2));
    }
    let side = a - 0.5 * crack;
    for nx in requested..=MAX_SNAP_FACTOR * requested {
        let spacing = 2.0 * a / nx as f64;
        let n_crack = (crack / spacing).round();
        let n_side = (side / spacing).round();
        if n_crack < 1.0 || n_side < 1.0 || 2.0 * n_side + n_crack != nx as f64 {
            continue;
        }
        let crack_dev = (crack / n_crack - spacing).abs() / spacing;
        let side_dev = (side / n_side - spacing).abs() / spacing;
        if crack_dev <= SNAP_TOL && side_dev <= SNAP_TOL {
            let (n_crack, n_side) = (n_crack as usize, n_side as usize);
            let mut lines = Vec::with_capacity(nx + 1);
            for i in 0..n_side {
                lines.push(-a + side * i as f64 / n_side as f64);
            }
            for i in 0..n_crack {
                lines.push(-0.5 * crack + crack * i as f64 / n_crack as f64);
            }
            for i in 0..n_side {
                lines.push(0.5 * crack + side * i as f64 / n_side as f64);
            }
            lines.push(a);
            return Ok((lines, n_side, n_side + n_crack));
        }
    }
    Err(Error::Snapping(format!(
        "no element count in [{requested}, {}] puts tips at +-{:.6e} m on grid lines",
        MAX_SNAP_FACTOR * requested,
        0.5 * crack
    )))
}

/// Builds the seam-cracked Q8 mesh of the analysis window.
pub fn build_mesh(
    plate: &BilayerPlate,
    elems_x: usize,
    elems_y_a: usize,
    elems_y_b: usize,
) -> Result<Mesh> {
    if elems_x < 1 || elems_y_a < 1 || elems_y_b < 1 {
        return Err(Error::Geometry("element counts must be positive".into()));
    }
    if 0.5 * plate.crack_length >= plate.a_virtual {
        return Err(Error::Geometry(format!(
            "crack half-length {:.4e} m reaches the virtual boundary at {:.4e} m",
            0.5 * plate.crack_length,
            plate.a_virtual
        )));
    }
    let (x_lines, tip_left, tip_right) = snap_x_lines(plate.a_virtual, plate.crack_length, elems_x)?;
    let nx = x_lines.len() - 1;
    if nx != elems_x {
        log::info!("elems_x raised from {elems_x} to {nx} to place crack tips on grid lines");
    }
    let ny = elems_y_a + elems_y_b;
    let mut y_lines = Vec::with_capacity(ny + 1);
    for j in 0..elems_y_b {
        y_lines.push(-plate.h_b + plate.h_b * j as f64 / elems_y_b as f64);
    }
    for j in 0..elems_y_a {
        y_lines.push(plate.h_a * j as f64 / elems_y_a as f64);
    }
    y_lines.push(plate.h_a);

    let fine_x = |fc: usize| {
        if fc % 2 == 0 {
            x_lines[fc / 2]
        } else {
            0.5 * (x_lines[fc / 2] + x_lines[fc / 2 + 1])
        }
    };
    let fine_y = |fr: usize| {
        if fr % 2 == 0 {
            y_lines[fr / 2]
        } else {
            0.5 * (y_lines[fr / 2] + y_lines[fr / 2 + 1])
        }
    };

    let (cols, rows) = (2 * nx + 1, 2 * ny + 1);
    let mut grid = vec![usize::MAX; cols * rows];
    let mut nodes = Vec::new();
    for fc in 0..cols {
        for fr in 0..rows {
            if fc % 2 == 1 && fr % 2 == 1 {
                continue;
            }
            let id = nodes.len();
            grid[fc * rows + fr] = id;
            nodes.push(Node {
                id,
                x1: fine_x(fc),
                x2: fine_y(fr),
            });
        }
    }

    let interface_row = 2 * elems_y_b;
    let (crack_lo, crack_hi) = (2 * tip_left, 2 * tip_right);
    let mut lower_twin = vec![usize::MAX; cols];
    for fc in crack_lo + 1..crack_hi {
        let upper = grid[fc * rows + interface_row];
        let id = nodes.len();
        nodes.push(Node { id, ..nodes[upper] });
        lower_twin[fc] = id;
    }

    let node_for = |fc: usize, fr: usize, layer: Layer| {
        if layer == Layer::B && fr == interface_row && lower_twin[fc] != usize::MAX {
            lower_twin[fc]
        } else {
            grid[fc * rows + fr]
        }
    };

    let mut elements = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            let layer = if j < elems_y_b { Layer::B } else { Layer::A };
            let (c, r) = (2 * i, 2 * j);
            let ids = [
                (c, r),
                (c + 2, r),
                (c + 2, r + 2),
                (c, r + 2),
                (c + 1, r),
                (c + 2, r + 1),
                (c + 1, r + 2),
                (c, r + 1),
            ]
            .map(|(fc, fr)| node_for(fc, fr, layer));
            elements.push(Q8Element {
                node_ids: ids,
                layer,
            });
        }
    }

    let gamma1 = (0..rows).map(|fr| grid[fr]).collect();
    let gamma2 = (0..rows).map(|fr| grid[(cols - 1) * rows + fr]).collect();
    let bottom = (0..cols).map(|fc| grid[fc * rows]).collect();
    let top = (0..cols).map(|fc| grid[fc * rows + rows - 1]).collect();
    let (mut crack_upper, mut crack_lower) = (Vec::new(), Vec::new());
    if plate.crack_length > 0.0 {
        for fc in crack_lo..=crack_hi {
            let upper = grid[fc * rows + interface_row];
            crack_upper.push(upper);
            crack_lower.push(if lower_twin[fc] != usize::MAX {
                lower_twin[fc]
            } else {
                upper
            });
        }
    }

    let mut band_order = Vec::with_capacity(nodes.len());
    for fc in 0..cols {
        for fr in 0..rows {
            let id = grid[fc * rows + fr];
            if id == usize::MAX {
                continue;
            }
            band_order.push(id);
            if fr == interface_row && lower_twin[fc] != usize::MAX {
                band_order.push(lower_twin[fc]);
            }
        }
    }

    Ok(Mesh {
        nodes,
        elements,
        gamma1,
        gamma2,
        crack_upper,
        crack_lower,
        top,
        bottom,
        x_lines,
        y_lines,
        elems_y_a,
        elems_y_b,
        band_order,
    })
}
