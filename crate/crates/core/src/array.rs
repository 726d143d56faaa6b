// SPDX-License-Identifier: Apache-2.0

//! The aCAM array: a grid of LB/HB cell pairs sharing one programming
//! circuit, with write/reset/sweep/verify working modes and a searching
//! state evaluated per row on the match line.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bench::Bench;
use crate::controller::ProgramResult;
use crate::devices::MemristorState;
use crate::error::{ensure_finite, Error, Result};
use crate::lut::LutTable;

/// Gate voltage applied on the data line in verify mode (V).
pub const VERIFY_GATE: f64 = 1.9;
/// Duration of the verify read bias (s).
pub const VERIFY_PULSE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lb,
    Hb,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Lb => "lb",
            Side::Hb => "hb",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellAddress {
    pub row: usize,
    pub col: usize,
    pub side: Side,
}

impl CellAddress {
    pub fn new(row: usize, col: usize, side: Side) -> Self {
        Self { row, col, side }
    }
}

impl fmt::Display for CellAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}c{}{}", self.row, self.col, self.side)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcamCell {
    pub lb: MemristorState,
    pub hb: MemristorState,
    /// T11/T12 off: the cell is disconnected from the match line.
    pub dont_care: bool,
}

impl AcamCell {
    fn side(&self, side: Side) -> &MemristorState {
        match side {
            Side::Lb => &self.lb,
            Side::Hb => &self.hb,
        }
    }

    fn side_mut(&mut self, side: Side) -> &mut MemristorState {
        match side {
            Side::Lb => &mut self.lb,
            Side::Hb => &mut self.hb,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WorkingMode {
    Wr,
    Rst,
    Sw,
    Vr,
    SearchIdle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchWindow {
    pub row: usize,
    pub col: usize,
    pub lo: f64,
    pub hi: f64,
    pub dont_care: bool,
}

impl SearchWindow {
    pub fn contains(&self, v: f64) -> bool {
        self.dont_care || (self.lo <= v && v <= self.hi)
    }

    pub fn disjoint(&self, other: &SearchWindow) -> bool {
        self.hi < other.lo || other.hi < self.lo
    }
}

/// Reset then set of one memristor.
#[derive(Debug, Clone)]
pub struct WriteResult {
    pub reset: ProgramResult,
    pub set: ProgramResult,
    pub v_dlp: f64,
}

#[derive(Debug, Clone)]
pub struct AcamArray {
    rows: usize,
    cols: usize,
    cells: Vec<AcamCell>,
    mode: WorkingMode,
    bench: Bench,
    busy: Option<CellAddress>,
}

impl AcamArray {
    /// Array of `rows × cols` cells, every memristor fully reset.
    pub fn new(rows: usize, cols: usize, bench: Bench) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter {
                name: "array",
                reason: "rows and cols must be positive".into(),
            });
        }
        let m = bench.fresh_cell();
        let cell = AcamCell {
            lb: m,
            hb: m,
            dont_care: false,
        };
        Ok(Self {
            rows,
            cols,
            cells: vec![cell; rows * cols],
            mode: WorkingMode::SearchIdle,
            bench,
            busy: None,
        })
    }

    /// The 4 × 2 array: four words of length two.
    pub fn standard(bench: Bench) -> Self {
        Self::new(4, 2, bench).expect("non-zero shape")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mode(&self) -> WorkingMode {
        self.mode
    }

    pub fn bench(&self) -> &Bench {
        &self.bench
    }

    pub fn addresses(&self) -> impl Iterator<Item = CellAddress> + '_ {
        (0..self.rows).flat_map(move |row| {
            (0..self.cols).flat_map(move |col| {
                [Side::Lb, Side::Hb]
                    .into_iter()
                    .map(move |side| CellAddress { row, col, side })
            })
        })
    }

    fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    fn check(&self, addr: CellAddress) -> Result<()> {
        if addr.row >= self.rows || addr.col >= self.cols {
            return Err(Error::BadAddress(addr));
        }
        Ok(())
    }

    pub fn cell(&self, row: usize, col: usize) -> &AcamCell {
        &self.cells[self.index(row, col)]
    }

    pub fn memristor(&self, addr: CellAddress) -> Result<&MemristorState> {
        self.check(addr)?;
        Ok(self.cells[self.index(addr.row, addr.col)].side(addr.side))
    }

    /// Places a memristor in state `w` directly, bypassing the circuit.
    pub fn preset(&mut self, addr: CellAddress, w: f64) -> Result<()> {
        self.check(addr)?;
        let state = MemristorState::new(*self.bench.memristor(), w)?;
        let i = self.index(addr.row, addr.col);
        *self.cells[i].side_mut(addr.side) = state;
        Ok(())
    }

    /// Position of `addr` in [`AcamArray::snapshot`].
    pub fn flat_index(&self, addr: CellAddress) -> usize {
        2 * self.index(addr.row, addr.col) + usize::from(addr.side == Side::Hb)
    }

    /// State variable of every memristor in address order.
    pub fn snapshot(&self) -> Vec<f64> {
        self.cells
            .iter()
            .flat_map(|c| [c.lb.w(), c.hb.w()])
            .collect()
    }

    pub fn set_dont_care(&mut self, row: usize, col: usize, dont_care: bool) -> Result<()> {
        self.check(CellAddress::new(row, col, Side::Lb))?;
        let i = self.index(row, col);
        self.cells[i].dont_care = dont_care;
        Ok(())
    }

    /// Claims the single programming circuit for `addr`.
    pub fn claim(&mut self, addr: CellAddress) -> Result<()> {
        self.check(addr)?;
        match self.busy {
            Some(busy) => Err(Error::Contention {
                busy,
                requested: addr,
            }),
            None => {
                self.busy = Some(addr);
                Ok(())
            }
        }
    }

    pub fn release(&mut self) {
        self.busy = None;
    }

    pub fn busy(&self) -> Option<CellAddress> {
        self.busy
    }

    fn with_circuit<T>(
        &mut self,
        addr: CellAddress,
        op: impl FnOnce(&mut Self) -> Result<T>,
    ) -> Result<T> {
        self.claim(addr)?;
        let out = op(self);
        self.release();
        out
    }

    /// RST mode: drives one memristor to its lowest conductance. Only the
    /// addressed DL column and SL+AE row are activated.
    pub fn reset_cell(&mut self, addr: CellAddress) -> Result<ProgramResult> {
        self.with_circuit(addr, |a| a.reset_claimed(addr))
    }

    fn reset_claimed(&mut self, addr: CellAddress) -> Result<ProgramResult> {
        self.mode = WorkingMode::Rst;
        let i = self.index(addr.row, addr.col);
        let controller = self.bench.controller().clone();
        controller.run_reset(self.cells[i].side_mut(addr.side))
    }

    /// WR mode: reset, then set to `g_target` with the LUT voltage. Only the
    /// addressed ML row and DL column are activated.
    pub fn write_cell(
        &mut self,
        addr: CellAddress,
        g_target: f64,
        lut: &LutTable,
    ) -> Result<WriteResult> {
        lut.check_fingerprint(&self.bench.fingerprint())?;
        let v_dlp = lut.vdlp_for_target(g_target)?;
        self.with_circuit(addr, |a| {
            let reset = a.reset_claimed(addr)?;
            a.mode = WorkingMode::Wr;
            let i = a.index(addr.row, addr.col);
            let controller = a.bench.controller().clone();
            let set = controller.run_set(a.cells[i].side_mut(addr.side), v_dlp)?;
            Ok(WriteResult { reset, set, v_dlp })
        })
    }

    /// VR mode: reads the memristor with the data line at 1.9 V and infers
    /// its conductance from the solved branch, accounting for the
    /// transistor's series drop.
    pub fn verify_cell(&mut self, addr: CellAddress) -> Result<f64> {
        self.with_circuit(addr, |a| {
            a.mode = WorkingMode::Vr;
            let comparator = a.bench.comparator().clone();
            let v_read = comparator.rails().v_read;
            let i = a.index(addr.row, addr.col);
            let m = a.cells[i].side_mut(addr.side);
            let sol = comparator.solve_branch(v_read, m.conductance(), VERIFY_GATE)?;
            // Read current flows AE→OE: reset polarity, below threshold.
            m.step(-(v_read - sol.v_mid), VERIFY_PULSE)?;
            let i_t = comparator.law().drain_current(VERIFY_GATE, sol.v_mid);
            Ok(i_t / (v_read - sol.v_mid))
        })
    }

    /// Closed-form window of one cell.
    pub fn window(&self, row: usize, col: usize) -> Result<SearchWindow> {
        self.check(CellAddress::new(row, col, Side::Lb))?;
        let cell = self.cell(row, col);
        let c = self.bench.comparator();
        Ok(SearchWindow {
            row,
            col,
            lo: c.boundary_search_mode(cell.lb.conductance())?,
            hi: c.boundary_search_mode(cell.hb.conductance())?,
            dont_care: cell.dont_care,
        })
    }

    pub fn windows(&self) -> Result<Vec<SearchWindow>> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for row in 0..self.rows {
            for col in 0..self.cols {
                out.push(self.window(row, col)?);
            }
        }
        Ok(out)
    }

    /// Comparator-level match of one cell at `v_dl`: the LB mid node has
    /// fallen to `V_read/2` and the HB mid node has not.
    pub fn cell_matches_physical(&self, row: usize, col: usize, v_dl: f64) -> Result<bool> {
        let cell = self.cell(row, col);
        if cell.dont_care {
            return Ok(true);
        }
        let c = self.bench.comparator();
        let half = 0.5 * c.rails().v_read;
        let lb = c.solve_search_branch(cell.lb.conductance(), v_dl)?.v_mid <= half;
        let hb = c.solve_search_branch(cell.hb.conductance(), v_dl)?.v_mid >= half;
        Ok(lb && hb)
    }

    /// SW mode: sweeps every cell over `grid` and reports the measured
    /// match interval.
    pub fn sweep_row_windows(&mut self, grid: &[f64]) -> Result<Vec<SearchWindow>> {
        let v_read = self.bench.comparator().rails().v_read;
        if grid.is_empty() || grid.iter().any(|v| !(0.0..=v_read).contains(v)) {
            return Err(Error::BadGrid { lo: 0.0, hi: v_read });
        }
        self.mode = WorkingMode::Sw;
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for row in 0..self.rows {
            for col in 0..self.cols {
                let cell = self.cell(row, col);
                if cell.dont_care {
                    out.push(SearchWindow {
                        row,
                        col,
                        lo: grid[0],
                        hi: grid[grid.len() - 1],
                        dont_care: true,
                    });
                    continue;
                }
                let hits = grid
                    .iter()
                    .map(|&v| self.cell_matches_physical(row, col, v))
                    .collect::<Result<Vec<_>>>()?;
                let intervals = hits
                    .iter()
                    .enumerate()
                    .filter(|&(i, &h)| h && (i == 0 || !hits[i - 1]))
                    .count();
                match intervals {
                    0 => return Err(Error::EmptyWindow { row, col }),
                    1 => {}
                    n => {
                        return Err(Error::NonMonotoneMatch {
                            row,
                            col,
                            intervals: n,
                        })
                    }
                }
                let first = hits.iter().position(|&h| h).unwrap();
                let last = hits.iter().rposition(|&h| h).unwrap();
                out.push(SearchWindow {
                    row,
                    col,
                    lo: grid[first],
                    hi: grid[last],
                    dont_care: false,
                });
            }
        }
        Ok(out)
    }

    /// Searching state: a row matches when every column's input falls in
    /// its cell window (edges inclusive) or the cell is don't-care.
    pub fn search(&mut self, inputs: &[f64]) -> Result<Vec<bool>> {
        if inputs.len() != self.cols {
            return Err(Error::Format(format!(
                "search needs {} inputs, got {}",
                self.cols,
                inputs.len()
            )));
        }
        let v_read = self.bench.comparator().rails().v_read;
        for &v in inputs {
            ensure_finite("search input", v)?;
            if !(0.0..=v_read).contains(&v) {
                return Err(Error::RejectedInput {
                    name: "search input",
                    value: v,
                    reason: "outside [0, V_read]",
                });
            }
        }
        self.mode = WorkingMode::SearchIdle;
        let windows = self.windows()?;
        Ok((0..self.rows)
            .map(|row| {
                windows[row * self.cols..(row + 1) * self.cols]
                    .iter()
                    .zip(inputs)
                    .all(|(w, &v)| w.contains(v))
            })
            .collect())
    }
}
