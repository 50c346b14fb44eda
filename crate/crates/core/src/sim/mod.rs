//! Deterministic cycle-level simulator of the three-stage accelerator
//! pipeline: DMA weight stream and node stream feed the tiled matrix
//! multiplication unit (TMMU), whose part sums flow through a FIFO to the
//! part-sum accumulation unit (PSAU), then through a second FIFO to the
//! activation unit (AFAU) and out to the output buffer.
//!
//! Units update once per cycle in a fixed downstream-first order
//! (AFAU, PSAU, TMMU, DMA) so a value pushed into a FIFO becomes visible to
//! its consumer on the following cycle and same-cycle hand-off is never
//! ambiguous. Identical inputs produce bit-identical outputs and statistics.

mod fifo;

pub use fifo::FifoModel;

use crate::error::{Error, Result};
use crate::pwl::{pwl_sigmoid, PwlTable};
use crate::tensor::Tensor2D;

/// Simulator parameters.
///
/// `adder_tree_latency` covers the multiplier stage plus the pairwise
/// reduction, so it must be at least `ceil(log2(max(T, 2)))`.
/// `weights_resident` keeps weight tiles banked across batch rows instead of
/// re-streaming them per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub tile_size: usize,
    pub fifo_depth: usize,
    pub dma_words_per_cycle: f64,
    pub adder_tree_latency: u64,
    pub afau_latency: u64,
    pub clock_mhz: f64,
    pub weights_resident: bool,
}

/// Smallest admissible adder-tree latency for a given tile size.
pub fn min_adder_tree_latency(tile_size: usize) -> u64 {
    (usize::BITS - (tile_size.max(2) - 1).leading_zeros()) as u64
}

impl SimConfig {
    /// Defaults: FIFO depth 64, 32 DMA words per cycle, tree latency
    /// `ceil(log2 T) + 1` (one multiplier stage), AFAU latency 3, 200 MHz.
    pub fn new(tile_size: usize) -> Self {
        Self {
            tile_size,
            fifo_depth: 64,
            dma_words_per_cycle: 32.0,
            adder_tree_latency: min_adder_tree_latency(tile_size) + 1,
            afau_latency: 3,
            clock_mhz: 200.0,
            weights_resident: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tile_size == 0 {
            return Err(Error::InvalidSimConfig("tile_size must be >= 1".into()));
        }
        if self.fifo_depth == 0 {
            return Err(Error::InvalidSimConfig("fifo_depth must be >= 1".into()));
        }
        if self.dma_words_per_cycle.is_nan() || self.dma_words_per_cycle < 0.125 {
            return Err(Error::InvalidSimConfig(format!(
                "dma_words_per_cycle {} must be >= 0.125",
                self.dma_words_per_cycle
            )));
        }
        let min_tree = min_adder_tree_latency(self.tile_size);
        if self.adder_tree_latency < min_tree {
            return Err(Error::InvalidSimConfig(format!(
                "adder_tree_latency {} below minimum {min_tree} for tile_size {}",
                self.adder_tree_latency, self.tile_size
            )));
        }
        if self.afau_latency == 0 {
            return Err(Error::InvalidSimConfig("afau_latency must be >= 1".into()));
        }
        if self.clock_mhz.is_nan() || self.clock_mhz <= 0.0 {
            return Err(Error::InvalidSimConfig("clock_mhz must be > 0".into()));
        }
        Ok(())
    }
}

/// Weight matrix distributed over `tile_size` banks by row number:
/// row `i` lives in bank `i % tile_size`, so the whole column of a tile is
/// readable in one cycle. Rows of a short edge tile are zero-padded to a
/// full tile so the adder tree shape never changes.
#[derive(Debug, Clone)]
pub struct WeightBanks {
    tile_size: usize,
    rows: usize,
    cols: usize,
    blocks: usize,
    banks: Vec<Vec<f32>>,
}

/// Distributes `w` over banks with the `i % tile_size` mapping.
pub fn load_weights_banked(w: &Tensor2D, tile_size: usize) -> Result<WeightBanks> {
    if w.rows() == 0 || w.cols() == 0 {
        return Err(Error::DimensionMismatch(
            "cannot bank an empty weight matrix".into(),
        ));
    }
    if tile_size == 0 {
        return Err(Error::InvalidSimConfig("tile_size must be >= 1".into()));
    }
    let blocks = w.rows().div_ceil(tile_size);
    let mut banks = vec![vec![0.0_f32; blocks * w.cols()]; tile_size];
    for i in 0..w.rows() {
        let lane = i % tile_size;
        let block = i / tile_size;
        for j in 0..w.cols() {
            banks[lane][block * w.cols() + j] = w.at(i, j);
        }
    }
    Ok(WeightBanks {
        tile_size,
        rows: w.rows(),
        cols: w.cols(),
        blocks,
        banks,
    })
}

impl WeightBanks {
    pub fn bank_count(&self) -> usize {
        self.tile_size
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn bank_of_row(&self, row: usize) -> usize {
        row % self.tile_size
    }

    /// Weight at (block, lane, col); zero for padded rows past the matrix.
    #[inline]
    pub fn weight(&self, block: usize, lane: usize, col: usize) -> f32 {
        self.banks[lane][block * self.cols + col]
    }

    /// Rebuilds the original matrix from the banks (padding dropped).
    pub fn reconstruct(&self) -> Tensor2D {
        let mut t = Tensor2D::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            let lane = self.bank_of_row(i);
            let block = i / self.tile_size;
            for j in 0..self.cols {
                t.set(i, j, self.weight(block, lane, j));
            }
        }
        t
    }
}

/// Per-run cycle and utilization counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimStats {
    pub total_cycles: u64,
    pub tmmu_busy_cycles: u64,
    pub tmmu_stall_cycles: u64,
    pub psau_busy_cycles: u64,
    pub afau_busy_cycles: u64,
    /// Cycles in which the DMA weight stream delivered at least one word.
    pub dma_cycles: u64,
    pub part_sums_emitted: u64,
    pub ts_fifo_max_occupancy: usize,
    pub pa_fifo_max_occupancy: usize,
}

impl SimStats {
    pub fn max_fifo_occupancy(&self) -> usize {
        self.ts_fifo_max_occupancy.max(self.pa_fifo_max_occupancy)
    }

    /// Wall time at the configured clock, in microseconds.
    pub fn sim_time_us(&self, clock_mhz: f64) -> f64 {
        self.total_cycles as f64 / clock_mhz
    }
}

/// Header for the one-row-per-run stats export.
pub fn stats_csv_header() -> &'static str {
    "ni,no,batch,tile_size,fifo_depth,dma_bw,total_cycles,tmmu_busy,tmmu_stall,part_sums,max_fifo_occupancy,clock_mhz,sim_time_us"
}

/// One CSV row in the [`stats_csv_header`] schema.
pub fn stats_csv_row(
    ni: usize,
    no: usize,
    batch: usize,
    cfg: &SimConfig,
    stats: &SimStats,
) -> String {
    format!(
        "{ni},{no},{batch},{},{},{},{},{},{},{},{},{},{}",
        cfg.tile_size,
        cfg.fifo_depth,
        cfg.dma_words_per_cycle,
        stats.total_cycles,
        stats.tmmu_busy_cycles,
        stats.tmmu_stall_cycles,
        stats.part_sums_emitted,
        stats.max_fifo_occupancy(),
        cfg.clock_mhz,
        stats.sim_time_us(cfg.clock_mhz)
    )
}

/// One tile's contribution to one output element, in flight between units.
#[derive(Debug, Clone, Copy)]
struct PartSum {
    row: usize,
    block: usize,
    col: usize,
    value: f32,
}

#[derive(Debug, Clone, Copy)]
struct FinalSum {
    row: usize,
    col: usize,
    value: f32,
}

/// Fixed-latency in-order pipeline with one slot per stage.
#[derive(Debug)]
struct StagePipe<T> {
    latency: u64,
    slots: std::collections::VecDeque<(u64, T)>,
}

impl<T> StagePipe<T> {
    fn new(latency: u64) -> Self {
        Self {
            latency,
            slots: std::collections::VecDeque::with_capacity(latency as usize),
        }
    }

    fn is_full(&self) -> bool {
        self.slots.len() as u64 >= self.latency
    }

    fn push(&mut self, now: u64, v: T) {
        debug_assert!(!self.is_full());
        self.slots.push_back((now + self.latency, v));
    }

    fn head_ready(&self, now: u64) -> bool {
        matches!(self.slots.front(), Some(&(ready, _)) if ready <= now)
    }

    fn pop_ready(&mut self, now: u64) -> Option<T> {
        if self.head_ready(now) {
            self.slots.pop_front().map(|(_, v)| v)
        } else {
            None
        }
    }

    fn len(&self) -> usize {
        self.slots.len()
    }
}

/// Pairwise reduction in the order a binary adder tree sums its leaves.
/// This is the simulator's canonical summation order.
fn adder_tree_sum(mut level: Vec<f32>) -> f32 {
    debug_assert!(!level.is_empty());
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.chunks_exact(2);
        for pair in &mut it {
            next.push(pair[0] + pair[1]);
        }
        if let [odd] = it.remainder() {
            next.push(*odd);
        }
        level = next;
    }
    level[0]
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    banks: WeightBanks,
    x: &'a Tensor2D,
    table: &'a PwlTable,

    blocks_per_row: usize,
    total_blocks: usize,
    no: usize,

    // Block-granular stream state: words still owed to each global block.
    weight_words_left: Vec<u64>,
    node_words_left: Vec<u64>,
    weight_cursor: usize,
    node_cursor: usize,
    dma_budget: f64,

    // TMMU
    current_block: usize,
    col_cursor: usize,
    tmmu_started: bool,
    tree_pipe: StagePipe<PartSum>,

    // PSAU
    acc: Vec<f32>,

    // AFAU
    afau_pipe: StagePipe<(usize, usize, f32)>,

    ts_fifo: FifoModel<PartSum>,
    pa_fifo: FifoModel<FinalSum>,

    y: Tensor2D,
    outputs_written: usize,
    stats: SimStats,
    progress: bool,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig, w: &Tensor2D, x: &'a Tensor2D, table: &'a PwlTable) -> Result<Self> {
        let banks = load_weights_banked(w, cfg.tile_size)?;
        let blocks_per_row = banks.blocks();
        let batch = x.rows();
        let total_blocks = batch * blocks_per_row;
        let no = w.cols();

        let tile_len = |block_in_row: usize| -> u64 {
            let start = block_in_row * cfg.tile_size;
            (w.rows().min(start + cfg.tile_size) - start) as u64
        };
        let mut weight_words_left = Vec::with_capacity(total_blocks);
        let mut node_words_left = Vec::with_capacity(total_blocks);
        for g in 0..total_blocks {
            let row = g / blocks_per_row;
            let block_in_row = g % blocks_per_row;
            let len = tile_len(block_in_row);
            let weight_words = if cfg.weights_resident && row > 0 {
                0
            } else {
                len * no as u64
            };
            weight_words_left.push(weight_words);
            node_words_left.push(len);
        }

        Ok(Self {
            cfg,
            banks,
            x,
            table,
            blocks_per_row,
            total_blocks,
            no,
            weight_words_left,
            node_words_left,
            weight_cursor: 0,
            node_cursor: 0,
            dma_budget: 0.0,
            current_block: 0,
            col_cursor: 0,
            tmmu_started: false,
            tree_pipe: StagePipe::new(cfg.adder_tree_latency),
            acc: vec![0.0; no],
            afau_pipe: StagePipe::new(cfg.afau_latency),
            ts_fifo: FifoModel::new(cfg.fifo_depth),
            pa_fifo: FifoModel::new(cfg.fifo_depth),
            y: Tensor2D::zeros(batch, no),
            outputs_written: 0,
            stats: SimStats::default(),
            progress: false,
        })
    }

    fn block_ready(&self, g: usize) -> bool {
        self.weight_words_left[g] == 0 && self.node_words_left[g] == 0
    }

    /// Furthest block the loaders may touch: the active block plus the one
    /// standby register set (double buffering).
    fn load_limit(&self) -> usize {
        (self.current_block + 1).min(self.total_blocks.saturating_sub(1))
    }

    fn tick_afau(&mut self, now: u64) {
        if let Some((row, col, value)) = self.afau_pipe.pop_ready(now) {
            self.y.set(row, col, value);
            self.outputs_written += 1;
            self.progress = true;
        }
        if !self.afau_pipe.is_full() {
            if let Some(f) = self.pa_fifo.pop() {
                self.stats.afau_busy_cycles += 1;
                let activated = pwl_sigmoid(self.table, f.value as f64) as f32;
                self.afau_pipe.push(now, (f.row, f.col, activated));
                self.progress = true;
            }
        }
    }

    fn tick_psau(&mut self) {
        let Some(head) = self.ts_fifo.front() else {
            return;
        };
        let is_final = head.block == self.blocks_per_row - 1;
        if is_final && self.pa_fifo.is_full() {
            self.pa_fifo.note_stall();
            return;
        }
        let ps = self.ts_fifo.pop().expect("front() was Some");
        self.stats.psau_busy_cycles += 1;
        self.progress = true;
        let sum = self.acc[ps.col] + ps.value;
        if is_final {
            self.acc[ps.col] = 0.0;
            self.pa_fifo.push(FinalSum {
                row: ps.row,
                col: ps.col,
                value: sum,
            });
        } else {
            self.acc[ps.col] = sum;
        }
    }

    /// One tile-column dot product through the multiplier row and adder tree.
    fn compute_part_sum(&self, g: usize, col: usize) -> f32 {
        let row = g / self.blocks_per_row;
        let block = g % self.blocks_per_row;
        let base = block * self.cfg.tile_size;
        let products = (0..self.cfg.tile_size)
            .map(|lane| {
                let i = base + lane;
                // Padded lanes read a banked zero weight; the node value is
                // forced to zero as well so the product is exactly 0.
                let xv = if i < self.banks.rows {
                    self.x.at(row, i)
                } else {
                    0.0
                };
                self.banks.weight(block, lane, col) * xv
            })
            .collect();
        adder_tree_sum(products)
    }

    fn tick_tmmu(&mut self, now: u64) {
        // Drain the matured tree output into the part-sum FIFO first so a
        // new issue can enter the freed stage this same cycle.
        if self.tree_pipe.head_ready(now) {
            if self.ts_fifo.is_full() {
                self.ts_fifo.note_stall();
            } else {
                let ps = self.tree_pipe.pop_ready(now).expect("head was ready");
                self.ts_fifo.push(ps);
                self.progress = true;
            }
        }

        let work_remaining = self.current_block < self.total_blocks;
        let can_issue =
            work_remaining && self.block_ready(self.current_block) && !self.tree_pipe.is_full();
        if can_issue {
            let value = self.compute_part_sum(self.current_block, self.col_cursor);
            let g = self.current_block;
            self.tree_pipe.push(
                now,
                PartSum {
                    row: g / self.blocks_per_row,
                    block: g % self.blocks_per_row,
                    col: self.col_cursor,
                    value,
                },
            );
            self.stats.tmmu_busy_cycles += 1;
            self.stats.part_sums_emitted += 1;
            self.tmmu_started = true;
            self.progress = true;
            self.col_cursor += 1;
            if self.col_cursor == self.no {
                self.col_cursor = 0;
                self.current_block += 1;
            }
        } else if work_remaining && self.tmmu_started {
            // Waiting on operands or on downstream space. The initial
            // preload before the first issue is not counted as a stall.
            self.stats.tmmu_stall_cycles += 1;
        }
    }

    fn tick_loaders(&mut self) {
        let limit = self.load_limit();

        // Weight words ride the budgeted DMA stream.
        self.dma_budget += self.cfg.dma_words_per_cycle;
        let mut delivered = 0_u64;
        let mut out_of_work = false;
        loop {
            while self.weight_cursor < self.total_blocks
                && self.weight_words_left[self.weight_cursor] == 0
            {
                self.weight_cursor += 1;
            }
            if self.weight_cursor > limit || self.weight_cursor >= self.total_blocks {
                out_of_work = true;
                break;
            }
            let budget_words = self.dma_budget as u64;
            if budget_words == 0 {
                break;
            }
            let take = budget_words.min(self.weight_words_left[self.weight_cursor]);
            self.weight_words_left[self.weight_cursor] -= take;
            self.dma_budget -= take as f64;
            delivered += take;
        }
        if out_of_work {
            // Bandwidth does not bank up while there is nothing to send.
            self.dma_budget = 0.0;
        }
        if delivered > 0 {
            self.stats.dma_cycles += 1;
            self.progress = true;
        }

        // Node values stream from the input buffer into the standby register
        // at one word per cycle, independent of the weight stream.
        while self.node_cursor < self.total_blocks && self.node_words_left[self.node_cursor] == 0 {
            self.node_cursor += 1;
        }
        if self.node_cursor <= limit && self.node_cursor < self.total_blocks {
            self.node_words_left[self.node_cursor] -= 1;
            self.progress = true;
        }
    }

    fn dump_state(&self, now: u64) -> String {
        format!(
            "cycle={now} current_block={}/{} col_cursor={} block_ready={} \
             weight_cursor={} node_cursor={} tree_pipe={} ts_fifo={}/{} \
             pa_fifo={}/{} afau_pipe={} outputs={}/{}",
            self.current_block,
            self.total_blocks,
            self.col_cursor,
            self.current_block < self.total_blocks && self.block_ready(self.current_block),
            self.weight_cursor,
            self.node_cursor,
            self.tree_pipe.len(),
            self.ts_fifo.len(),
            self.ts_fifo.depth(),
            self.pa_fifo.len(),
            self.pa_fifo.depth(),
            self.afau_pipe.len(),
            self.outputs_written,
            self.y.rows() * self.y.cols()
        )
    }
}

/// Runs the pipeline to completion.
///
/// Returns the activated outputs (one row per batch sample) and the cycle
/// statistics. The numerical result is independent of timing parameters:
/// FIFO depth and DMA bandwidth only change the statistics.
pub fn sim_run(
    cfg: &SimConfig,
    w: &Tensor2D,
    x: &Tensor2D,
    activation: &PwlTable,
) -> Result<(Tensor2D, SimStats)> {
    cfg.validate()?;
    if x.cols() != w.rows() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} columns, weight matrix has {} rows",
            x.cols(),
            w.rows()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::DimensionMismatch("input batch is empty".into()));
    }

    let mut engine = Engine::new(cfg, w, x, activation)?;
    let total_outputs = x.rows() * w.cols();

    // No unit can sit idle longer than the whole workload takes end to end.
    let total_weight_words: u64 = engine.weight_words_left.iter().sum();
    let total_node_words: u64 = engine.node_words_left.iter().sum();
    let idle_bound = engine.total_blocks as u64 * engine.no as u64
        + (total_weight_words as f64 / cfg.dma_words_per_cycle) as u64
        + total_node_words
        + cfg.adder_tree_latency
        + cfg.afau_latency
        + 64;

    let mut now = 0_u64;
    let mut last_progress = 0_u64;
    while engine.outputs_written < total_outputs {
        engine.progress = false;
        engine.tick_afau(now);
        engine.tick_psau();
        engine.tick_tmmu(now);
        engine.tick_loaders();
        if engine.progress {
            last_progress = now;
        } else if now - last_progress > idle_bound {
            return Err(Error::Deadlock {
                cycle: now,
                idle: now - last_progress,
                dump: engine.dump_state(now),
            });
        }
        now += 1;
    }

    engine.stats.total_cycles = now;
    engine.stats.ts_fifo_max_occupancy = engine.ts_fifo.max_occupancy();
    engine.stats.pa_fifo_max_occupancy = engine.pa_fifo.max_occupancy();
    debug_assert_eq!(engine.ts_fifo.push_count(), engine.ts_fifo.pop_count());
    debug_assert_eq!(engine.pa_fifo.push_count(), engine.pa_fifo.pop_count());
    Ok((engine.y, engine.stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prng::SplitMix64;
    use crate::pwl::build_pwl_table;

    fn synth(rows: usize, cols: usize, rng: &mut SplitMix64) -> Tensor2D {
        let data = (0..rows * cols).map(|_| rng.next_f32_centered()).collect();
        Tensor2D::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn banking_follows_row_modulo() {
        let mut rng = SplitMix64::new(1);
        let w = synth(8, 3, &mut rng);
        let banks = load_weights_banked(&w, 4).unwrap();
        assert_eq!(banks.bank_count(), 4);
        assert_eq!(banks.blocks(), 2);
        for i in 0..8 {
            assert_eq!(banks.bank_of_row(i), i % 4);
        }
        assert_eq!(banks.bank_of_row(33), 33 % 4);

        let wide = load_weights_banked(&synth(40, 2, &mut rng), 32).unwrap();
        assert_eq!(wide.bank_of_row(33), 1);
    }

    #[test]
    fn banks_reconstruct_original_matrix() {
        let mut rng = SplitMix64::new(2);
        // 13 rows with tile 4 leaves a short, zero-padded edge tile.
        let w = synth(13, 5, &mut rng);
        let banks = load_weights_banked(&w, 4).unwrap();
        assert_eq!(banks.reconstruct(), w);
        // Padded lanes read zero.
        assert_eq!(banks.weight(3, 1, 0), 0.0);
        assert_eq!(banks.weight(3, 3, 4), 0.0);
    }

    #[test]
    fn banking_rejects_empty() {
        assert!(load_weights_banked(&Tensor2D::zeros(0, 0), 4).is_err());
    }

    #[test]
    fn zero_input_gives_half_outputs() {
        let table = build_pwl_table(0.5).unwrap();
        let w = Tensor2D::identity(8);
        let x = Tensor2D::zeros(1, 8);
        for t in [1, 3, 8] {
            let cfg = SimConfig::new(t);
            let (y, _) = sim_run(&cfg, &w, &x, &table).unwrap();
            assert_eq!(y.data(), &[0.5; 8], "tile size {t}");
        }
    }

    #[test]
    fn part_sum_count_is_exact() {
        let table = build_pwl_table(0.5).unwrap();
        let mut rng = SplitMix64::new(3);
        let w = synth(70, 9, &mut rng);
        let x = synth(3, 70, &mut rng);
        let cfg = SimConfig::new(32);
        let (_, stats) = sim_run(&cfg, &w, &x, &table).unwrap();
        // ceil(70/32) = 3 blocks per row.
        assert_eq!(stats.part_sums_emitted, 3 * 3 * 9);
    }

    #[test]
    fn determinism_bit_identical() {
        let table = build_pwl_table(0.5).unwrap();
        let mut rng = SplitMix64::new(4);
        let w = synth(33, 17, &mut rng);
        let x = synth(2, 33, &mut rng);
        let cfg = SimConfig::new(8);
        let (y1, s1) = sim_run(&cfg, &w, &x, &table).unwrap();
        let (y2, s2) = sim_run(&cfg, &w, &x, &table).unwrap();
        assert_eq!(y1, y2);
        assert_eq!(s1, s2);
    }

    #[test]
    fn unstalled_run_matches_analytic_total() {
        // Ni=No=64, T=32, generous bandwidth: preload 32 cycles (node-fill
        // bound), 128 issue cycles, then the drain through tree, FIFOs, AFAU.
        let table = build_pwl_table(0.5).unwrap();
        let mut rng = SplitMix64::new(5);
        let w = synth(64, 64, &mut rng);
        let x = synth(1, 64, &mut rng);
        let mut cfg = SimConfig::new(32);
        cfg.dma_words_per_cycle = 2048.0;
        let (_, stats) = sim_run(&cfg, &w, &x, &table).unwrap();
        assert_eq!(stats.tmmu_stall_cycles, 0);
        assert_eq!(stats.part_sums_emitted, 128);
        let drain = cfg.adder_tree_latency + cfg.afau_latency + 2;
        assert_eq!(stats.total_cycles, 32 + 128 + drain);
    }

    #[test]
    fn starved_dma_stalls_but_output_unchanged() {
        let table = build_pwl_table(0.5).unwrap();
        let mut rng = SplitMix64::new(6);
        let w = synth(16, 8, &mut rng);
        let x = synth(2, 16, &mut rng);
        let mut fast = SimConfig::new(4);
        fast.dma_words_per_cycle = 32.0;
        let mut slow = fast.clone();
        slow.dma_words_per_cycle = 0.125;
        let (y_fast, s_fast) = sim_run(&fast, &w, &x, &table).unwrap();
        let (y_slow, s_slow) = sim_run(&slow, &w, &x, &table).unwrap();
        assert_eq!(y_fast, y_slow);
        assert!(s_slow.tmmu_stall_cycles > s_fast.tmmu_stall_cycles);
        assert!(s_slow.total_cycles > s_fast.total_cycles);
    }

    #[test]
    fn resident_weights_skip_restreaming_across_rows() {
        let table = build_pwl_table(0.5).unwrap();
        let mut rng = SplitMix64::new(21);
        let w = synth(32, 32, &mut rng);
        let x = synth(4, 32, &mut rng);
        let mut streaming = SimConfig::new(8);
        streaming.dma_words_per_cycle = 8.0;
        let mut resident = streaming.clone();
        resident.weights_resident = true;
        let (y_s, s_stream) = sim_run(&streaming, &w, &x, &table).unwrap();
        let (y_r, s_res) = sim_run(&resident, &w, &x, &table).unwrap();
        assert_eq!(y_s, y_r);
        assert!(s_res.dma_cycles < s_stream.dma_cycles);
    }

    #[test]
    fn fifo_occupancy_respects_depth() {
        let table = build_pwl_table(0.5).unwrap();
        let mut rng = SplitMix64::new(7);
        let w = synth(24, 12, &mut rng);
        let x = synth(2, 24, &mut rng);
        for depth in [1, 2, 4] {
            let mut cfg = SimConfig::new(8);
            cfg.fifo_depth = depth;
            let (_, stats) = sim_run(&cfg, &w, &x, &table).unwrap();
            assert!(stats.max_fifo_occupancy() <= depth);
        }
    }

    #[test]
    fn rejects_shape_mismatch_and_bad_config() {
        let table = build_pwl_table(0.5).unwrap();
        let w = Tensor2D::zeros(4, 4);
        let x = Tensor2D::zeros(1, 5);
        assert!(sim_run(&SimConfig::new(2), &w, &x, &table).is_err());

        let mut bad = SimConfig::new(2);
        bad.dma_words_per_cycle = 0.01;
        assert!(sim_run(&bad, &w, &Tensor2D::zeros(1, 4), &table).is_err());

        let mut shallow_tree = SimConfig::new(32);
        shallow_tree.adder_tree_latency = 2;
        assert!(shallow_tree.validate().is_err());
    }

    #[test]
    fn min_tree_latency_values() {
        assert_eq!(min_adder_tree_latency(1), 1);
        assert_eq!(min_adder_tree_latency(2), 1);
        assert_eq!(min_adder_tree_latency(3), 2);
        assert_eq!(min_adder_tree_latency(32), 5);
        assert_eq!(min_adder_tree_latency(33), 6);
    }

    #[test]
    fn adder_tree_order_is_pairwise() {
        // ((a+b)+(c+d)) exactly, not sequential.
        let v = vec![1.0e8_f32, 1.0, -1.0e8, 1.0];
        let tree = adder_tree_sum(v);
        let pairwise = (1.0e8_f32 + 1.0) + (-1.0e8_f32 + 1.0);
        assert_eq!(tree, pairwise);
    }
}
