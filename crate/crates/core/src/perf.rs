//! Closed-form cycle estimation, calibrated resource estimation, and the
//! sweep/speedup report.

use crate::error::{Error, Result};
use crate::sim::{stats_csv_header, stats_csv_row, SimConfig, SimStats};

/// Analytic cycle breakdown for one run of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleEstimate {
    /// Issue cycles: one part sum per cycle, batch x ceil(Ni/T) x No.
    pub tmmu_busy: u64,
    /// First-tile fill: weight words over the DMA bandwidth, overlapped with
    /// the one-word-per-cycle node fill.
    pub preload: u64,
    /// End-of-run drain through the adder tree, two FIFO hops, and the AFAU.
    pub drain: u64,
    pub total: u64,
    pub assumptions: String,
}

/// Predicts the cycle count of an unstalled run: `preload + busy + drain`.
///
/// The model assumes the DMA sustains the weight stream (no TMMU stalls), so
/// it matches the simulator exactly in that regime and undershoots when the
/// DMA is starved.
pub fn estimate_cycles(ni: usize, no: usize, batch: usize, cfg: &SimConfig) -> CycleEstimate {
    assert!(ni >= 1 && no >= 1 && batch >= 1, "counts must be >= 1");
    let blocks = ni.div_ceil(cfg.tile_size);
    let tmmu_busy = (batch * blocks * no) as u64;
    let first_tile = cfg.tile_size.min(ni) as u64;
    let weight_fill = ((first_tile * no as u64) as f64 / cfg.dma_words_per_cycle).ceil() as u64;
    let preload = weight_fill.max(first_tile);
    let drain = cfg.adder_tree_latency + cfg.afau_latency + 2;
    CycleEstimate {
        tmmu_busy,
        preload,
        drain,
        total: preload + tmmu_busy + drain,
        assumptions: "steady-state one part sum per cycle; DMA sustains the weight stream \
                      (no stalls); node stream fills the first tile during weight preload; \
                      drain = adder-tree latency + two FIFO hops + AFAU latency"
            .into(),
    }
}

/// BRAM/DSP cost of one processing unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitResources {
    pub brams: u64,
    pub dsps: u64,
}

/// Calibrated BRAM/DSP model per unit plus totals.
///
/// FF and LUT counts are not modeled: a single calibration point gives no
/// credible formula, so they are reported as absent rather than invented.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceEstimate {
    pub tmmu: UnitResources,
    pub psau: UnitResources,
    pub afau: UnitResources,
    pub total: UnitResources,
    pub formulas: &'static str,
}

const RESOURCE_FORMULAS: &str = "TMMU: T weight-bank BRAMs; DSPs = 3 per floating multiplier \
     x T + 2 per floating adder x (T-1) tree adders. PSAU: 1 BRAM, 2 DSPs (one accumulator \
     adder). AFAU: 2 BRAMs (slope and intercept tables), 7 DSPs. FFs/LUTs not modeled.";

/// Evaluates the calibrated resource formulas at tile size `t`.
pub fn estimate_resources(t: usize) -> ResourceEstimate {
    assert!(t >= 1, "tile size must be >= 1");
    let t = t as u64;
    let tmmu = UnitResources {
        brams: t,
        dsps: 3 * t + 2 * (t - 1),
    };
    let psau = UnitResources { brams: 1, dsps: 2 };
    let afau = UnitResources { brams: 2, dsps: 7 };
    let total = UnitResources {
        brams: tmmu.brams + psau.brams + afau.brams,
        dsps: tmmu.dsps + psau.dsps + afau.dsps,
    };
    ResourceEstimate {
        tmmu,
        psau,
        afau,
        total,
        formulas: RESOURCE_FORMULAS,
    }
}

/// CSV rendering of a resource estimate, one row per unit plus the total.
pub fn resources_csv(est: &ResourceEstimate) -> String {
    let mut out = String::from("unit,brams,dsps\n");
    for (name, u) in [
        ("tmmu", est.tmmu),
        ("psau", est.psau),
        ("afau", est.afau),
        ("total", est.total),
    ] {
        out.push_str(&format!("{name},{},{}\n", u.brams, u.dsps));
    }
    out
}

/// One labeled simulation run, ready for the sweep report.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub label: String,
    pub ni: usize,
    pub no: usize,
    pub batch: usize,
    pub cfg: SimConfig,
    pub stats: SimStats,
}

impl RunRecord {
    /// Cycles normalized by the amount of matrix work (batch x Ni x No
    /// multiply-accumulates). Fixed overheads amortize as networks grow, so
    /// this is the quantity that trends downward with size.
    pub fn cycles_per_element(&self) -> f64 {
        self.stats.total_cycles as f64 / (self.batch * self.ni * self.no) as f64
    }
}

/// Builds the sweep report: the stats-export columns plus normalized cycles
/// and the cycle ratio of the designated baseline run over each run.
///
/// Rows are sorted by (Ni, No, tile size, label) regardless of the order the
/// runs completed in. Duplicate labels and a missing baseline are errors.
pub fn speedup_report(runs: &[RunRecord], baseline_label: &str) -> Result<String> {
    let mut seen = std::collections::BTreeSet::new();
    for r in runs {
        if !seen.insert(r.label.as_str()) {
            return Err(Error::DuplicateLabel(r.label.clone()));
        }
    }
    let baseline = runs
        .iter()
        .find(|r| r.label == baseline_label)
        .ok_or_else(|| Error::InvalidValue {
            key: "baseline".into(),
            value: baseline_label.into(),
        })?;
    let baseline_cycles = baseline.stats.total_cycles as f64;

    let mut ordered: Vec<&RunRecord> = runs.iter().collect();
    ordered.sort_by(|a, b| {
        (a.ni, a.no, a.cfg.tile_size, &a.label).cmp(&(b.ni, b.no, b.cfg.tile_size, &b.label))
    });

    let mut out = format!(
        "label,{},cycles_per_element,speedup_vs_baseline\n",
        stats_csv_header()
    );
    for r in ordered {
        let speedup = baseline_cycles / r.stats.total_cycles as f64;
        out.push_str(&format!(
            "{},{},{},{speedup}\n",
            r.label,
            stats_csv_row(r.ni, r.no, r.batch, &r.cfg, &r.stats),
            r.cycles_per_element()
        ));
    }
    Ok(out)
}
