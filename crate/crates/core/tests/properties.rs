//! Property tests for the spec-level invariants: tiling invariance,
//! backpressure safety, FIFO discipline, piecewise-sigmoid bounds, and
//! estimator accuracy.

use proptest::prelude::*;

use dlau_core::io::gen_synthetic;
use dlau_core::nn::rbm_cd1_ref;
use dlau_core::perf::estimate_cycles;
use dlau_core::prng::SplitMix64;
use dlau_core::pwl::{
    build_pwl_table, pwl_max_error, pwl_sigmoid, Activation, VALID_SEGMENT_WIDTHS,
};
use dlau_core::sim::{sim_run, FifoModel, SimConfig};
use dlau_core::tiling::{tiled_forward, TileConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Any tile size gives the bit-identical result of a single full tile,
    /// because accumulation order is globally ascending.
    #[test]
    fn tiling_invariance(
        ni in 1_usize..48,
        no in 1_usize..12,
        batch in 1_usize..4,
        tile in 1_usize..56,
        seed in any::<u64>(),
    ) {
        let w = gen_synthetic(ni, no, seed);
        let x = gen_synthetic(batch, ni, seed.wrapping_add(1));
        let full = tiled_forward(&w, &x, &TileConfig::new(ni, batch).unwrap(), &Activation::ExactSigmoid).unwrap();
        let tiled = tiled_forward(&w, &x, &TileConfig::new(tile, batch).unwrap(), &Activation::ExactSigmoid).unwrap();
        prop_assert_eq!(full, tiled);
    }

    /// For any FIFO depth >= 1 and any DMA bandwidth the pipeline finishes
    /// (no deadlock), produces the same values, respects FIFO depth, and
    /// emits exactly batch x ceil(Ni/T) x No part sums. Only timing differs.
    #[test]
    fn backpressure_safety(
        ni in 1_usize..40,
        no in 1_usize..16,
        batch in 1_usize..3,
        tile in 1_usize..12,
        depth in 1_usize..6,
        bw_sel in 0_usize..5,
        resident in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let table = build_pwl_table(0.5).unwrap();
        let w = gen_synthetic(ni, no, seed);
        let x = gen_synthetic(batch, ni, seed.wrapping_add(1));

        let mut generous = SimConfig::new(tile);
        generous.dma_words_per_cycle = 1024.0;
        let (y_ref, _) = sim_run(&generous, &w, &x, &table).unwrap();

        let mut cfg = SimConfig::new(tile);
        cfg.fifo_depth = depth;
        cfg.dma_words_per_cycle = [0.125, 0.5, 1.0, 3.0, 64.0][bw_sel];
        cfg.weights_resident = resident;
        let (y, stats) = sim_run(&cfg, &w, &x, &table).unwrap();

        prop_assert_eq!(y, y_ref);
        prop_assert!(stats.max_fifo_occupancy() <= depth);
        let expected = (batch * ni.div_ceil(tile) * no) as u64;
        prop_assert_eq!(stats.part_sums_emitted, expected);
        prop_assert!(stats.tmmu_busy_cycles + stats.tmmu_stall_cycles <= stats.total_cycles);
    }

    /// FIFO discipline under arbitrary push/pop interleavings: pop order
    /// equals push order and push_count == pop_count + occupancy.
    #[test]
    fn fifo_order_and_conservation(ops in proptest::collection::vec(any::<bool>(), 0..200)) {
        let mut fifo = FifoModel::new(4);
        let mut next = 0_u32;
        let mut expected_pop = 0_u32;
        for push in ops {
            if push {
                if fifo.is_full() {
                    fifo.note_stall();
                } else {
                    fifo.push(next);
                    next += 1;
                }
            } else if let Some(v) = fifo.pop() {
                prop_assert_eq!(v, expected_pop);
                expected_pop += 1;
            }
            prop_assert!(fifo.len() <= fifo.depth());
            prop_assert_eq!(fifo.push_count(), fifo.pop_count() + fifo.len() as u64);
        }
    }

    /// Output of the piecewise sigmoid stays in [0, 1] for arbitrary finite
    /// inputs and every admissible segment width.
    #[test]
    fn pwl_range(x in -1.0e6_f64..1.0e6, k_sel in 0_usize..7) {
        let table = build_pwl_table(VALID_SEGMENT_WIDTHS[k_sel]).unwrap();
        let f = pwl_sigmoid(&table, x);
        prop_assert!((0.0..=1.0).contains(&f));
    }

    /// When the simulator reports zero stalls the closed-form estimate is
    /// within 10% of the measured total.
    #[test]
    fn estimate_tracks_unstalled_sim(
        ni in 4_usize..64,
        no_mul in 1_usize..4,
        batch in 1_usize..3,
        t_sel in 0_usize..3,
        seed in any::<u64>(),
    ) {
        let tile = [4_usize, 8, 16][t_sel];
        let no = tile * no_mul;
        let mut cfg = SimConfig::new(tile);
        cfg.dma_words_per_cycle = (2 * tile) as f64;
        let table = build_pwl_table(0.5).unwrap();
        let w = gen_synthetic(ni, no, seed);
        let x = gen_synthetic(batch, ni, seed.wrapping_add(1));
        let (_, stats) = sim_run(&cfg, &w, &x, &table).unwrap();
        prop_assume!(stats.tmmu_stall_cycles == 0);
        let est = estimate_cycles(ni, no, batch, &cfg);
        let rel = (est.total as f64 - stats.total_cycles as f64).abs() / stats.total_cycles as f64;
        prop_assert!(rel <= 0.10, "est {} vs sim {}", est.total, stats.total_cycles);
    }
}

/// Refinement: halving the segment width never increases the scan error.
#[test]
fn pwl_refinement_monotone() {
    let mut last = f64::INFINITY;
    for &k in &VALID_SEGMENT_WIDTHS {
        let table = build_pwl_table(k).unwrap();
        let (err, _) = pwl_max_error(&table, 20_000);
        assert!(err <= last, "k={k}: error {err} above coarser {last}");
        last = err;
    }
}

/// In the DMA-starved regime the additive estimate undershoots; the
/// documented 25% looseness covers moderate starvation (here 0.8x the
/// sustaining bandwidth, i.e. per-block DMA time 1.25x the compute time).
/// Deeper starvation makes the run DMA-bound and the additive model is not
/// calibrated for it.
#[test]
fn estimate_within_25_percent_when_starved() {
    let table = build_pwl_table(0.5).unwrap();
    for (ni, no, tile) in [(64_usize, 64_usize, 32_usize), (96, 48, 16), (128, 128, 32)] {
        let mut cfg = SimConfig::new(tile);
        cfg.dma_words_per_cycle = tile as f64 * 0.8;
        let w = gen_synthetic(ni, no, 3);
        let x = gen_synthetic(1, ni, 4);
        let (_, stats) = sim_run(&cfg, &w, &x, &table).unwrap();
        assert!(stats.tmmu_stall_cycles > 0, "expected a starved run");
        let est = estimate_cycles(ni, no, 1, &cfg);
        let rel = (stats.total_cycles as f64 - est.total as f64).abs() / stats.total_cycles as f64;
        assert!(
            rel <= 0.25,
            "ni={ni} no={no} t={tile}: est {} vs sim {} ({rel:.3})",
            est.total,
            stats.total_cycles
        );
    }
}

/// Reference ops are pure: concurrent calls on shared read-only inputs give
/// identical results.
#[test]
fn rbm_identical_across_threads() {
    let w = gen_synthetic(6, 5, 11);
    let v0 = gen_synthetic(3, 6, 12);
    let vb = vec![0.0_f32; 6];
    let hb = vec![0.0_f32; 5];
    let baseline = rbm_cd1_ref(&w, &vb, &hb, &v0, &mut SplitMix64::new(99)).unwrap();
    std::thread::scope(|s| {
        for _ in 0..4 {
            s.spawn(|| {
                let g = rbm_cd1_ref(&w, &vb, &hb, &v0, &mut SplitMix64::new(99)).unwrap();
                assert_eq!(g.d_weights, baseline.d_weights);
                assert_eq!(g.d_visible_bias, baseline.d_visible_bias);
                assert_eq!(g.d_hidden_bias, baseline.d_hidden_bias);
            });
        }
    });
}
