//! Functional (untimed) tiled matrix multiplication.
//!
//! This is the behavioral reference for the cycle simulator: input neurons
//! are partitioned into tiles of at most `tile_size`, part sums accumulate
//! tile by tile, and the activation fires exactly once per output element
//! after the final tile. Accumulation is globally ascending in the input
//! index, so the result is bit-identical to the untiled reference.

use crate::error::{Error, Result};
use crate::pwl::Activation;
use crate::tensor::Tensor2D;

/// Tile size and expected batch size for a tiled forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileConfig {
    pub tile_size: usize,
    pub batch_size: usize,
}

impl TileConfig {
    pub fn new(tile_size: usize, batch_size: usize) -> Result<Self> {
        if tile_size == 0 || batch_size == 0 {
            return Err(Error::InvalidTiling(format!(
                "tile_size {tile_size} and batch_size {batch_size} must be >= 1"
            )));
        }
        Ok(Self {
            tile_size,
            batch_size,
        })
    }
}

/// Half-open row range `[start, end)` of one tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileRange {
    pub start: usize,
    pub end: usize,
}

impl TileRange {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Splits `[0, extent)` into contiguous ranges of `tile_size`, the last one
/// possibly shorter.
pub fn tile_partition(extent: usize, tile_size: usize) -> Result<Vec<TileRange>> {
    if extent == 0 || tile_size == 0 {
        return Err(Error::InvalidTiling(format!(
            "cannot partition extent {extent} with tile_size {tile_size}"
        )));
    }
    let mut ranges = Vec::with_capacity(extent.div_ceil(tile_size));
    let mut start = 0;
    while start < extent {
        let end = (start + tile_size).min(extent);
        ranges.push(TileRange { start, end });
        start = end;
    }
    Ok(ranges)
}

/// Read-only weight accessor, so tests can interpose access logging without
/// touching the algorithm.
pub trait WeightSource {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn at(&self, i: usize, j: usize) -> f32;
}

impl WeightSource for Tensor2D {
    fn rows(&self) -> usize {
        self.rows()
    }

    fn cols(&self) -> usize {
        self.cols()
    }

    fn at(&self, i: usize, j: usize) -> f32 {
        self.at(i, j)
    }
}

/// Core tiled loop, generic over the weight source and the activation
/// applied after the last tile.
///
/// Loop nest: batch sample, then tile, then output column, then the rows of
/// the tile. For each `(n, j)` the products are added onto one accumulator
/// in ascending row order across tiles.
pub fn tiled_forward_with<W, F>(
    weights: &W,
    x: &Tensor2D,
    cfg: &TileConfig,
    mut final_activation: F,
) -> Result<Tensor2D>
where
    W: WeightSource,
    F: FnMut(f32) -> f32,
{
    let ni = weights.rows();
    let no = weights.cols();
    if x.cols() != ni {
        return Err(Error::DimensionMismatch(format!(
            "input has {} columns, weight matrix has {ni} rows",
            x.cols()
        )));
    }
    if x.rows() != cfg.batch_size {
        return Err(Error::DimensionMismatch(format!(
            "input has {} rows, config says batch_size {}",
            x.rows(),
            cfg.batch_size
        )));
    }
    let tiles = tile_partition(ni, cfg.tile_size)?;
    let mut y = Tensor2D::zeros(x.rows(), no);
    for n in 0..x.rows() {
        for tile in &tiles {
            for j in 0..no {
                let mut acc = y.at(n, j);
                for i in tile.start..tile.end {
                    acc += weights.at(i, j) * x.at(n, i);
                    if i == ni - 1 {
                        acc = final_activation(acc);
                    }
                }
                y.set(n, j, acc);
            }
        }
    }
    Ok(y)
}

/// Tiled forward pass over a weight tensor with the given activation.
pub fn tiled_forward(
    w: &Tensor2D,
    x: &Tensor2D,
    cfg: &TileConfig,
    activation: &Activation,
) -> Result<Tensor2D> {
    tiled_forward_with(w, x, cfg, |v| activation.apply_f32(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{matvec_naive, sigmoid_exact};
    use crate::prng::SplitMix64;

    fn synth(rows: usize, cols: usize, rng: &mut SplitMix64) -> Tensor2D {
        let data = (0..rows * cols).map(|_| rng.next_f32_centered()).collect();
        Tensor2D::from_vec(rows, cols, data).unwrap()
    }

    #[test]
    fn partition_exact_division() {
        let t = tile_partition(64, 32).unwrap();
        assert_eq!(
            t,
            vec![
                TileRange { start: 0, end: 32 },
                TileRange { start: 32, end: 64 }
            ]
        );
    }

    #[test]
    fn partition_remainder_tile() {
        let t = tile_partition(70, 32).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t[2], TileRange { start: 64, end: 70 });
    }

    #[test]
    fn partition_tile_larger_than_extent() {
        let t = tile_partition(5, 8).unwrap();
        assert_eq!(t, vec![TileRange { start: 0, end: 5 }]);
    }

    #[test]
    fn partition_rejects_zero() {
        assert!(tile_partition(0, 4).is_err());
        assert!(tile_partition(4, 0).is_err());
    }

    #[test]
    fn partition_covers_exactly_once() {
        for extent in [1, 7, 32, 33, 100] {
            for tile in [1, 3, 8, 32, 200] {
                let ranges = tile_partition(extent, tile).unwrap();
                let mut cursor = 0;
                for r in &ranges {
                    assert_eq!(r.start, cursor);
                    assert!(r.end > r.start && r.end <= extent);
                    cursor = r.end;
                }
                assert_eq!(cursor, extent);
            }
        }
    }

    #[test]
    fn identity_weights_give_elementwise_sigmoid() {
        let w = Tensor2D::identity(5);
        let x = Tensor2D::from_vec(1, 5, vec![-1.0, 0.0, 0.5, 2.0, -3.0]).unwrap();
        let cfg = TileConfig::new(2, 1).unwrap();
        let y = tiled_forward(&w, &x, &cfg, &Activation::ExactSigmoid).unwrap();
        for j in 0..5 {
            assert_eq!(y.at(0, j), sigmoid_exact(x.at(0, j) as f64) as f32);
        }
    }

    #[test]
    fn linear_mode_matches_brute_force() {
        let w = Tensor2D::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let x = Tensor2D::from_vec(1, 2, vec![5.0, 6.0]).unwrap();
        let cfg = TileConfig::new(1, 1).unwrap();
        let y = tiled_forward(&w, &x, &cfg, &Activation::Linear).unwrap();
        assert_eq!(y.data(), &[23.0, 34.0]);
    }

    #[test]
    fn edge_tile_case_matches_naive_oracle() {
        // 37 rows forces a short final tile with T = 8.
        let mut rng = SplitMix64::new(2024);
        let w = synth(37, 23, &mut rng);
        let x = synth(3, 37, &mut rng);
        let cfg = TileConfig::new(8, 3).unwrap();
        let y = tiled_forward(&w, &x, &cfg, &Activation::ExactSigmoid).unwrap();
        for n in 0..3 {
            let pre = matvec_naive(&w, x.row(n)).unwrap();
            for (j, &p) in pre.iter().enumerate() {
                let expect = sigmoid_exact(p as f64) as f32;
                assert!((y.at(n, j) - expect).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn tiling_invariance_all_tile_sizes() {
        let mut rng = SplitMix64::new(99);
        let w = synth(37, 11, &mut rng);
        let x = synth(2, 37, &mut rng);
        let full = tiled_forward(
            &w,
            &x,
            &TileConfig::new(37, 2).unwrap(),
            &Activation::ExactSigmoid,
        )
        .unwrap();
        for t in 1..=37 {
            let y = tiled_forward(
                &w,
                &x,
                &TileConfig::new(t, 2).unwrap(),
                &Activation::ExactSigmoid,
            )
            .unwrap();
            assert_eq!(y, full, "tile size {t} changed the result");
        }
    }

    #[test]
    fn activation_fires_once_per_output_element() {
        let mut rng = SplitMix64::new(5);
        let w = synth(10, 4, &mut rng);
        let x = synth(3, 10, &mut rng);
        let cfg = TileConfig::new(3, 3).unwrap();
        let mut count = 0_usize;
        tiled_forward_with(&w, &x, &cfg, |v| {
            count += 1;
            v
        })
        .unwrap();
        assert_eq!(count, 3 * 4);
    }

    /// Records the row of every weight access in order.
    struct LoggingSource<'a> {
        inner: &'a Tensor2D,
        accesses: std::cell::RefCell<Vec<usize>>,
    }

    impl WeightSource for LoggingSource<'_> {
        fn rows(&self) -> usize {
            self.inner.rows()
        }

        fn cols(&self) -> usize {
            self.inner.cols()
        }

        fn at(&self, i: usize, j: usize) -> f32 {
            self.accesses.borrow_mut().push(i);
            self.inner.at(i, j)
        }
    }

    #[test]
    fn each_tile_touches_only_its_own_weight_rows() {
        let mut rng = SplitMix64::new(31);
        let w = synth(21, 6, &mut rng);
        let x = synth(2, 21, &mut rng);
        let cfg = TileConfig::new(8, 2).unwrap();
        let log = LoggingSource {
            inner: &w,
            accesses: std::cell::RefCell::new(Vec::new()),
        };
        tiled_forward_with(&log, &x, &cfg, |v| v).unwrap();

        let tiles = tile_partition(21, 8).unwrap();
        let accesses = log.accesses.into_inner();
        let mut cursor = 0;
        for _n in 0..2 {
            for tile in &tiles {
                let span = tile.len() * 6;
                for &row in &accesses[cursor..cursor + span] {
                    assert!(
                        row >= tile.start && row < tile.end,
                        "row {row} accessed during tile [{}, {})",
                        tile.start,
                        tile.end
                    );
                }
                cursor += span;
            }
        }
        assert_eq!(cursor, accesses.len());
    }
}
