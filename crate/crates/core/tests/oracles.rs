//! Detectors against independent exhaustive searches.

use imphy::bits;
use imphy::channel::{complex_normal, FlatChannel};
use imphy::constellation::Constellation;
use imphy::detection::{llr_subblock, ml_spatial, ml_subblock, two_stage_sm, LlrMode};
use imphy::ofdm::{OfdmImConfig, OfdmVariant, SubblockCodec};
use imphy::spatial::{SchemeKind, SchemeSpec, SpatialScheme};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex<f64>;

/// argmin with strict `<`, so the first (lowest) index wins ties.
fn argmin(metrics: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, m) in metrics.enumerate() {
        if m < best.1 {
            best = (i, m);
        }
    }
    best.0
}

fn spatial_oracle(y: &[C], h: &FlatChannel<f64>, book: &[Vec<C>]) -> usize {
    argmin(book.iter().map(|x| {
        (0..y.len())
            .map(|r| {
                let hx: C = (0..x.len()).map(|t| h.gain(r, t) * x[t]).sum();
                (y[r] - hx).norm_sqr()
            })
            .sum()
    }))
}

#[test]
fn ml_spatial_equals_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for spec in [
        SchemeSpec::new(SchemeKind::Sm, 2, 8),
        SchemeSpec::new(SchemeKind::Qsm, 2, 4),
        SchemeSpec::new(SchemeKind::Esm, 2, 4),
        SchemeSpec::new(SchemeKind::Gsm, 4, 4).with_n_a(2),
    ] {
        let scheme = spec.build::<f64>().unwrap();
        let book = scheme.enumerate_codebook().unwrap();
        let vectors: Vec<Vec<C>> = book.iter().map(|c| c.vector.clone()).collect();
        for _ in 0..1000 {
            let h = FlatChannel::draw(2, scheme.n_t(), &mut rng);
            let sent = &book[rng.random_range(0..book.len())];
            let y: Vec<C> = h.matrix().matvec(&sent.vector).iter().map(|v| v + complex_normal(&mut rng, 0.3)).collect();
            assert_eq!(ml_spatial(&y, &h, &book).unwrap().index, spatial_oracle(&y, &h, &vectors));
        }
    }
}

#[test]
fn ml_subblock_equals_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for config in [
        OfdmImConfig::im(4, 4, 2, 2),
        OfdmImConfig::im(4, 4, 1, 4),
        OfdmImConfig::im(4, 4, 0, 2).with_variant(OfdmVariant::GimI),
        OfdmImConfig::im(4, 4, 2, 16).with_variant(OfdmVariant::GimII),
    ] {
        let codec = SubblockCodec::<f64>::new(&config).unwrap();
        let b = codec.bits();
        let all: Vec<Vec<C>> = (0..1u64 << b).map(|v| codec.build(&bits::from_u64(v, b)).unwrap()).collect();
        for _ in 0..1000 {
            let h: Vec<C> = (0..4).map(|_| complex_normal(&mut rng, 1.0)).collect();
            let x = &all[rng.random_range(0..all.len())];
            let y: Vec<C> = x.iter().zip(&h).map(|(a, g)| a * g + complex_normal(&mut rng, 0.2)).collect();
            let want = argmin(all.iter().map(|c| (0..4).map(|n| (y[n] - h[n] * c[n]).norm_sqr()).sum()));
            assert_eq!(ml_subblock(&y, &h, &codec).unwrap().bits, bits::from_u64(want as u64, b));
        }
    }
}

#[test]
fn llr_agrees_with_ml_at_30_db() {
    let codec = SubblockCodec::<f64>::new(&OfdmImConfig::im(4, 4, 2, 2)).unwrap();
    let n0 = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let trials = 10_000;
    let mut agree = 0;
    for _ in 0..trials {
        let input = bits::random(&mut rng, 4);
        let x = codec.build(&input).unwrap();
        let h: Vec<C> = (0..4).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let y: Vec<C> = x.iter().zip(&h).map(|(a, g)| a * g + complex_normal(&mut rng, n0)).collect();
        let l = llr_subblock(&y, &h, &codec, n0, LlrMode::ExactLog).unwrap();
        assert_eq!(l.bits.len(), 4);
        agree += (l.bits == ml_subblock(&y, &h, &codec).unwrap().bits) as usize;
    }
    assert!(agree as f64 >= 0.99 * trials as f64, "{agree}/{trials}");
}

#[test]
fn two_stage_tracks_ml_at_30_db() {
    let scheme = SpatialScheme::sm(2, Constellation::<f64>::psk(8, 0.0).unwrap()).unwrap();
    let book = scheme.enumerate_codebook().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut agree = 0;
    for _ in 0..10_000 {
        let h = FlatChannel::draw(2, 2, &mut rng);
        let cw = &book[rng.random_range(0..16)];
        let y: Vec<C> = h.matrix().matvec(&cw.vector).iter().map(|v| v + complex_normal(&mut rng, 1e-3)).collect();
        agree += (two_stage_sm(&y, &h, &scheme).unwrap().bits == ml_spatial(&y, &h, &book).unwrap().bits) as usize;
    }
    assert!(agree >= 9_500, "{agree}");
}
