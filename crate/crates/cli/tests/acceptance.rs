//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! A check marked `allowed_to_fail` is still computed and reported; it only
//! stops the run from exiting non-zero.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{imphy, imphy_env, table_column_matches};
use imphy::analysis::{complexity_reduction_vs_vblast, count_real_multiplications, fig2_reports, DetectorKind, OfdmRate};
use imphy::bits;
use imphy::channel::{complex_normal, FlatChannel};
use imphy::combinatorics::binomial;
use imphy::detection::{llr_subblock, ml_spatial, ml_subblock, LlrMode};
use imphy::harness::{fig6_experiments, fig6_grid, rayleigh_bpsk_ber, run_sweep, BerRecord, Experiment, LinkSpec, SpatialDetector};
use imphy::ofdm::{OfdmImConfig, OfdmModem, OfdmVariant, SubblockCodec};
use imphy::spatial::{SchemeKind, SchemeSpec};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex<f64>;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
    allowed_to_fail: bool,
}

fn check(name: &'static str, pass: bool, detail: impl Into<String>) -> Check {
    Check { name, pass, detail: detail.into(), allowed_to_fail: false }
}

struct Criterion {
    id: &'static str,
    title: &'static str,
    run: fn() -> Vec<Check>,
}

fn golden_codebooks() -> Vec<Check> {
    let start = Instant::now();
    let mut matched = 0;
    for (column, scheme, m) in [(0, "sm", "8"), (1, "esm", "4"), (2, "qsm", "4")] {
        let out = imphy(&["codebook", "--scheme", scheme, "--nt", "2", "--m", m]);
        assert!(out.ok, "{}", out.stderr);
        matched += table_column_matches(&out.stdout, column);
    }
    let secs = start.elapsed().as_secs_f64();
    vec![
        check("vectors", matched == 48, format!("{matched}/48 vectors exact")),
        check("runtime", secs < 1.0, format!("{secs:.2} s")),
    ]
}

fn rates() -> Vec<Check> {
    let bpcu = |s: SchemeSpec| s.build::<f64>().unwrap().bits_per_use();
    let sm = bpcu(SchemeSpec::new(SchemeKind::Sm, 8, 2));
    let gsm = SchemeSpec::new(SchemeKind::Gsm, 8, 2).with_n_a(4).build::<f64>().unwrap().spatial_bits();
    let masm = bpcu(SchemeSpec::new(SchemeKind::MaSm, 4, 4).with_n_a(2));
    let qsm = bpcu(SchemeSpec::new(SchemeKind::Qsm, 2, 4));
    let im = OfdmRate::new(&OfdmImConfig::im(4, 4, 2, 2)).unwrap().subblock_bits;
    let g1 = OfdmRate::new(&OfdmImConfig::im(4, 4, 0, 2).with_variant(OfdmVariant::GimI)).unwrap();
    let g2 = OfdmRate::new(&OfdmImConfig::im(16, 16, 10, 4).with_variant(OfdmVariant::GimII)).unwrap();
    let base = g2.im_equivalent_bits.unwrap();
    // +37.5 % as the exact ratio 3/8
    let gain_exact = (g2.subblock_bits - base) * 8 == base * 3;
    let c = binomial(512, 256).unwrap().to_string();
    vec![
        check("SM(8,2)", sm == 4, format!("{sm} bpcu")),
        check("GSM(8,4)", gsm == 6, format!("{gsm} spatial bits")),
        check("MA-SM(4,2,QPSK)", masm == 6, format!("{masm} bpcu")),
        check("QSM(2,4)", qsm == 4, format!("{qsm} bpcu")),
        check("OFDM-IM(4,2,BPSK)", im == 4, format!("{im} bits")),
        check("GIM-I(4,BPSK)", g1.realizations == 81u32.into() && g1.subblock_bits == 6, format!("{} / {} bits", g1.realizations, g1.subblock_bits)),
        check("GIM-II(16,10,QPSK)", g2.subblock_bits == 44 && base == 32 && gain_exact, format!("{} vs {base} bits", g2.subblock_bits)),
        check("C(512,256)", c.starts_with("47255") && c.len() == 153, format!("{}.{}e{}", &c[..1], &c[1..5], c.len() - 1)),
    ]
}

fn dmin_relations() -> Vec<Check> {
    let start = Instant::now();
    let reports = fig2_reports().unwrap();
    let secs = start.elapsed().as_secs_f64();
    // rows come in groups of SIMO, SM, ESM, QSM per configuration
    let d: Vec<[f64; 4]> = reports.chunks(4).map(|c| [c[0].d_min, c[1].d_min, c[2].d_min, c[3].d_min]).collect();
    let equal_ab = (0..2).all(|i| (d[i][2] - d[i][3]).abs() < 1e-9);
    let less_cd = (2..4).all(|i| d[i][3] < d[i][2]);
    let ratios: Vec<Vec<f64>> = (1..4).map(|s| d.iter().map(|row| row[s] / row[0]).collect()).collect();
    let monotone = ratios.iter().all(|r| r.windows(2).all(|w| w[1] >= w[0]));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(",");
    vec![
        check("(i) ESM = QSM at (a),(b)", equal_ab, format!("ESM {} / QSM {}", fmt(&[d[0][2], d[1][2]]), fmt(&[d[0][3], d[1][3]]))),
        check("(ii) QSM < ESM at (c),(d)", less_cd, format!("QSM {} / ESM {}", fmt(&[d[2][3], d[3][3]]), fmt(&[d[2][2], d[3][2]]))),
        Check {
            name: "(iii) d_min ratio to SIMO non-decreasing",
            pass: monotone,
            detail: format!("SM {} ESM {} QSM {}", fmt(&ratios[0]), fmt(&ratios[1]), fmt(&ratios[2])),
            allowed_to_fail: true,
        },
        check("runtime", secs < 10.0, format!("{secs:.2} s")),
    ]
}

fn complexity() -> Vec<Check> {
    let r = |n| complexity_reduction_vs_vblast(n).unwrap();
    let formula = r(1) == 0.0 && (r(2) - 40.0).abs() <= 0.01 && (r(4) - 66.67).abs() <= 0.01 && r(1024) > 99.8;
    let mut spaces = true;
    for n_t in [2, 4, 8] {
        for m in [2, 4, 8, 16] {
            let s = SchemeSpec::new(SchemeKind::Sm, n_t, m).build::<f64>().unwrap();
            spaces &= count_real_multiplications(DetectorKind::Ml, &s, 2).unwrap().search_space == n_t * m;
            spaces &= count_real_multiplications(DetectorKind::TwoStage, &s, 2).unwrap().search_space == n_t + m;
        }
    }
    vec![
        check("reduction formula", formula, format!("{:.2}%, {:.2}%, {:.2}%, {:.3}%", r(1), r(2), r(4), r(1024))),
        check("instrumented search spaces", spaces, "ML n_T*M, two-stage n_T+M"),
    ]
}

fn loopback() -> Vec<Check> {
    use SchemeKind::*;
    let mut specs = vec![SchemeSpec::new(Esm, 2, 4), SchemeSpec::new(Esm, 4, 4), SchemeSpec::new(Esm, 4, 16)];
    for m in [2, 4, 8, 16, 64] {
        specs.push(SchemeSpec::new(Simo, 1, m));
        for n_t in [2, 4, 8] {
            specs.extend([SchemeSpec::new(Sm, n_t, m), SchemeSpec::new(Qsm, n_t, m), SchemeSpec::new(Vblast, n_t, m)]);
            for n_a in 1..=n_t {
                specs.push(SchemeSpec::new(Gsm, n_t, m).with_n_a(n_a));
                specs.push(SchemeSpec::new(MaSm, n_t, m).with_n_a(n_a));
            }
        }
    }
    let (mut schemes, mut words, mut bad) = (0, 0u64, 0);
    for spec in specs {
        let Ok(s) = spec.build::<f64>() else { continue };
        if s.bits_per_use() > 12 {
            continue;
        }
        schemes += 1;
        let b = s.bits_per_use();
        for v in 0..1u64 << b {
            let input = bits::from_u64(v, b);
            words += 1;
            bad += (s.decode(&s.encode(&input).unwrap().vector).unwrap() != input) as u64;
        }
    }
    let mut configs = Vec::new();
    for m in [2, 4, 16] {
        configs.extend((1..=4).map(|k| OfdmImConfig::im(4, 4, k, m)));
        configs.push(OfdmImConfig::im(4, 4, 0, m).with_variant(OfdmVariant::GimI));
        if m > 2 {
            configs.extend((1..=4).map(|k| OfdmImConfig::im(4, 4, k, m).with_variant(OfdmVariant::GimII)));
        }
    }
    let mut ofdm_bad = 0;
    for c in &configs {
        let codec = SubblockCodec::<f64>::new(c).unwrap();
        for v in 0..1u64 << codec.bits() {
            let input = bits::from_u64(v, codec.bits());
            let x = codec.build(&input).unwrap();
            ofdm_bad += (codec.content_from_values(&x).and_then(|cn| codec.bits_of(&cn)) != Some(input)) as usize;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst: f64 = 0.0;
    for (n_f, cp) in [(64, 16), (512, 16)] {
        let modem = OfdmModem::<f64>::new(n_f, cp).unwrap();
        let x: Vec<C> = (0..n_f).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let back = modem.demodulate(&modem.modulate(&x).unwrap()).unwrap();
        worst = back.iter().zip(&x).map(|(a, b)| (a - b).norm()).fold(worst, f64::max);
    }
    vec![
        check("spatial schemes", bad == 0 && schemes > 60, format!("{schemes} schemes, {words} words, {bad} mismatches")),
        check("OFDM-IM variants at N=4", ofdm_bad == 0, format!("{} configurations, {ofdm_bad} mismatches", configs.len())),
        check("DFT/CP identity", worst < 1e-12, format!("max error {worst:.1e}")),
    ]
}

fn argmin(metrics: impl Iterator<Item = f64>) -> usize {
    metrics.enumerate().fold((0, f64::INFINITY), |b, (i, m)| if m < b.1 { (i, m) } else { b }).0
}

fn oracles() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let scheme = SchemeSpec::new(SchemeKind::Sm, 2, 8).build::<f64>().unwrap();
    let book = scheme.enumerate_codebook().unwrap();
    let mut spatial_mismatch = 0;
    for _ in 0..1000 {
        let h = FlatChannel::draw(2, 2, &mut rng);
        let x = &book[rng.random_range(0..book.len())].vector;
        let y: Vec<C> = h.matrix().matvec(x).into_iter().map(|v| v + complex_normal(&mut rng, 0.5)).collect();
        let want = argmin(book.iter().map(|c| (0..2).map(|r| (y[r] - h.gain(r, 0) * c.vector[0] - h.gain(r, 1) * c.vector[1]).norm_sqr()).sum()));
        spatial_mismatch += (ml_spatial(&y, &h, &book).unwrap().index != want) as usize;
    }
    let codec = SubblockCodec::<f64>::new(&OfdmImConfig::im(4, 4, 2, 2)).unwrap();
    let all: Vec<Vec<C>> = (0..16).map(|v| codec.build(&bits::from_u64(v, 4)).unwrap()).collect();
    let mut sub_mismatch = 0;
    for _ in 0..1000 {
        let h: Vec<C> = (0..4).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let x = &all[rng.random_range(0..16)];
        let y: Vec<C> = x.iter().zip(&h).map(|(a, g)| a * g + complex_normal(&mut rng, 0.3)).collect();
        let want = argmin(all.iter().map(|c| (0..4).map(|n| (y[n] - h[n] * c[n]).norm_sqr()).sum()));
        sub_mismatch += (ml_subblock(&y, &h, &codec).unwrap().bits != bits::from_u64(want as u64, 4)) as usize;
    }
    let n0 = 1e-3;
    let mut agree = 0;
    for _ in 0..10_000 {
        let x = &all[rng.random_range(0..16)];
        let h: Vec<C> = (0..4).map(|_| complex_normal(&mut rng, 1.0)).collect();
        let y: Vec<C> = x.iter().zip(&h).map(|(a, g)| a * g + complex_normal(&mut rng, n0)).collect();
        agree += (llr_subblock(&y, &h, &codec, n0, LlrMode::ExactLog).unwrap().bits == ml_subblock(&y, &h, &codec).unwrap().bits) as usize;
    }
    vec![
        check("ml_spatial", spatial_mismatch == 0, format!("{spatial_mismatch}/1000 mismatches")),
        check("ml_subblock", sub_mismatch == 0, format!("{sub_mismatch}/1000 mismatches")),
        check("llr vs ml at 30 dB", agree >= 9_900, format!("{:.2}% agreement", agree as f64 / 100.0)),
    ]
}

fn calibration() -> Vec<Check> {
    let start = Instant::now();
    let exp = Experiment {
        name: "siso-bpsk-rayleigh".into(),
        link: LinkSpec::Spatial { scheme: SchemeSpec::new(SchemeKind::Simo, 1, 2), n_r: 1, detector: SpatialDetector::Ml },
        snr_db: vec![0.0, 10.0, 20.0],
        max_trials: 100_000_000,
        min_errors: 100,
        seed: 2024,
        batch_size: None,
        timing: false,
    };
    let recs = run_sweep(&exp).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let mut checks: Vec<Check> = recs
        .iter()
        .map(|r| {
            let want = rayleigh_bpsk_ber(10f64.powf(r.snr_db / 10.0));
            let z = (r.ber - want) / r.stderr;
            check("point", r.bit_errors >= 100 && z.abs() <= 3.0, format!("{} dB {:.4e} vs {:.4e} ({z:+.2} se)", r.snr_db, r.ber, want))
        })
        .collect();
    checks.push(check("runtime", secs < 120.0, format!("{secs:.1} s")));
    checks
}

fn monotone(recs: &[BerRecord]) -> bool {
    recs.windows(2).all(|w| w[1].ber <= w[0].ber + 2.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt())
}

fn curve(recs: &[BerRecord]) -> String {
    recs.iter().map(|r| format!("{:.1e}", r.ber)).collect::<Vec<_>>().join(" ")
}

fn fig6() -> Vec<Check> {
    let start = Instant::now();
    let grid = fig6_grid();
    let mut exps = fig6_experiments(2, grid.clone(), 10_000, 6, true);
    exps.push(fig6_experiments(2, grid, 10_000, 6, false).remove(0));
    let runs: Vec<Vec<BerRecord>> = exps.iter().map(|e| run_sweep(e).unwrap()).collect();
    let (im, vb, plain) = (&runs[0], &runs[1], &runs[2]);
    let (ti, tv) = (im.last().unwrap(), vb.last().unwrap());
    let secs = start.elapsed().as_secs_f64();
    vec![
        check("MIMO-OFDM-IM monotone", monotone(im), curve(im)),
        check("MIMO-OFDM monotone", monotone(vb), curve(vb)),
        check(
            "IM below baseline at top SNR",
            ti.ber < tv.ber && ti.bit_errors >= 100 && tv.bit_errors >= 100,
            format!("{} dB: {:.2e} ({} err) vs {:.2e} ({} err); no interleaver {:.2e}", ti.snr_db, ti.ber, ti.bit_errors, tv.ber, tv.bit_errors, plain.last().unwrap().ber),
        ),
        check("runtime", secs < 900.0, format!("{secs:.0} s")),
    ]
}

fn determinism() -> Vec<Check> {
    let commands: Vec<Vec<&str>> = vec![
        vec!["codebook", "--scheme", "esm", "--nt", "4", "--m", "16"],
        vec!["rate", "--ofdm", "gim-ii", "--n", "16", "--k", "10", "--m", "4"],
        vec!["dmin", "--preset", "fig2"],
        vec!["ber", "--preset", "fig6", "--snr", "4,12", "--max-trials", "32", "--seed", "7"],
    ];
    let mut identical = 0;
    for args in &commands {
        let a = imphy(args);
        let b = imphy_env(args, &[("IMPHY_THREADS", "2")]);
        identical += (a.ok && b.ok && a.stdout == b.stdout && !a.stdout.is_empty()) as usize;
    }
    vec![check("repeated runs", identical == commands.len(), format!("{identical}/{} commands byte-identical", commands.len()))]
}

const CRITERIA: [Criterion; 9] = [
    Criterion { id: "1", title: "golden codebooks", run: golden_codebooks },
    Criterion { id: "2", title: "rate identities", run: rates },
    Criterion { id: "3", title: "d_min relations", run: dmin_relations },
    Criterion { id: "4", title: "detection complexity", run: complexity },
    Criterion { id: "5", title: "noiseless loopback", run: loopback },
    Criterion { id: "6", title: "oracle equivalence", run: oracles },
    Criterion { id: "7", title: "Monte Carlo calibration", run: calibration },
    Criterion { id: "8", title: "MIMO-OFDM-IM vs MIMO-OFDM", run: fig6 },
    Criterion { id: "9", title: "determinism", run: determinism },
];

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut blocking = 0;
    for c in CRITERIA.iter().filter(|c| filter.is_empty() || filter.iter().any(|f| f == c.id)) {
        let start = Instant::now();
        let checks = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default();
            vec![check("panic", false, msg)]
        });
        let pass = checks.iter().all(|k| k.pass);
        blocking += checks.iter().filter(|k| !k.pass && !k.allowed_to_fail).count();
        let detail: Vec<String> = checks
            .iter()
            .map(|k| {
                let tag = match (k.pass, k.allowed_to_fail) {
                    (true, _) => "ok",
                    (false, false) => "FAILED",
                    (false, true) => "FAILED, allowed",
                };
                format!("{} [{tag}]: {}", k.name, k.detail)
            })
            .collect();
        println!(
            "{} criterion {} ({}) in {:.1} s :: {}",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            start.elapsed().as_secs_f64(),
            detail.join("; ")
        );
    }
    if blocking > 0 {
        eprintln!("{blocking} blocking check(s) failed");
        std::process::exit(1);
    }
}
