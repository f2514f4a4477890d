//! Goodness-of-fit of the samplers against closed-form outcome distributions.

use qtomo::oscore::{make_state, DensityMatrix, StateKind, StateSpec, TwiceSpin};
use qtomo::sampler::*;
use qtomo::C64;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use std::f64::consts::PI;

const SHOTS: usize = 100_000;
const P_MIN: f64 = 1e-3;

fn state(kind: StateKind, dim: usize) -> DensityMatrix {
    make_state(&StateSpec::new(kind, dim)).unwrap()
}

fn outcomes(records: &[MeasurementRecord]) -> Vec<f64> {
    records.iter().map(|r| r.outcome).collect()
}

/// Asymptotic Kolmogorov-Smirnov p-value of `samples` against `cdf`.
fn ks_p_value(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        p += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

fn chi2_p_value(counts: &[usize], probs: &[f64]) -> f64 {
    let n: usize = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn homodyne_vacuum_is_gaussian_with_quarter_variance() {
    let rho = state(StateKind::Fock { n: 0 }, 8);
    let records = sample_homodyne(&rho, SHOTS, &SamplerConfig::with_seed(1)).unwrap();
    assert!(records.iter().all(|r| (0.0..PI).contains(&r.settings[0])));
    let q = outcomes(&records);
    let normal = Normal::new(0.0, 0.5).unwrap();
    let p = ks_p_value(q.clone(), |x| normal.cdf(x));
    assert!(p > P_MIN, "KS p = {p}");

    let n = q.len() as f64;
    let sq: Vec<f64> = q.iter().map(|x| x * x).collect();
    let var = sq.iter().sum::<f64>() / n;
    let se = (sq.iter().map(|s| (s - var).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!((var - 0.25).abs() <= 5.0 * se, "variance {var} +- {se}");
}

#[test]
fn homodyne_fock_one_has_a_node_at_the_origin() {
    let rho = state(StateKind::Fock { n: 1 }, 8);
    let q = outcomes(&sample_homodyne(&rho, SHOTS, &SamplerConfig::with_seed(2)).unwrap());
    // p(q) = 4 q^2 sqrt(2/pi) e^{-2 q^2}; with x = 2q the CDF is Phi(x) - x phi(x)
    let std = Normal::new(0.0, 1.0).unwrap();
    let cdf = |q: f64| {
        let x = 2.0 * q;
        std.cdf(x) - x * (-x * x / 2.0).exp() / (2.0 * PI).sqrt()
    };
    let p = ks_p_value(q.clone(), cdf);
    assert!(p > P_MIN, "KS p = {p}");
    let half = 0.01;
    let near = q.iter().filter(|x| x.abs() < half).count() as f64;
    let density = near / q.len() as f64 / (2.0 * half);
    assert!(density < 0.02, "density near 0: {density}");
}

#[test]
fn homodyne_coherent_fixed_phase() {
    let rho = state(StateKind::Coherent { beta: C64::new(0.5, 0.0) }, 12);
    let cfg = SamplerConfig { fixed_phi: Some(0.0), ..SamplerConfig::with_seed(3) };
    let q = outcomes(&sample_homodyne(&rho, SHOTS, &cfg).unwrap());
    let normal = Normal::new(0.5, 0.5).unwrap();
    assert!(ks_p_value(q.clone(), |x| normal.cdf(x)) > P_MIN);
    let n = q.len() as f64;
    let mean = q.iter().sum::<f64>() / n;
    let se = (q.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!((mean - 0.5).abs() <= 5.0 * se);
}

#[test]
fn squeezed_vacuum_quadrature_variance() {
    let rho = state(StateKind::Fock { n: 0 }, 8);
    let r: f64 = 0.2;
    for phi in [0.0, PI / 4.0, PI / 2.0] {
        let cfg = SamplerConfig { fixed_phi: Some(phi), ..SamplerConfig::with_seed(4) };
        let records = sample_squeezed_homodyne(&rho, C64::new(r, 0.0), SHOTS, &cfg).unwrap();
        assert!(records.iter().all(|rec| rec.quorum == QuorumId::SqueezedHomodyne && rec.settings[1] == r));
        // S^dag q_phi S on vacuum: variance (cosh 2r + sinh 2r cos 2phi) / 4
        let var = ((2.0 * r).cosh() + (2.0 * r).sinh() * (2.0 * phi).cos()) / 4.0;
        let normal = Normal::new(0.0, var.sqrt()).unwrap();
        let p = ks_p_value(outcomes(&records), |x| normal.cdf(x));
        assert!(p > P_MIN, "phi {phi}: KS p = {p}");
    }
}

#[test]
fn spin_maximally_mixed_is_uniform() {
    for twice in 1..=3u32 {
        let d = TwiceSpin(twice).dim();
        let rho = DensityMatrix::maximally_mixed(d);
        let records = sample_spin(&rho, SHOTS, &SamplerConfig::with_seed(5)).unwrap();
        let mut counts = vec![0usize; d];
        for r in &records {
            let n = r.settings;
            assert!(((n[0] * n[0] + n[1] * n[1] + n[2] * n[2]) - 1.0).abs() < 1e-12);
            counts[(r.outcome + twice as f64 / 2.0).round() as usize] += 1;
        }
        let p = chi2_p_value(&counts, &vec![1.0 / d as f64; d]);
        assert!(p > P_MIN, "s = {}/2: chi2 p = {p}", twice);
    }
}

#[test]
fn spin_up_state() {
    let up = state(StateKind::SpinPure { twice_s: TwiceSpin(1), n: [0.0, 0.0, 1.0] }, 2);
    let cfg = SamplerConfig { fixed_direction: Some([0.0, 0.0, 1.0]), ..SamplerConfig::with_seed(6) };
    let forced = sample_spin(&up, 1000, &cfg).unwrap();
    assert!(forced.iter().all(|r| r.outcome == 0.5));

    let records = sample_spin(&up, SHOTS, &SamplerConfig::with_seed(7)).unwrap();
    // E[m | n] = n_z / 2, so 3 m n_z averages to 1/2 over the sphere
    let xs: Vec<f64> = records.iter().map(|r| 3.0 * r.outcome * r.settings[2]).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let se = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!((mean - 0.5).abs() <= 5.0 * se, "{mean} +- {se}");

    // P(m = +1/2 | n) = (1 + n_z) / 2 and n_z is uniform on [-1, 1], so
    // n_z given m = +1/2 has CDF ((z + 1) / 2)^2
    let z_up: Vec<f64> = records.iter().filter(|r| r.outcome > 0.0).map(|r| r.settings[2]).collect();
    let p = ks_p_value(z_up, |z| ((z + 1.0) / 2.0).powi(2));
    assert!(p > P_MIN, "KS p = {p}");
}

#[test]
fn pauli_counts_follow_the_bloch_vector() {
    let rho = state(StateKind::SpinPure { twice_s: TwiceSpin(1), n: [0.6, 0.0, 0.8] }, 2);
    let records = sample_pauli(&rho, SHOTS, &SamplerConfig::with_seed(8)).unwrap();
    assert_eq!(records.len(), 3 * SHOTS);
    for (axis, bloch) in [(0usize, 0.6), (1, 0.0), (2, 0.8)] {
        let chunk = &records[axis * SHOTS..(axis + 1) * SHOTS];
        let up = chunk.iter().filter(|r| r.outcome > 0.0).count();
        let p_up = (1.0 + bloch) / 2.0;
        if p_up < 1.0 {
            let p = chi2_p_value(&[up, SHOTS - up], &[p_up, 1.0 - p_up]);
            assert!(p > P_MIN, "axis {axis}: chi2 p = {p}");
        }
    }
}

#[test]
fn parity_forced_at_origin() {
    let cfg = SamplerConfig { fixed_beta: Some(C64::new(0.0, 0.0)), ..SamplerConfig::with_seed(9) };
    let vac = state(StateKind::Fock { n: 0 }, 8);
    assert!(sample_displaced_parity(&vac, 1000, &cfg).unwrap().iter().all(|r| r.outcome == 1.0));
    let one = state(StateKind::Fock { n: 1 }, 8);
    assert!(sample_displaced_parity(&one, 1000, &cfg).unwrap().iter().all(|r| r.outcome == -1.0));

    let coh = state(StateKind::Coherent { beta: C64::new(0.5, 0.0) }, 12);
    let records = sample_displaced_parity(&coh, SHOTS, &cfg).unwrap();
    let plus = records.iter().filter(|r| r.outcome > 0.0).count();
    let p_plus = (1.0 + (-0.5f64).exp()) / 2.0;
    assert!(chi2_p_value(&[plus, SHOTS - plus], &[p_plus, 1.0 - p_plus]) > P_MIN);
}

#[test]
fn parity_outcomes_match_displaced_coherent_parity() {
    let alpha = C64::new(0.5, 0.0);
    let rho = state(StateKind::Coherent { beta: alpha }, 12);
    let records = sample_displaced_parity(&rho, SHOTS, &SamplerConfig::with_seed(10)).unwrap();
    let radius = records[0].settings[2];
    // uniform on the disk: |beta|^2 / R^2 is uniform on [0, 1]
    let u: Vec<f64> = records.iter().map(|r| (r.settings[0].powi(2) + r.settings[1].powi(2)) / (radius * radius)).collect();
    assert!(ks_p_value(u, |x| x.clamp(0.0, 1.0)) > P_MIN);
    // E[s | beta] is the parity of the coherent state alpha + beta
    let (mut num, mut var) = (0.0, 0.0);
    for r in &records {
        let mu = (-2.0 * (alpha + C64::new(r.settings[0], r.settings[1])).norm_sqr()).exp();
        num += r.outcome - mu;
        var += 1.0 - mu * mu;
    }
    let z = num / var.sqrt();
    assert!(z.abs() < 5.0, "z = {z}");
}

#[test]
fn kerr_fock_phase_is_uniform() {
    let rho = state(StateKind::Fock { n: 1 }, 6);
    let records = sample_kerr_phase(&rho, SHOTS, &SamplerConfig::with_seed(11)).unwrap();
    assert!(records.iter().all(|r| (0.0..2.0 * PI).contains(&r.settings[0])));
    let p = ks_p_value(outcomes(&records), |x| (x / (2.0 * PI)).clamp(0.0, 1.0));
    assert!(p > P_MIN, "KS p = {p}");
}

#[test]
fn kerr_two_level_phase_density() {
    let h = 0.5f64.sqrt();
    let rho = DensityMatrix::from_pure(&[C64::new(h, 0.0), C64::new(h, 0.0), C64::new(0.0, 0.0)]).unwrap();
    let cfg = SamplerConfig { fixed_psi: Some(0.0), ..SamplerConfig::with_seed(12) };
    let phi = outcomes(&sample_kerr_phase(&rho, SHOTS, &cfg).unwrap());
    // p(phi) = (1 + cos phi) / 2pi
    let p = ks_p_value(phi.clone(), |x| (x + x.sin()) / (2.0 * PI));
    assert!(p > P_MIN, "KS p = {p}");
    let bins = 20;
    let mut counts = vec![0usize; bins];
    for x in &phi {
        counts[((x / (2.0 * PI) * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let probs: Vec<f64> = (0..bins)
        .map(|b| {
            let (a, z) = (2.0 * PI * b as f64 / bins as f64, 2.0 * PI * (b + 1) as f64 / bins as f64);
            ((z + z.sin()) - (a + a.sin())) / (2.0 * PI)
        })
        .collect();
    assert!(chi2_p_value(&counts, &probs) > P_MIN);
}

#[test]
fn records_round_trip_through_csv() {
    let rho = state(StateKind::Coherent { beta: C64::new(0.3, -0.2) }, 10);
    let records = sample_homodyne(&rho, 5000, &SamplerConfig::with_seed(13)).unwrap();
    let mut bytes = Vec::new();
    write_csv(&mut bytes, &records).unwrap();
    let text = String::from_utf8(bytes.clone()).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    let back = read_csv(bytes.as_slice()).unwrap();
    assert_eq!(back, records);
}

#[test]
fn identical_seeds_give_identical_files() {
    let rho = state(StateKind::Coherent { beta: C64::new(0.5, 0.0) }, 12);
    let write = |seed| {
        let mut out = Vec::new();
        write_csv(&mut out, &sample_displaced_parity(&rho, 3 * SHOT_PARTITION + 17, &SamplerConfig::with_seed(seed)).unwrap())
            .unwrap();
        out
    };
    assert_eq!(write(42), write(42));
    assert_ne!(write(42), write(43));
}
