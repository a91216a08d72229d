mod common;

use common::*;
use relay_robust::conic::InteriorPoint;
use relay_robust::design::{solve_design, DesignOptions, Method};
use relay_robust::linalg::{conj_vec, hadamard, outer};
use relay_robust::model::*;
use relay_robust::rng::GaussianSource;
use relay_robust::HermitianMatrix;

#[test]
fn channel_sampling_is_seeded_with_unit_variance() {
    let p = params(4, 12.0);
    assert_eq!(
        sample_channel(&p, 7, 0.1, 0.2),
        sample_channel(&p, 7, 0.1, 0.2)
    );
    assert_ne!(
        sample_channel(&p, 7, 0.1, 0.2).f_bar,
        sample_channel(&p, 8, 0.1, 0.2).f_bar
    );
    let one = sample_channel(&params(1, 3.0), 5, 0.0, 0.0);
    assert_eq!((one.f_bar.len(), one.g_bar.len()), (1, 1));

    let n = 25_000;
    let mut acc = 0.0;
    for seed in 0..n {
        acc += sample_channel(&p, seed, 0.0, 0.0)
            .f_bar
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>();
    }
    let mean = acc / (4 * n) as f64;
    assert!((0.98..=1.02).contains(&mean), "{mean}");
}

#[test]
fn realized_channels_examples() {
    let mut src = GaussianSource::new(1, 0);
    let sc = random_scenario(3, &mut src);
    let (f, g) = realized_channels(&sc, &Perturbation::zero(3)).unwrap();
    assert_eq!((f, g), (sc.f_bar.clone(), sc.g_bar.clone()));

    let sc1 = sc.with_errors(0.0, 1.0);
    let mut y = vec![C::new(0.0, 0.0); 3];
    y[0] = C::new(1.0, 0.0);
    let p = Perturbation {
        x: src.complex_normal_vec(3),
        y,
    };
    let (f, g) = realized_channels(&sc1, &p).unwrap();
    assert_eq!(f, sc.f_bar);
    assert_eq!(g[0], sc.g_bar[0] + 1.0);
    assert_eq!(&g[1..], &sc.g_bar[1..]);

    let p = random_pert(3, &mut src);
    assert_eq!(realized_channels(&sc, &p).unwrap(), naive_realize(&sc, &p));
    assert!(realized_channels(&sc, &random_pert(2, &mut src)).is_err());
}

#[test]
fn snr_examples() {
    let mut src = GaussianSource::new(2, 0);
    let p = params(2, 6.0);
    let f = src.complex_normal_vec(2);
    let g = src.complex_normal_vec(2);
    assert_eq!(snr(&[C::new(0.0, 0.0); 2], &f, &g, &p).unwrap(), 0.0);
    for _ in 0..100 {
        let w = src.complex_normal_vec(2);
        let (f, g) = (src.complex_normal_vec(2), src.complex_normal_vec(2));
        let a = snr(&w, &f, &g, &p).unwrap();
        assert!(a >= 0.0);
        assert!(rel_err(a, naive_snr(&w, &f, &g, &p)) < 1e-12);
    }

    let p1 = SystemParams::new(10.0, 2.0, 0.1, 0.25, vec![1e-300]).unwrap();
    let (w, f, g) = (C::new(0.3, -0.2), C::new(1.1, 0.4), C::new(-0.7, 0.9));
    let want = 10.0 * w.norm_sqr() * f.norm_sqr() * g.norm_sqr() / 0.25;
    assert!(rel_err(snr(&[w], &[f], &[g], &p1).unwrap(), want) < 1e-12);
}

#[test]
fn hadamard_identity() {
    let mut src = GaussianSource::new(3, 0);
    for _ in 0..100 {
        let f = src.complex_normal_vec(4);
        let g = src.complex_normal_vec(4);
        let h: Vec<C> = f.iter().zip(&g).map(|(a, b)| a * b.conj()).collect();
        let gc = conj_vec(&g);
        let diff = outer(&h, &h) - hadamard(&outer(&f, &f), &outer(&gc, &gc));
        assert!(diff.iter().all(|z| z.norm() <= 1e-12));
    }
}

#[test]
fn exact_q_matches_entrywise_oracle_and_a0() {
    let mut src = GaussianSource::new(4, 0);
    for l in 1..=4 {
        for _ in 0..50 {
            let p = random_params(l, &mut src);
            let sc = random_scenario(l, &mut src);
            let w = random_hermitian(l, &mut src);
            let pert = random_pert(l, &mut src);
            let (f, g) = naive_realize(&sc, &pert);
            assert!(
                rel_err(
                    exact_q(&w, &pert, &sc, &p).unwrap(),
                    naive_q(&w, &f, &g, &p)
                ) < 1e-12
            );
            let q0 = exact_q(&w, &Perturbation::zero(l), &sc, &p).unwrap();
            assert!((q0 + a0(&w, &sc, &p).unwrap()).abs() <= 1e-12 * q0.abs().max(1.0));
            assert!(
                rel_err(
                    a0(&w, &sc, &p).unwrap(),
                    -naive_q(&w, &sc.f_bar, &sc.g_bar, &p)
                ) < 1e-12
            );
        }
    }
    let p = params(3, 9.0);
    let sc = sample_channel(&p, 1, 0.1, 0.1);
    assert_eq!(
        a0(&HermitianMatrix::zeros(3), &sc, &p).unwrap(),
        -p.sigma_v2
    );
}

#[test]
fn exact_q_scalar_expansion() {
    let mut src = GaussianSource::new(5, 0);
    let p = random_params(1, &mut src);
    let sc = random_scenario(1, &mut src);
    let pert = random_pert(1, &mut src);
    let w11 = 0.7;
    let (f, g) = naive_realize(&sc, &pert);
    let want = p.sigma_v2
        + w11
            * (p.sigma2[0] * g[0].norm_sqr() - p.pt / p.gamma * f[0].norm_sqr() * g[0].norm_sqr());
    let got = exact_q(&HermitianMatrix::from_real_diagonal(&[w11]), &pert, &sc, &p).unwrap();
    assert!(rel_err(got, want) < 1e-12);
}

#[test]
fn rank_one_sign_matches_snr() {
    let mut src = GaussianSource::new(6, 0);
    let mut near = 0;
    for _ in 0..10_000 {
        let p = random_params(3, &mut src);
        let sc = random_scenario(3, &mut src);
        let w = src.complex_normal_vec(3);
        let pert = random_pert(3, &mut src);
        let q = exact_q(&HermitianMatrix::outer(&w), &pert, &sc, &p).unwrap();
        let (f, g) = naive_realize(&sc, &pert);
        let s = naive_snr(&w, &f, &g, &p);
        if (s - p.gamma).abs() <= 1e-9 * p.gamma {
            near += 1;
            continue;
        }
        assert_eq!(q >= 0.0, s <= p.gamma, "q {q} snr {s} gamma {}", p.gamma);
    }
    assert!(near < 10);
}

#[test]
fn exact_q_is_quartic() {
    let mut src = GaussianSource::new(7, 0);
    for _ in 0..50 {
        let p = random_params(4, &mut src);
        let sc = random_scenario(4, &mut src);
        let w = random_hermitian(4, &mut src);
        let pert = random_pert(4, &mut src);
        let c = poly_fit(|t| exact_q(&w, &pert.scaled(t), &sc, &p).unwrap(), 5);
        let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(c[5].abs() <= 1e-8 * scale, "{c:?}");
        assert!(c[4].abs() > 1e-6 * scale);
    }
}

#[test]
fn avg_power_matrix_examples() {
    let mut src = GaussianSource::new(9, 0);
    let p = random_params(3, &mut src);
    let sc = random_scenario(3, &mut src);
    let d0 = avg_power_matrix(&sc.with_errors(0.0, sc.eta), &p);
    for i in 0..3 {
        assert!(rel_err(d0.get(i, i).re, p.pt * sc.f_bar[i].norm_sqr() + p.sigma2[i]) < 1e-14);
    }
    let zero_f =
        relay_robust::ChannelScenario::new(vec![C::new(0.0, 0.0); 3], sc.g_bar.clone(), 0.3, 0.1)
            .unwrap();
    let d = avg_power_matrix(&zero_f, &p);
    for i in 0..3 {
        assert!(rel_err(d.get(i, i).re, p.pt * 0.09 + p.sigma2[i]) < 1e-14);
    }

    // Monte-Carlo E[D], D = P_t Diag(|f|^2) + Sigma.
    let d = avg_power_matrix(&sc, &p);
    let n = 100_000;
    let mut acc = [0.0; 3];
    for _ in 0..n {
        let (f, _) = naive_realize(&sc, &random_pert(3, &mut src));
        for i in 0..3 {
            acc[i] += p.pt * f[i].norm_sqr() + p.sigma2[i];
        }
    }
    for i in 0..3 {
        assert!(rel_err(acc[i] / n as f64, d.get(i, i).re) < 0.02);
        for j in 0..3 {
            if i != j {
                assert_eq!(d.get(i, j), C::new(0.0, 0.0));
            }
        }
    }
}

#[test]
fn outage_estimate_examples() {
    let p = params(4, 12.0);
    let sc = sample_channel(&p, 2, 0.1, 0.1);
    for mode in [EvalMode::Exact, EvalMode::Quadratic] {
        assert_eq!(
            outage_estimate(&HermitianMatrix::zeros(4), &sc, &p, 200, 1, mode).unwrap(),
            1.0
        );
    }
    assert!(outage_estimate(&HermitianMatrix::zeros(4), &sc, &p, 0, 1, EvalMode::Exact).is_err());

    // No errors and a0 > 0: never an outage.
    let nominal = sc.with_errors(0.0, 0.0);
    let h: Vec<C> = nominal
        .f_bar
        .iter()
        .zip(&nominal.g_bar)
        .map(|(f, g)| f * g.conj())
        .collect();
    let mut w = HermitianMatrix::outer(&h);
    while a0(&w, &nominal, &p).unwrap() <= 0.0 {
        w = w.scale(2.0);
    }
    for mode in [EvalMode::Exact, EvalMode::Quadratic] {
        assert_eq!(
            outage_estimate(&w, &nominal, &p, 200, 1, mode).unwrap(),
            0.0
        );
    }
}

#[test]
fn outage_estimate_is_seeded_and_concentrated() {
    let p = params(4, 3.0);
    let mut checked = 0;
    for seed in 0..20u64 {
        let sc = sample_channel(&p, seed, 0.06f64.sqrt(), 0.06f64.sqrt());
        let res = solve_design(
            Method::M2,
            &sc,
            &p,
            &InteriorPoint::default(),
            &DesignOptions::default(),
        )
        .unwrap();
        let Some(w) = res.w() else { continue };
        let n = 10_000;
        let a = outage_estimate_vec(w, &sc, &p, n, 1, EvalMode::Quadratic).unwrap();
        assert_eq!(
            a,
            outage_estimate_vec(w, &sc, &p, n, 1, EvalMode::Quadratic).unwrap()
        );
        let b = outage_estimate_vec(w, &sc, &p, n, 2, EvalMode::Quadratic).unwrap();
        let rho = p.rho;
        assert!(
            (a - b).abs() <= 3.0 * (rho * (1.0 - rho) / n as f64).sqrt(),
            "{a} {b}"
        );
        checked += 1;
        if checked == 3 {
            break;
        }
    }
    assert_eq!(checked, 3);
}
