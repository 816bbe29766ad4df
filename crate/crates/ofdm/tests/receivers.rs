use bpmf_core::gaussian_mf::CMatrix;
use bpmf_core::message_passing::UpdateConfig;
use bpmf_core::numeric::softmax;
use bpmf_core::scheduler::{init_state, run_loopy, LoopySchedule, RunOptions, StopRule};
use bpmf_core::Complex64;
use bpmf_ofdm::receiver::{
    build_graph, marginalized_symbol_logs, mixture_channel_message, pilot_channel_estimate, run_bp_gauss_baseline,
    run_bpmf_receiver, run_perfect_csi, ReceiverKind, TrialRecord,
};
use bpmf_ofdm::sweep::{run_sweep, run_trial, to_csv, SweepConfig, CSV_HEADER};
use bpmf_ofdm::transmit::{apply_channel, transmit, ChannelDraw};
use bpmf_ofdm::{OfdmScenario, ScenarioConfig};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn desk() -> OfdmScenario {
    let path = format!("{}/../../scenarios/desk.json", env!("CARGO_MANIFEST_DIR"));
    OfdmScenario::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn small(carriers: usize, pilots: usize) -> OfdmScenario {
    let mut cfg = desk().config;
    cfg.carriers = carriers;
    cfg.pilots = pilots;
    cfg.generators = vec!["7".into(), "5".into()];
    cfg.name = "small".into();
    OfdmScenario::new(cfg).unwrap()
}

fn random_frame(sc: &OfdmScenario, seed: u64, gamma: f64) -> (Vec<u8>, Vec<Complex64>, Vec<Complex64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<u8> = (0..sc.k).map(|_| rng.gen_range(0..2)).collect();
    let f = transmit(sc, &u).unwrap();
    let (y, h) = apply_channel(sc, &f.x, gamma, &mut rng);
    (u, y, h)
}

/// Linear MMSE estimate from the pilots written out with the pilot selection
/// matrix `A = diag(x_P) S_P`:
/// `mu = R A^H (A R A^H + I/gamma)^{-1} y_P`,
/// `Sigma = R - R A^H (A R A^H + I/gamma)^{-1} A R`.
fn lmmse(sc: &OfdmScenario, y: &[Complex64], gamma: f64) -> (DVector<Complex64>, CMatrix) {
    let n = sc.carriers();
    let m = sc.pilot_idx.len();
    let r = sc.config.channel.covariance(n);
    let mut a = CMatrix::zeros(m, n);
    for (j, (&p, &s)) in sc.pilot_idx.iter().zip(&sc.pilot_symbols).enumerate() {
        a[(j, p)] = s;
    }
    let yp = DVector::from_iterator(m, sc.pilot_idx.iter().map(|&p| y[p]));
    let s = &a * &r * a.adjoint() + CMatrix::identity(m, m) * Complex64::new(1.0 / gamma, 0.0);
    let k = &r * a.adjoint() * s.try_inverse().unwrap();
    let mu = &k * yp;
    let sigma = &r - &k * &a * &r;
    (mu, sigma)
}

#[test]
fn pilot_only_estimate_is_lmmse() {
    let sc = small(16, 4);
    let gamma = sc.gamma(6.0);
    let (_, y, _) = random_frame(&sc, 11, gamma);
    let (mu, sigma) = lmmse(&sc, &y, gamma);
    let est = pilot_channel_estimate(&sc, &y, gamma).unwrap();
    assert!((est.mean() - &mu).camax() < 1e-10);
    assert!((est.covariance() - &sigma).camax() < 1e-10);

    // The generic engine starts from the same belief.
    let rg = build_graph(&sc, &y, gamma).unwrap();
    let state = init_state(&rg.graph, &rg.partition, &UpdateConfig::default()).unwrap();
    let b = state.vars[rg.h.0].gaussian().unwrap();
    assert!((b.mean() - &mu).camax() < 1e-10);
}

#[test]
fn channel_draws_are_reproducible_and_match_the_prior() {
    let sc = small(8, 2);
    let x = transmit(&sc, &vec![0; sc.k]).unwrap().x;
    let a = apply_channel(&sc, &x, 10.0, &mut ChaCha8Rng::seed_from_u64(5));
    let b = apply_channel(&sc, &x, 10.0, &mut ChaCha8Rng::seed_from_u64(5));
    assert_eq!(a, b);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = sc.carriers();
    let draws = 10_000;
    let mut acc = CMatrix::zeros(n, n);
    for _ in 0..draws {
        let h = DVector::from_vec(sc.sampler.sample(&mut rng));
        acc += &h * h.adjoint();
    }
    acc /= Complex64::new(draws as f64, 0.0);
    let r = sc.config.channel.covariance(n);
    assert!((acc - r).camax() < 0.05);
}

#[test]
fn noise_free_unit_channel_passes_symbols_through() {
    let sc = small(8, 2);
    let x = transmit(&sc, &vec![1; sc.k]).unwrap().x;
    let mut draw = ChannelDraw::sample(&sc, &mut ChaCha8Rng::seed_from_u64(1));
    draw.h = vec![Complex64::new(1.0, 0.0); sc.carriers()];
    assert_eq!(draw.observe(&x, f64::INFINITY), x);
}

#[test]
fn noiseless_frames_decode_without_errors() {
    let sc = desk();
    let gamma = 1e8;
    for seed in 0..3 {
        let (u, y, h) = random_frame(&sc, seed, gamma);
        for d in [
            run_bpmf_receiver(&sc, &y, gamma).unwrap(),
            run_bp_gauss_baseline(&sc, &y, gamma).unwrap(),
            run_perfect_csi(&sc, &y, &h, gamma).unwrap(),
        ] {
            assert_eq!(TrialRecord::new(&u, d).bit_errors, 0);
        }
    }
}

#[test]
fn symbol_messages_follow_the_extrinsic_and_app_rules() {
    let sc = desk();
    let gamma = sc.gamma(4.0);
    let (_, y, _) = random_frame(&sc, 21, gamma);
    let rg = build_graph(&sc, &y, gamma).unwrap();
    let stop = StopRule {
        max_outer: 10,
        ..StopRule::default()
    };
    let opts = RunOptions {
        diagnostics: false,
        ..RunOptions::default()
    };
    let res = run_loopy(
        &rg.graph,
        &rg.partition,
        &UpdateConfig::default(),
        &stop,
        &LoopySchedule::default(),
        &opts,
    )
    .unwrap();
    let n = 7;
    let x = rg.symbols[n];
    let msgs = &res.state.messages;
    let b = res.state.probs(x).unwrap();
    // Towards the observation: the full product (APP belief).
    let to_obs = softmax(&msgs.n[rg.graph.edge(rg.data_obs[n], 1)]).unwrap();
    // Towards the modulation constraint: everything except its own reply,
    // which here is the observation message alone.
    let to_mod = softmax(&msgs.n[rg.graph.edge(rg.modulation[n], 0)]).unwrap();
    let from_obs = softmax(msgs.m[rg.graph.edge(rg.data_obs[n], 1)].logs().unwrap()).unwrap();
    for k in 0..b.len() {
        assert!((to_obs[k] - b[k]).abs() < 1e-12);
        assert!((to_mod[k] - from_obs[k]).abs() < 1e-12);
    }
    // Somewhere in the frame the decoder feedback moves the APP away from the
    // channel evidence.
    let moved = (0..rg.symbols.len()).any(|n| {
        let b = res.state.probs(rg.symbols[n]).unwrap();
        let e = softmax(msgs.m[rg.graph.edge(rg.data_obs[n], 1)].logs().unwrap()).unwrap();
        (0..b.len()).any(|k| (b[k] - e[k]).abs() > 1e-3)
    });
    assert!(moved);
}

#[test]
fn data_carriers_only_add_channel_precision() {
    let sc = desk();
    let gamma = sc.gamma(6.0);
    let (_, y, _) = random_frame(&sc, 4, gamma);
    let rg = build_graph(&sc, &y, gamma).unwrap();
    let init = pilot_channel_estimate(&sc, &y, gamma).unwrap();
    let res = run_loopy(
        &rg.graph,
        &rg.partition,
        &UpdateConfig::default(),
        &StopRule::default(),
        &LoopySchedule::default(),
        &RunOptions {
            diagnostics: false,
            ..RunOptions::default()
        },
    )
    .unwrap();
    assert!(res.converged());
    let fin = res.state.vars[rg.h.0].gaussian().unwrap();
    let diff = fin.precision() - init.precision();
    for r in 0..sc.carriers() {
        for c in 0..sc.carriers() {
            if r == c {
                assert!(diff[(r, c)].re >= -1e-9 * init.precision()[(r, r)].re);
            } else {
                assert!(diff[(r, c)].norm() < 1e-6 * init.precision().camax());
            }
        }
    }
    for &p in &sc.pilot_idx {
        assert!(diff[(p, p)].norm() < 1e-6);
    }
}

#[test]
fn mixture_message_reduces_to_the_point_mass_case() {
    let sc = small(16, 4);
    let pts = sc.constellation.points();
    let y = Complex64::new(0.3, -1.1);
    let gamma = 4.0;
    for s in 0..pts.len() {
        let mut w = vec![0.0; pts.len()];
        w[s] = 1.0;
        let (lam, eta) = mixture_channel_message(y, gamma, &w, pts);
        assert!((lam - gamma * pts[s].norm_sqr()).abs() < 1e-9);
        assert!((eta - y * pts[s].conj() * gamma).norm() < 1e-9);
    }
    let (lam, eta) = mixture_channel_message(Complex64::new(0.0, 0.0), gamma, &[0.25; 4], pts);
    assert!(lam > 0.0);
    assert!((eta / lam).norm() < 1e-15);
}

#[test]
fn marginalized_evidence_reduces_to_known_channel() {
    let sc = small(16, 4);
    let pts = sc.constellation.points();
    let (y, h, gamma) = (Complex64::new(0.5, 0.2), Complex64::new(0.9, -0.4), 3.0);
    let a = marginalized_symbol_logs(y, gamma, h, 0.0, pts);
    for (s, v) in pts.iter().zip(&a) {
        let want = (gamma / std::f64::consts::PI).ln() - gamma * (y - h * s).norm_sqr();
        assert!((v - want).abs() < 1e-12);
    }
}

#[test]
fn sweep_output_is_independent_of_thread_count() {
    let sc = desk();
    let mut cfg = SweepConfig::from_scenario(&sc);
    cfg.trials = 4;
    cfg.ebn0_db = vec![2.0, 8.0];
    let a = to_csv(&run_sweep(&sc, &cfg).unwrap());
    cfg.jobs = 3;
    let b = to_csv(&run_sweep(&sc, &cfg).unwrap());
    assert_eq!(a, b);
    assert!(a.starts_with(CSV_HEADER));
    assert_eq!(a.lines().count(), 1 + 2 * 3);
}

#[test]
fn common_random_numbers_across_snr() {
    let sc = desk();
    let cfg = SweepConfig {
        receivers: vec![ReceiverKind::PerfectCsi],
        ebn0_db: vec![0.0, 30.0],
        trials: 1,
        seed: 1,
        jobs: 1,
    };
    let rec = run_trial(&sc, &cfg, 0).unwrap();
    assert_eq!(rec[0][0].info, rec[1][0].info);
    assert_eq!(rec[1][0].bit_errors, 0);
    assert_eq!(run_trial(&sc, &cfg, 0).unwrap(), rec);
}

#[test]
fn table_one_scenario_runs_end_to_end() {
    for name in ["table1_m13", "table1_m25"] {
        let path = format!("{}/../../scenarios/{name}.json", env!("CARGO_MANIFEST_DIR"));
        let sc = OfdmScenario::new(ScenarioConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()).unwrap();
        let cfg = SweepConfig {
            ebn0_db: vec![14.0],
            trials: 1,
            ..SweepConfig::from_scenario(&sc)
        };
        let rec = run_trial(&sc, &cfg, 0).unwrap();
        for r in &rec[0] {
            assert!(r.bit_errors <= sc.k);
        }
    }
}
