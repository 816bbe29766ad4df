use bpmf_core::factor_graph::FactorKernel;
use bpmf_ofdm::code::{ConvCode, TrellisKernel};
use bpmf_ofdm::transmit::transmit;
use bpmf_ofdm::{Constellation, Modulation, OfdmError, OfdmScenario};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario(name: &str) -> OfdmScenario {
    let path = format!("{}/../../scenarios/{name}.json", env!("CARGO_MANIFEST_DIR"));
    OfdmScenario::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn code(gens: &[&str]) -> ConvCode {
    ConvCode::from_octal(&gens.iter().map(|g| g.to_string()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn constellations_have_unit_energy_and_gray_neighbours() {
    for m in [Modulation::Qpsk, Modulation::Qam16] {
        let c = Constellation::new(m);
        let energy: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.size() as f64;
        assert!((energy - 1.0).abs() < 1e-12);
        let dmin = (0..c.size())
            .flat_map(|a| (0..c.size()).filter(move |&b| b != a).map(move |b| (a, b)))
            .map(|(a, b)| (c.points()[a] - c.points()[b]).norm())
            .fold(f64::INFINITY, f64::min);
        for a in 0..c.size() {
            for b in 0..c.size() {
                if a != b && (c.points()[a] - c.points()[b]).norm() < dmin + 1e-9 {
                    assert_eq!((a ^ b).count_ones(), 1, "{m:?}: {a} and {b} are neighbours");
                }
            }
            let bits: Vec<u8> = (0..c.bits_per_symbol()).map(|j| c.bit(a, j)).collect();
            assert_eq!(c.index_of(&bits), a);
            assert_eq!(c.nearest(c.points()[a]), a);
        }
    }
}

#[test]
fn impulse_response_matches_generator_taps() {
    // Generator taps read most significant first.
    let g0 = [1, 0, 1, 1, 0, 1, 1]; // 133
    let g1 = [1, 1, 1, 1, 0, 0, 1]; // 171
    let c = code(&["133", "171"]);
    assert_eq!(c.memory(), 6);
    let out = c.encode(&[1]);
    let expected: Vec<u8> = (0..7).flat_map(|t| [g0[t], g1[t]]).collect();
    assert_eq!(out, expected);
}

#[test]
fn all_zero_input_gives_all_zero_codeword() {
    let c = code(&["133", "171", "165"]);
    assert!(c.encode(&[0; 40]).iter().all(|&b| b == 0));
    assert_eq!(c.coded_len(40), 138);
}

#[test]
fn invalid_generators_are_rejected() {
    assert!(matches!(ConvCode::from_octal(&["19".into()]), Err(OfdmError::Config(_))));
    assert!(matches!(ConvCode::from_octal(&[]), Err(OfdmError::Config(_))));
    assert!(matches!(ConvCode::from_octal(&["1".into()]), Err(OfdmError::Config(_))));
}

proptest! {
    #[test]
    fn encoding_is_linear(a in prop::collection::vec(0u8..2, 1..30), seed in any::<u64>()) {
        let c = code(&["133", "171"]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<u8> = a.iter().map(|_| rng.gen_range(0..2)).collect();
        let x: Vec<u8> = a.iter().zip(&b).map(|(p, q)| p ^ q).collect();
        let sum: Vec<u8> = c.encode(&a).iter().zip(c.encode(&b)).map(|(p, q)| p ^ q).collect();
        prop_assert_eq!(c.encode(&x), sum);
    }
}

/// Sum-product messages of the code factor by enumerating all information
/// words.
fn brute_force(c: &ConvCode, k: usize, incoming: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let arity = incoming.len();
    let mut out = vec![vec![f64::NEG_INFINITY; 2]; arity];
    let mut total = f64::NEG_INFINITY;
    let lse = |a: f64, b: f64| {
        let m = a.max(b);
        if m == f64::NEG_INFINITY {
            m
        } else {
            m + ((a - m).exp() + (b - m).exp()).ln()
        }
    };
    for word in 0..(1usize << k) {
        let u: Vec<u8> = (0..k).map(|i| ((word >> i) & 1) as u8).collect();
        let config: Vec<usize> = u.iter().chain(&c.encode(&u)).map(|&b| b as usize).collect();
        let terms: Vec<f64> = config.iter().zip(incoming).map(|(&x, m)| m[x]).collect();
        let all: f64 = terms.iter().sum();
        total = lse(total, all);
        for j in 0..arity {
            let rest: f64 = terms.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, t)| t).sum();
            out[j][config[j]] = lse(out[j][config[j]], rest);
        }
    }
    (out, total)
}

#[test]
fn trellis_kernel_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (gens, k) in [(vec!["7", "5"], 5), (vec!["133", "171"], 4), (vec!["13", "15", "17"], 4)] {
        let c = code(&gens);
        let kernel = TrellisKernel::new(c.clone(), k);
        for rep in 0..20 {
            let incoming: Vec<Vec<f64>> = (0..kernel.arity())
                .map(|_| {
                    let mut m = vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                    // Occasional hard evidence.
                    if rep % 4 == 3 && rng.gen_bool(0.2) {
                        m[rng.gen_range(0..2)] = f64::NEG_INFINITY;
                    }
                    m
                })
                .collect();
            let refs: Vec<&[f64]> = incoming.iter().map(|m| m.as_slice()).collect();
            let (want, z) = brute_force(&c, k, &incoming);
            let got = kernel.sum_product(&refs).unwrap();
            if z == f64::NEG_INFINITY {
                assert_eq!(got.log_partition, f64::NEG_INFINITY);
                continue;
            }
            assert!((got.log_partition - z).abs() < 1e-10, "{} vs {z}", got.log_partition);
            for (g, w) in got.outgoing.iter().zip(&want) {
                for (a, b) in g.iter().zip(w) {
                    if *b == f64::NEG_INFINITY {
                        assert!(*a == f64::NEG_INFINITY || *a < -700.0);
                    } else {
                        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
                    }
                }
            }
        }
    }
}

#[test]
fn trellis_kernel_log_value_is_the_code_indicator() {
    let c = code(&["7", "5"]);
    let kernel = TrellisKernel::new(c.clone(), 3);
    let u = [1u8, 0, 1];
    let mut config: Vec<usize> = u.iter().chain(&c.encode(&u)).map(|&b| b as usize).collect();
    assert_eq!(kernel.log_value(&config), 0.0);
    config[4] ^= 1;
    assert_eq!(kernel.log_value(&config), f64::NEG_INFINITY);
}

#[test]
fn table_one_dimensions() {
    for (name, m, k) in [("table1_m25", 25, 360), ("table1_m13", 13, 376)] {
        let sc = scenario(name);
        assert_eq!(sc.carriers(), 300);
        assert_eq!(sc.pilot_idx.len(), m);
        assert_eq!(sc.constellation.bits_per_symbol(), 4);
        assert_eq!(sc.code.outputs(), 3);
        assert_eq!(sc.k, k);
        assert_eq!(sc.pad, 2);
        assert!((sc.rate() - 1.0 / 3.0).abs() < 0.02);
    }
}

#[test]
fn desk_dimensions() {
    let sc = scenario("desk");
    assert_eq!((sc.carriers(), sc.pilot_idx.len(), sc.data_idx.len()), (64, 12, 52));
    assert_eq!(sc.k, 46);
    assert_eq!(sc.pad, 0);
    let mut all: Vec<usize> = sc.pilot_idx.iter().chain(&sc.data_idx).copied().collect();
    all.sort();
    assert_eq!(all, (0..64).collect::<Vec<_>>());
    let mut p = sc.perm.clone();
    p.sort();
    assert_eq!(p, (0..104).collect::<Vec<_>>());
}

#[test]
fn all_zero_frame_maps_to_one_symbol() {
    let sc = scenario("table1_m25");
    let f = transmit(&sc, &vec![0; sc.k]).unwrap();
    assert!(f.symbols.iter().all(|&s| s == 0));
    for (&p, &s) in sc.pilot_idx.iter().zip(&sc.pilot_symbols) {
        assert_eq!(f.x[p], s);
    }
}

#[test]
fn interleaver_round_trip_and_length_check() {
    let sc = scenario("desk");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u: Vec<u8> = (0..sc.k).map(|_| rng.gen_range(0..2)).collect();
    let f = transmit(&sc, &u).unwrap();
    assert_eq!(sc.deinterleave(&f.interleaved), f.coded);
    assert_eq!(&f.coded[..sc.coded_len], sc.code.encode(&u).as_slice());
    assert!(matches!(
        transmit(&sc, &u[1..]),
        Err(OfdmError::LengthMismatch { expected: 46, got: 45 })
    ));
}

#[test]
fn scenario_validation() {
    let text = std::fs::read_to_string(format!("{}/../../scenarios/desk.json", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let mut cfg = bpmf_ofdm::ScenarioConfig::from_json(&text).unwrap();
    cfg.pilots = 64;
    assert!(matches!(OfdmScenario::new(cfg.clone()), Err(OfdmError::Config(_))));
    cfg.pilots = 60;
    assert!(matches!(OfdmScenario::new(cfg), Err(OfdmError::Config(_))));
    assert!(matches!(
        bpmf_ofdm::ScenarioConfig::from_json("{\"name\": 1}"),
        Err(OfdmError::Parse(_))
    ));
}
