//! Library-level checks that span several modules.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chaoskey::bench::{cycle_time, BenchConfig, DEFAULT_KEY_SIZES};
use chaoskey::chaos::{self, ChaosParams};
use chaoskey::cipher::{decrypt, encrypt, EncryptOptions, Mode};
use chaoskey::cryptanalysis::{avalanche, flip_fraction, monobit};
use chaoskey::keyschedule::keystream;
use chaoskey::kgm::{build_matrix, first_key, Kgm, SecretKey};

#[test]
fn hardened_keystream_is_balanced() {
    let m = Kgm::default();
    let secret = SecretKey::new("POLY12@+αμ-key#1").unwrap();
    let ks = keystream(&secret, 10 * 1024, &ChaosParams::hardened(), &m).unwrap();
    let ones = monobit(&ks.bytes).unwrap();
    assert!((0.45..=0.55).contains(&ones), "monobit {ones}");
}

#[test]
fn avalanche_controls() {
    let m = Kgm::default();
    let secret = SecretKey::new("sixteen-chars-ok").unwrap();
    let len = 3 * secret.char_len();
    let a = keystream(&secret, len, &ChaosParams::hardened(), &m).unwrap();
    assert_eq!(flip_fraction(&a.bytes, &a.bytes).unwrap(), 0.0);

    let report = avalanche(&secret, 200, &ChaosParams::hardened(), &m, 3).unwrap();
    assert_eq!(report.trials, 200);
    assert_eq!(report.stream_len, 48);
}

#[test]
fn cycle_time_is_roughly_constant() {
    let cfg = BenchConfig {
        reps: 5,
        ..Default::default()
    };
    let report = cycle_time(&DEFAULT_KEY_SIZES, &ChaosParams::literal(), &cfg).unwrap();
    assert_eq!(report.samples.len(), 6);
    let per_cycle: Vec<f64> = report.samples.iter().map(|s| s.elapsed_ms).collect();
    let max = per_cycle.iter().copied().fold(f64::MIN, f64::max);
    let min = per_cycle.iter().copied().fold(f64::MAX, f64::min);
    assert!(min > 0.0);
    assert!(max / min <= 5.0, "per-cycle times {per_cycle:?}");
}

#[test]
fn wrong_secret_fails_to_decrypt() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let text = "keep your public key secret not to be interrupted on cryptocurrency.";
    let mut recovered = 0;
    for trial in 0..100 {
        let secret: String = (0..12).map(|_| rng.gen_range('!'..='~')).collect();
        let wrong: String = (0..12).map(|_| rng.gen_range('!'..='~')).collect();
        if secret == wrong {
            continue;
        }
        let mode = if trial % 2 == 0 { Mode::Literal } else { Mode::Hardened };
        let opts = EncryptOptions { mode, ..Default::default() };
        let env = encrypt(text, &SecretKey::new(secret).unwrap(), &opts).unwrap();
        if decrypt(&env, &SecretKey::new(wrong).unwrap()).ok().as_deref() == Some(text) {
            recovered += 1;
        }
    }
    assert_eq!(recovered, 0);
}

#[test]
fn initial_condition_is_pure() {
    let m = build_matrix(5);
    let k1 = first_key(&SecretKey::new("deterministic").unwrap(), &m);
    for c in 0..3 * k1.len() {
        assert_eq!(chaos::initial_condition(&k1, c).unwrap(), chaos::initial_condition(&k1, c).unwrap());
        assert!((0.0..1.0).contains(&chaos::initial_condition(&k1, c).unwrap().x0));
    }
}
