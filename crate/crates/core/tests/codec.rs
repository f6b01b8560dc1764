mod common;

use polar_cpbp::code::{build_crc_parity_matrix, polar_transform, Crc, PolarCodeSpec, CRC16_NR};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn random_bits(rng: &mut ChaCha20Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| u8::from(rng.random::<bool>())).collect()
}

#[test]
fn transform_matches_generator_matrix() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for len in [2, 4, 8, 16, 128] {
        for _ in 0..50 {
            let u = random_bits(&mut rng, len);
            assert_eq!(polar_transform(&u).unwrap(), common::encode_by_matrix(&u));
        }
    }
}

#[test]
fn transform_is_an_involution() {
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    for len in [8, 128] {
        for _ in 0..10_000 {
            let u = random_bits(&mut rng, len);
            assert_eq!(polar_transform(&polar_transform(&u).unwrap()).unwrap(), u);
        }
    }
}

proptest! {
    #[test]
    fn transform_is_linear(a in prop::collection::vec(0u8..2, 64), b in prop::collection::vec(0u8..2, 64)) {
        let sum: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
        let xa = polar_transform(&a).unwrap();
        let xb = polar_transform(&b).unwrap();
        let want: Vec<u8> = xa.iter().zip(&xb).map(|(x, y)| x ^ y).collect();
        prop_assert_eq!(polar_transform(&sum).unwrap(), want);
    }
}

#[test]
fn crc_matches_long_division() {
    let crc = Crc::new(16, CRC16_NR).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(13);
    for len in [1, 8, 80, 200] {
        let msg = random_bits(&mut rng, len);
        assert_eq!(crc.remainder_bits(&msg), common::crc_by_division(&msg, 16, CRC16_NR));
    }
    // x^16 + x^12 + x^5 + 1
    assert_eq!(CRC16_NR, 0x1021);
}

#[test]
fn every_single_bit_flip_is_detected() {
    let spec = PolarCodeSpec::nr_128_80();
    let mut rng = ChaCha20Rng::seed_from_u64(14);
    for _ in 0..20 {
        let word = spec.attach_crc(&random_bits(&mut rng, 80)).unwrap();
        assert_eq!(word.len(), 96);
        assert!(spec.check_crc(&word).unwrap());
        for pos in 0..96 {
            let mut bad = word.clone();
            bad[pos] ^= 1;
            assert!(!spec.check_crc(&bad).unwrap(), "flip at {pos} not detected");
        }
    }
}

#[test]
fn parity_matrix_accepts_exactly_crc_words() {
    let spec = PolarCodeSpec::nr_128_80();
    let g = build_crc_parity_matrix(80, 16, CRC16_NR).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(15);
    for _ in 0..50 {
        let word = spec.attach_crc(&random_bits(&mut rng, 80)).unwrap();
        assert!(g.is_codeword(&word));
        let mut bad = word.clone();
        bad[rng.random_range(0..96)] ^= 1;
        assert!(!g.is_codeword(&bad));
    }
}

#[test]
fn encoder_places_word_on_the_information_set() {
    let spec = PolarCodeSpec::nr_128_80();
    let mut rng = ChaCha20Rng::seed_from_u64(16);
    let msg = random_bits(&mut rng, 80);
    let x = spec.encode(&msg).unwrap();
    let u = polar_transform(&x).unwrap();
    for &t in spec.frozen_set() {
        assert_eq!(u[t], 0);
    }
    let word = spec.extract_word(&u).unwrap();
    assert_eq!(&word[..80], &msg[..]);
    assert!(spec.check_crc(&word).unwrap());
}

#[test]
fn bad_parameters_are_rejected() {
    assert!(PolarCodeSpec::nr(100, 10, 0, 0).is_err());
    assert!(PolarCodeSpec::nr(16, 10, 16, CRC16_NR).is_err());
    assert!(PolarCodeSpec::new(8, 2, 0, 0, vec![0, 1, 2, 3, 4, 5, 6, 6]).is_err());
    let spec = PolarCodeSpec::nr_128_80();
    assert!(spec.encode(&[0; 79]).is_err());
    assert!(spec.encode(&[2; 80]).is_err());
}
