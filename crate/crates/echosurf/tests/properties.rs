//! Property tests for the structural invariants.

use echosurf::frames::{
    assemble_frame, build_frame, demodulate, dump_frame, load_frame, modulate, split_frame,
    FrameConfig, Modulation,
};
use echosurf::surface::{quantize_phase, saturate, PhaseCodebook};
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn wrap_abs(d: f64) -> f64 {
    let mut d = d % TAU;
    if d > PI {
        d -= TAU;
    } else if d < -PI {
        d += TAU;
    }
    d.abs()
}

proptest! {
    #[test]
    fn quantization_error_is_bounded_and_idempotent(
        theta in -50.0f64..50.0,
        bits in 1u32..6,
    ) {
        let cb = PhaseCodebook::new(bits).unwrap();
        let spacing = TAU / cb.len() as f64;
        let (idx, phi) = quantize_phase(theta, &cb);
        prop_assert!(idx < cb.len());
        prop_assert!(wrap_abs(theta - phi) <= spacing / 2.0 + 1e-12);
        // Quantizing a codebook phase returns itself.
        let (idx2, phi2) = quantize_phase(phi, &cb);
        prop_assert_eq!((idx2, phi2), (idx, phi));
    }

    #[test]
    fn saturation_is_passive_and_phase_preserving(
        re in -100.0f64..100.0,
        im in -100.0f64..100.0,
        p_sat in 1e-3f64..1e3,
    ) {
        let z = Complex64::new(re, im);
        let f = saturate(z, p_sat);
        prop_assert!(f.norm() <= z.norm() + 1e-12);
        prop_assert!(f.norm() <= p_sat + 1e-12);
        if z.norm() > 1e-9 {
            prop_assert!(wrap_abs(z.arg() - f.arg()) < 1e-9);
        }
    }

    #[test]
    fn modulation_round_trip(bits in proptest::collection::vec(0u8..2, 0..200)) {
        for scheme in [Modulation::Qpsk, Modulation::Qam16] {
            let take = bits.len() - bits.len() % scheme.bits_per_symbol();
            let bits = &bits[..take];
            let syms = modulate(bits, scheme).unwrap();
            prop_assert_eq!(demodulate(&syms, scheme), bits);
        }
    }

    #[test]
    fn frame_split_assemble_and_dump_load_are_inverses(
        n_symbols in 2usize..60,
        streams in 1usize..4,
        dmrs_every in 1usize..8,
        csrs_every in 0usize..6,
        seed in any::<u64>(),
        qam in any::<bool>(),
    ) {
        let modulation = if qam { Modulation::Qam16 } else { Modulation::Qpsk };
        let cfg = FrameConfig::periodic(n_symbols, streams, dmrs_every, csrs_every, modulation, seed).unwrap();
        let bits: Vec<u8> = (0..cfg.data_bit_len()).map(|i| (i % 2) as u8).collect();
        let frame = build_frame(&cfg, &bits).unwrap();

        let blocks = split_frame(&frame);
        let symbols = assemble_frame(&cfg, &blocks).unwrap();
        prop_assert_eq!(&symbols, &frame.symbols);

        let text = dump_frame(&frame);
        let back = load_frame(&text).unwrap();
        prop_assert_eq!(back, frame);
    }

    #[test]
    fn rayleigh_generator_is_a_pure_function_of_seed(
        rows in 1usize..6,
        cols in 1usize..6,
        power in 0.0f64..4.0,
        seed in any::<u64>(),
    ) {
        let a = echosurf::channel::gen_rayleigh(rows, cols, power, seed).unwrap();
        let b = echosurf::channel::gen_rayleigh(rows, cols, power, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
