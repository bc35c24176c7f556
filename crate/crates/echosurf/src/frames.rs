//! Reference-signal and frame structure: DMRS/CSRS/DATA placement,
//! modulation and bit handling.
//!
//! DMRS symbols are pseudo-random QPSK points regenerated from the frame
//! seed (constant modulus keeps the readout solve well conditioned). CSRS
//! positions are silent from the transmitter side — they are the slots the
//! AP uses for loopback sounding. DATA positions carry Gray-mapped QPSK or
//! 16QAM.
//!
//! Gray maps (unit average power):
//!
//! * QPSK, bits `b0 b1`: `((1-2*b0) + j(1-2*b1)) / sqrt(2)`, so `00` maps to
//!   `(1+j)/sqrt(2)`.
//! * 16QAM, bits `b0 b1 b2 b3`: `b0 b1` select the I level, `b2 b3` the Q
//!   level, per-axis Gray order `00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3`,
//!   scaled by `1/sqrt(10)`.
//!
//! Demodulation is minimum-distance hard decision; exact ties resolve to the
//! lexicographically smaller bit pattern.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::seed;

/// Supported constellations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Qpsk => "qpsk",
            Modulation::Qam16 => "16qam",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "qpsk" => Some(Modulation::Qpsk),
            "16qam" => Some(Modulation::Qam16),
            _ => None,
        }
    }

    /// Constellation points in lexicographic bit order.
    pub fn points(self) -> Vec<Complex64> {
        let bps = self.bits_per_symbol();
        (0..1usize << bps)
            .map(|word| {
                let bits: Vec<u8> = (0..bps).map(|i| ((word >> (bps - 1 - i)) & 1) as u8).collect();
                map_symbol(&bits, self)
            })
            .collect()
    }
}

fn pam4_gray(b_hi: u8, b_lo: u8) -> f64 {
    // 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
    match (b_hi, b_lo) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        (1, 0) => 3.0,
        _ => unreachable!("bits are 0/1"),
    }
}

fn map_symbol(bits: &[u8], scheme: Modulation) -> Complex64 {
    match scheme {
        Modulation::Qpsk => {
            let re = 1.0 - 2.0 * bits[0] as f64;
            let im = 1.0 - 2.0 * bits[1] as f64;
            Complex64::new(re, im) / 2f64.sqrt()
        }
        Modulation::Qam16 => {
            let i = pam4_gray(bits[0], bits[1]);
            let q = pam4_gray(bits[2], bits[3]);
            Complex64::new(i, q) / 10f64.sqrt()
        }
    }
}

/// Gray-maps a bit string onto constellation symbols.
pub fn modulate(bits: &[u8], scheme: Modulation) -> Result<Vec<Complex64>> {
    let bps = scheme.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(Error::Framing(format!(
            "bit count {} not divisible by {} bits/symbol",
            bits.len(),
            bps
        )));
    }
    if let Some(&b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::Framing(format!("bit values must be 0/1, got {b}")));
    }
    Ok(bits.chunks(bps).map(|c| map_symbol(c, scheme)).collect())
}

/// Minimum-distance hard decision, ties toward the lexicographically smaller
/// bit pattern.
pub fn demodulate(symbols: &[Complex64], scheme: Modulation) -> Vec<u8> {
    let points = scheme.points();
    let bps = scheme.bits_per_symbol();
    let mut bits = Vec::with_capacity(symbols.len() * bps);
    for &s in symbols {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (w, &p) in points.iter().enumerate() {
            let d = (s - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = w;
            }
        }
        for i in 0..bps {
            bits.push(((best >> (bps - 1 - i)) & 1) as u8);
        }
    }
    bits
}

/// Role of one symbol position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Dmrs,
    Csrs,
    Data,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Dmrs => "dmrs",
            Role::Csrs => "csrs",
            Role::Data => "data",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "dmrs" => Some(Role::Dmrs),
            "csrs" => Some(Role::Csrs),
            "data" => Some(Role::Data),
            _ => None,
        }
    }
}

/// Frame layout and modulation metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameConfig {
    pub n_symbols: usize,
    pub n_streams: usize,
    /// Sorted, disjoint position sets.
    pub dmrs_positions: Vec<usize>,
    pub csrs_positions: Vec<usize>,
    pub modulation: Modulation,
    /// Seed for the pseudo-random DMRS content.
    pub seed: u64,
}

impl FrameConfig {
    /// Periodic layout: DMRS every `dmrs_every` positions starting at 0,
    /// CSRS every `csrs_every` positions starting at `csrs_every - 1`
    /// (0 disables CSRS).
    pub fn periodic(
        n_symbols: usize,
        n_streams: usize,
        dmrs_every: usize,
        csrs_every: usize,
        modulation: Modulation,
        seed: u64,
    ) -> Result<Self> {
        if dmrs_every == 0 {
            return Err(Error::invalid("dmrs_every must be >= 1"));
        }
        let dmrs: Vec<usize> = (0..n_symbols).step_by(dmrs_every).collect();
        let csrs: Vec<usize> = if csrs_every == 0 {
            Vec::new()
        } else {
            (csrs_every - 1..n_symbols)
                .step_by(csrs_every)
                .filter(|p| p % dmrs_every != 0)
                .collect()
        };
        let cfg = Self {
            n_symbols,
            n_streams,
            dmrs_positions: dmrs,
            csrs_positions: csrs,
            modulation,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_symbols == 0 || self.n_streams == 0 {
            return Err(Error::invalid("frame needs at least one symbol and one stream"));
        }
        if self.dmrs_positions.is_empty() {
            return Err(Error::invalid("frame needs at least one DMRS position"));
        }
        for set in [&self.dmrs_positions, &self.csrs_positions] {
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid("position sets must be strictly ascending"));
            }
            if set.iter().any(|&p| p >= self.n_symbols) {
                return Err(Error::invalid("position outside frame"));
            }
        }
        if self.dmrs_positions.iter().any(|p| self.csrs_positions.binary_search(p).is_ok()) {
            return Err(Error::invalid("DMRS and CSRS positions must be disjoint"));
        }
        Ok(())
    }

    pub fn roles(&self) -> Vec<Role> {
        let mut roles = vec![Role::Data; self.n_symbols];
        for &p in &self.dmrs_positions {
            roles[p] = Role::Dmrs;
        }
        for &p in &self.csrs_positions {
            roles[p] = Role::Csrs;
        }
        roles
    }

    pub fn data_positions(&self) -> Vec<usize> {
        self.roles()
            .iter()
            .enumerate()
            .filter_map(|(i, r)| (*r == Role::Data).then_some(i))
            .collect()
    }

    /// Number of source bits a frame of this layout carries
    /// (streams x data positions x bits/symbol, stream-major).
    pub fn data_bit_len(&self) -> usize {
        self.n_streams * self.data_positions().len() * self.modulation.bits_per_symbol()
    }
}

/// A built frame: role tags, per-stream symbols, and the source bits behind
/// the DATA positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub config: FrameConfig,
    pub roles: Vec<Role>,
    /// `n_streams x n_symbols` payload.
    pub symbols: DMatrix<Complex64>,
    /// Source bits, stream-major.
    pub data_bits: Vec<u8>,
}

/// Pseudo-random QPSK DMRS block for the config, `n_streams x |DMRS|`.
fn dmrs_block(cfg: &FrameConfig) -> DMatrix<Complex64> {
    let mut rng = seed::rng(seed::derive(cfg.seed, 0xD3)); // DMRS stream tag
    let n = cfg.dmrs_positions.len();
    let mut block = DMatrix::zeros(cfg.n_streams, n);
    for s in 0..cfg.n_streams {
        for p in 0..n {
            let bits = [rng.random_range(0..2u8), rng.random_range(0..2u8)];
            block[(s, p)] = map_symbol(&bits, Modulation::Qpsk);
        }
    }
    block
}

/// Builds a frame from source bits (stream-major, sized exactly to the
/// layout's DATA capacity).
pub fn build_frame(cfg: &FrameConfig, data_bits: &[u8]) -> Result<Frame> {
    cfg.validate()?;
    if data_bits.len() != cfg.data_bit_len() {
        return Err(Error::Framing(format!(
            "data bits {} != layout capacity {}",
            data_bits.len(),
            cfg.data_bit_len()
        )));
    }
    let roles = cfg.roles();
    let data_pos = cfg.data_positions();
    let mut symbols = DMatrix::zeros(cfg.n_streams, cfg.n_symbols);

    let dmrs = dmrs_block(cfg);
    for (j, &p) in cfg.dmrs_positions.iter().enumerate() {
        for s in 0..cfg.n_streams {
            symbols[(s, p)] = dmrs[(s, j)];
        }
    }
    // CSRS slots stay silent from the transmitter side.

    let per_stream = data_pos.len() * cfg.modulation.bits_per_symbol();
    for s in 0..cfg.n_streams {
        let chunk = &data_bits[s * per_stream..(s + 1) * per_stream];
        let syms = modulate(chunk, cfg.modulation)?;
        for (j, &p) in data_pos.iter().enumerate() {
            symbols[(s, p)] = syms[j];
        }
    }

    Ok(Frame { config: cfg.clone(), roles, symbols, data_bits: data_bits.to_vec() })
}

/// Role-wise slices of a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBlocks {
    pub dmrs: DMatrix<Complex64>,
    pub csrs: DMatrix<Complex64>,
    pub data: DMatrix<Complex64>,
}

fn gather(sym: &DMatrix<Complex64>, positions: &[usize]) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(sym.nrows(), positions.len());
    for (j, &p) in positions.iter().enumerate() {
        out.set_column(j, &sym.column(p));
    }
    out
}

/// Splits a frame into its role blocks.
pub fn split_frame(frame: &Frame) -> FrameBlocks {
    FrameBlocks {
        dmrs: gather(&frame.symbols, &frame.config.dmrs_positions),
        csrs: gather(&frame.symbols, &frame.config.csrs_positions),
        data: gather(&frame.symbols, &frame.config.data_positions()),
    }
}

/// Inverse of [`split_frame`] on role boundaries.
pub fn assemble_frame(cfg: &FrameConfig, blocks: &FrameBlocks) -> Result<DMatrix<Complex64>> {
    cfg.validate()?;
    let data_pos = cfg.data_positions();
    if blocks.dmrs.ncols() != cfg.dmrs_positions.len()
        || blocks.csrs.ncols() != cfg.csrs_positions.len()
        || blocks.data.ncols() != data_pos.len()
        || blocks.dmrs.nrows() != cfg.n_streams
        || blocks.csrs.nrows() != cfg.n_streams
        || blocks.data.nrows() != cfg.n_streams
    {
        return Err(Error::dims("block shapes disagree with the layout"));
    }
    let mut symbols = DMatrix::zeros(cfg.n_streams, cfg.n_symbols);
    for (j, &p) in cfg.dmrs_positions.iter().enumerate() {
        symbols.set_column(p, &blocks.dmrs.column(j));
    }
    for (j, &p) in cfg.csrs_positions.iter().enumerate() {
        symbols.set_column(p, &blocks.csrs.column(j));
    }
    for (j, &p) in data_pos.iter().enumerate() {
        symbols.set_column(p, &blocks.data.column(j));
    }
    Ok(symbols)
}

/// Serializes a frame to the textual fixture format: a short header followed
/// by one line per position (`pos role re im [re im ...]`, one re/im pair
/// per stream). Floats use shortest round-trip formatting.
pub fn dump_frame(frame: &Frame) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "echosurf-frame v1");
    let _ = writeln!(out, "streams {}", frame.config.n_streams);
    let _ = writeln!(out, "symbols {}", frame.config.n_symbols);
    let _ = writeln!(out, "modulation {}", frame.config.modulation.name());
    let _ = writeln!(out, "dmrs-seed {}", frame.config.seed);
    for p in 0..frame.config.n_symbols {
        let _ = write!(out, "{} {}", p, frame.roles[p].name());
        for s in 0..frame.config.n_streams {
            let z = frame.symbols[(s, p)];
            let _ = write!(out, " {} {}", z.re, z.im);
        }
        let _ = writeln!(out);
    }
    out
}

fn framing_at(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Framing(format!("line {line}: {msg}"))
}

/// Parses the textual fixture format back into a [`Frame`].
///
/// The layout is rebuilt from the role tags, source bits are recovered by
/// demodulating the DATA symbols, and the DMRS content is checked against
/// regeneration from the recorded seed.
pub fn load_frame(text: &str) -> Result<Frame> {
    fn read_header<'a>(
        iter: &mut impl Iterator<Item = (usize, &'a str)>,
        key: &str,
    ) -> Result<(usize, String)> {
        let (idx, line) =
            iter.next().ok_or_else(|| Error::Framing(format!("missing `{key}` header")))?;
        let line_no = idx + 1;
        let mut parts = line.split_whitespace();
        let k = parts.next().unwrap_or("");
        if k != key {
            return Err(framing_at(line_no, format!("expected `{key}`, found `{k}`")));
        }
        let v = parts
            .next()
            .ok_or_else(|| framing_at(line_no, format!("`{key}` needs a value")))?;
        if parts.next().is_some() {
            return Err(framing_at(line_no, "trailing tokens after header value"));
        }
        Ok((line_no, v.to_string()))
    }

    let mut lines = text.lines().enumerate();
    let (idx0, first) = lines.next().ok_or_else(|| Error::Framing("empty input".into()))?;
    if first.trim() != "echosurf-frame v1" {
        return Err(framing_at(idx0 + 1, "not an echosurf frame (bad magic)"));
    }

    let parse_num = |line: usize, v: &str, what: &str| -> Result<usize> {
        v.parse::<usize>().map_err(|_| framing_at(line, format!("bad {what}: `{v}`")))
    };

    let (ls, streams_v) = read_header(&mut lines, "streams")?;
    let n_streams = parse_num(ls, &streams_v, "stream count")?;
    let (ln, symbols_v) = read_header(&mut lines, "symbols")?;
    let n_symbols = parse_num(ln, &symbols_v, "symbol count")?;
    let (lm, mod_v) = read_header(&mut lines, "modulation")?;
    let modulation = Modulation::from_name(&mod_v)
        .ok_or_else(|| framing_at(lm, format!("unknown modulation `{mod_v}`")))?;
    let (lg, seed_v) = read_header(&mut lines, "dmrs-seed")?;
    let seed_val = seed_v
        .parse::<u64>()
        .map_err(|_| framing_at(lg, format!("bad seed `{seed_v}`")))?;

    if n_streams == 0 || n_symbols == 0 {
        return Err(Error::Framing("frame must have at least one stream and one symbol".into()));
    }
    // Fixture-format guardrail, not a physical limit.
    if n_streams > 1024 || n_symbols > 1_000_000 {
        return Err(Error::Framing("frame dimensions exceed the fixture format limits".into()));
    }

    let mut roles = vec![None::<Role>; n_symbols];
    let mut symbols = DMatrix::zeros(n_streams, n_symbols);
    let mut seen = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let pos_tok = parts.next().unwrap();
        let pos = parse_num(line_no, pos_tok, "position")?;
        if pos >= n_symbols {
            return Err(framing_at(line_no, format!("position {pos} outside frame of {n_symbols}")));
        }
        let role_tok = parts
            .next()
            .ok_or_else(|| framing_at(line_no, "missing role tag"))?;
        let role = Role::from_name(role_tok)
            .ok_or_else(|| framing_at(line_no, format!("unknown role `{role_tok}`")))?;
        if roles[pos].is_some() {
            return Err(framing_at(line_no, format!("duplicate position {pos}")));
        }
        roles[pos] = Some(role);
        for s in 0..n_streams {
            let re_tok = parts
                .next()
                .ok_or_else(|| framing_at(line_no, format!("missing re value for stream {s}")))?;
            let im_tok = parts
                .next()
                .ok_or_else(|| framing_at(line_no, format!("missing im value for stream {s}")))?;
            let re: f64 = re_tok
                .parse()
                .map_err(|_| framing_at(line_no, format!("bad float `{re_tok}`")))?;
            let im: f64 = im_tok
                .parse()
                .map_err(|_| framing_at(line_no, format!("bad float `{im_tok}`")))?;
            if !re.is_finite() || !im.is_finite() {
                return Err(framing_at(line_no, "non-finite symbol value"));
            }
            symbols[(s, pos)] = Complex64::new(re, im);
        }
        if parts.next().is_some() {
            return Err(framing_at(line_no, "trailing tokens"));
        }
        seen += 1;
    }
    if seen != n_symbols {
        return Err(Error::Framing(format!("{seen} positions present, header says {n_symbols}")));
    }

    let roles: Vec<Role> = roles.into_iter().map(|r| r.unwrap()).collect();
    let dmrs_positions: Vec<usize> = roles
        .iter()
        .enumerate()
        .filter_map(|(i, r)| (*r == Role::Dmrs).then_some(i))
        .collect();
    let csrs_positions: Vec<usize> = roles
        .iter()
        .enumerate()
        .filter_map(|(i, r)| (*r == Role::Csrs).then_some(i))
        .collect();
    let cfg = FrameConfig {
        n_symbols,
        n_streams,
        dmrs_positions,
        csrs_positions,
        modulation,
        seed: seed_val,
    };
    cfg.validate().map_err(|e| Error::Framing(format!("layout invalid: {e}")))?;

    // The DMRS invariant: stored pilots must match regeneration from the seed.
    let expect = dmrs_block(&cfg);
    for (j, &p) in cfg.dmrs_positions.iter().enumerate() {
        for s in 0..n_streams {
            if symbols[(s, p)] != expect[(s, j)] {
                return Err(Error::Framing(format!(
                    "DMRS at position {p} stream {s} does not match the recorded seed"
                )));
            }
        }
    }

    // Recover source bits from the DATA block.
    let data_pos = cfg.data_positions();
    let mut data_bits = Vec::with_capacity(cfg.data_bit_len());
    for s in 0..n_streams {
        let col: Vec<Complex64> = data_pos.iter().map(|&p| symbols[(s, p)]).collect();
        data_bits.extend(demodulate(&col, modulation));
    }

    Ok(Frame { config: cfg, roles, symbols, data_bits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_bits(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn qpsk_map_anchor_point() {
        let s = modulate(&[0, 0], Modulation::Qpsk).unwrap();
        let expect = Complex64::new(1.0, 1.0) / 2f64.sqrt();
        assert_eq!(s[0], expect);
    }

    #[test]
    fn constellations_have_unit_average_power() {
        for scheme in [Modulation::Qpsk, Modulation::Qam16] {
            let pts = scheme.points();
            let p = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((p - 1.0).abs() < 1e-12, "{}: {p}", scheme.name());
        }
    }

    #[test]
    fn modulate_rejects_ragged_input() {
        assert!(matches!(modulate(&[0, 1, 0], Modulation::Qpsk), Err(Error::Framing(_))));
        assert!(matches!(modulate(&[0, 1, 0], Modulation::Qam16), Err(Error::Framing(_))));
    }

    #[test]
    fn noiseless_round_trip_is_exact() {
        let mut rng = seed::rng(1);
        for scheme in [Modulation::Qpsk, Modulation::Qam16] {
            let bits = random_bits(&mut rng, 100_000 * scheme.bits_per_symbol() / 2);
            let bits = &bits[..bits.len() - bits.len() % scheme.bits_per_symbol()];
            let syms = modulate(bits, scheme).unwrap();
            let back = demodulate(&syms, scheme);
            assert_eq!(bits, &back[..]);
        }
    }

    #[test]
    fn qpsk_boundary_tie_breaks_low() {
        // Pure real 1.0 is equidistant from (1+j)/sqrt2 (bits 00) and
        // (1-j)/sqrt2 (bits 01); the tie resolves to 00.
        let bits = demodulate(&[Complex64::new(1.0, 0.0)], Modulation::Qpsk);
        assert_eq!(bits, vec![0, 0]);
    }

    #[test]
    fn qpsk_decision_is_scale_invariant() {
        let mut rng = seed::rng(2);
        let bits = random_bits(&mut rng, 2000);
        let syms = modulate(&bits, Modulation::Qpsk).unwrap();
        let scaled: Vec<Complex64> = syms.iter().map(|z| z * 3.0).collect();
        assert_eq!(demodulate(&scaled, Modulation::Qpsk), bits);
    }

    #[test]
    fn build_split_assemble_round_trip() {
        let cfg = FrameConfig::periodic(28, 2, 7, 4, Modulation::Qam16, 5).unwrap();
        let mut rng = seed::rng(3);
        let bits = random_bits(&mut rng, cfg.data_bit_len());
        let frame = build_frame(&cfg, &bits).unwrap();
        let blocks = split_frame(&frame);
        let symbols = assemble_frame(&cfg, &blocks).unwrap();
        assert_eq!(symbols, frame.symbols);
    }

    #[test]
    fn frame_without_data_positions_has_empty_data_block() {
        let cfg = FrameConfig {
            n_symbols: 4,
            n_streams: 1,
            dmrs_positions: vec![0, 1, 2, 3],
            csrs_positions: vec![],
            modulation: Modulation::Qpsk,
            seed: 9,
        };
        let frame = build_frame(&cfg, &[]).unwrap();
        let blocks = split_frame(&frame);
        assert_eq!(blocks.data.ncols(), 0);
        assert_eq!(blocks.dmrs.ncols(), 4);
    }

    #[test]
    fn dmrs_regenerates_from_seed() {
        let cfg = FrameConfig::periodic(21, 1, 7, 0, Modulation::Qpsk, 77).unwrap();
        let a = build_frame(&cfg, &vec![0; cfg.data_bit_len()]).unwrap();
        let b = build_frame(&cfg, &vec![1; cfg.data_bit_len()]).unwrap();
        let ba = split_frame(&a);
        let bb = split_frame(&b);
        assert_eq!(ba.dmrs, bb.dmrs);
        // And they are QPSK points.
        for z in ba.dmrs.iter() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn roles_partition_every_position() {
        let cfg = FrameConfig::periodic(140, 1, 7, 5, Modulation::Qpsk, 1).unwrap();
        let roles = cfg.roles();
        assert_eq!(roles.len(), 140);
        let n_dmrs = roles.iter().filter(|r| **r == Role::Dmrs).count();
        let n_csrs = roles.iter().filter(|r| **r == Role::Csrs).count();
        let n_data = roles.iter().filter(|r| **r == Role::Data).count();
        assert_eq!(n_dmrs + n_csrs + n_data, 140);
        assert_eq!(n_dmrs, cfg.dmrs_positions.len());
        assert_eq!(n_csrs, cfg.csrs_positions.len());
    }

    #[test]
    fn rejects_overlapping_positions() {
        let cfg = FrameConfig {
            n_symbols: 10,
            n_streams: 1,
            dmrs_positions: vec![0, 3],
            csrs_positions: vec![3],
            modulation: Modulation::Qpsk,
            seed: 0,
        };
        assert!(matches!(cfg.validate(), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn rejects_wrong_bit_count() {
        let cfg = FrameConfig::periodic(14, 1, 7, 0, Modulation::Qpsk, 2).unwrap();
        assert!(matches!(build_frame(&cfg, &[0, 1]), Err(Error::Framing(_))));
    }

    #[test]
    fn dump_load_round_trip_is_identity() {
        let cfg = FrameConfig::periodic(35, 2, 7, 3, Modulation::Qam16, 123).unwrap();
        let mut rng = seed::rng(4);
        let bits = random_bits(&mut rng, cfg.data_bit_len());
        let frame = build_frame(&cfg, &bits).unwrap();
        let text = dump_frame(&frame);
        let back = load_frame(&text).unwrap();
        assert_eq!(back, frame);
    }

    #[test]
    fn load_rejects_corrupt_text() {
        let cfg = FrameConfig::periodic(14, 1, 7, 0, Modulation::Qpsk, 8).unwrap();
        let mut rng = seed::rng(5);
        let frame = build_frame(&cfg, &random_bits(&mut rng, cfg.data_bit_len())).unwrap();
        let good = dump_frame(&frame);

        assert!(load_frame("").is_err());
        assert!(load_frame("bogus").is_err());
        assert!(load_frame(&good.replace("dmrs", "dmr")).is_err());
        // Tampered DMRS symbol no longer matches the seed.
        let tampered = good.replacen("0 dmrs", "0 data", 1);
        // Role flip either fails layout validation (no DMRS left) or DMRS check.
        assert!(load_frame(&tampered).is_err());
        // Truncated body.
        let short: String = good.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(load_frame(&short).is_err());
    }

    #[test]
    fn ber_of_16qam_at_15db_matches_analytic_oracle() {
        // Analytic Gray-16QAM BER over AWGN:
        //   BER = 3/4 Q(x) + 1/2 Q(3x) - 1/4 Q(5x),  x = sqrt(Es/N0 / 5),
        // with Q computed from an Abramowitz-Stegun erfc approximation
        // (independent of the implementation under test).
        fn q_func(x: f64) -> f64 {
            // A&S 7.1.26 for erf, |eps| < 1.5e-7.
            let t = 1.0 / (1.0 + 0.3275911 * (x / 2f64.sqrt()));
            let poly = t
                * (0.254829592
                    + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
            0.5 * poly * (-(x * x) / 2.0).exp()
        }

        let es_n0_db = 15.0;
        let es_n0 = 10f64.powf(es_n0_db / 10.0);
        let x = (es_n0 / 5.0).sqrt();
        let ber_analytic = 0.75 * q_func(x) + 0.5 * q_func(3.0 * x) - 0.25 * q_func(5.0 * x);

        let n_symbols = 1_000_000;
        let mut rng = seed::rng(6);
        let bits = random_bits(&mut rng, n_symbols * 4);
        let syms = modulate(&bits, Modulation::Qam16).unwrap();
        let sigma = (1.0 / es_n0 / 2.0).sqrt();
        let noisy: Vec<Complex64> = syms
            .iter()
            .map(|z| {
                let n = crate::channel::draw_cn(&mut rng, 2.0 * sigma * sigma);
                z + n
            })
            .collect();
        let rx = demodulate(&noisy, Modulation::Qam16);
        let errors = bits.iter().zip(rx.iter()).filter(|(a, b)| a != b).count();
        let ber = errors as f64 / bits.len() as f64;
        let rel = (ber - ber_analytic).abs() / ber_analytic;
        assert!(rel < 0.2, "measured {ber:.5e} vs analytic {ber_analytic:.5e} (rel {rel:.3})");
    }
}
