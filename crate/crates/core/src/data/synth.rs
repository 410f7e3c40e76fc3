//! Synthetic word-segment corpus.
//!
//! Word types are built from a small shared inventory of "phone" vectors:
//! each type is a sequence of 3–6 phones, and its template is a smooth
//! trajectory that glides through them. A token resamples the template at a
//! random duration through a random monotone time warp, then picks up
//! speaker and channel variability:
//!
//! * a per-speaker offset and per-dimension gain (removed by CMVN),
//! * a smooth per-token trajectory confined to a fixed low-rank "channel"
//!   subspace, which frame-level distances cannot ignore but a learned
//!   projection can,
//! * white Gaussian noise.
//!
//! Every variability source other than duration and warping scales with
//! `noise_sigma`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Segment, SegmentArchive};
use crate::net::Matrix;
use crate::{Error, Result};

const PHONE_NAMES: &[&str] = &[
    "a", "e", "i", "o", "u", "k", "t", "p", "s", "m", "n", "l", "r", "d", "g", "b",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub num_types: usize,
    pub tokens_per_type: usize,
    pub dim: usize,
    /// Inclusive range of token durations in frames.
    pub duration_range: (usize, usize),
    /// Strength of the random monotone time warp, in `[0, 1)`.
    pub warp_strength: f64,
    pub noise_sigma: f64,
    /// Fraction of word types whose tokens go only to dev and test.
    pub unseen_type_fraction: f64,
    /// Share of all tokens placed in the training split; the remainder is
    /// divided evenly between dev and test.
    pub train_fraction: f64,
    pub num_phones: usize,
    pub phones_per_word: (usize, usize),
    pub num_speakers: usize,
    /// Rank of the channel subspace.
    pub channel_rank: usize,
    /// Channel trajectory amplitude relative to `noise_sigma`.
    pub channel_gain: f64,
    /// Speaker offset amplitude relative to `noise_sigma`.
    pub speaker_gain: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_types: 30,
            tokens_per_type: 20,
            dim: 13,
            duration_range: (40, 120),
            warp_strength: 0.5,
            noise_sigma: 0.3,
            unseen_type_fraction: 0.1,
            train_fraction: 2.0 / 3.0,
            num_phones: 12,
            phones_per_word: (3, 6),
            num_speakers: 12,
            channel_rank: 4,
            channel_gain: 8.0,
            speaker_gain: 3.0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.num_types < 2 {
            return fail(format!("num_types must be >= 2, got {}", self.num_types));
        }
        if self.tokens_per_type < 2 {
            return fail(format!(
                "tokens_per_type must be >= 2, got {}",
                self.tokens_per_type
            ));
        }
        if self.dim == 0 {
            return fail("dim must be >= 1".into());
        }
        let (lo, hi) = self.duration_range;
        if lo == 0 || lo > hi {
            return fail(format!("invalid duration range {lo}..={hi}"));
        }
        if !(0.0..1.0).contains(&self.warp_strength) {
            return fail(format!(
                "warp_strength must be in [0,1), got {}",
                self.warp_strength
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !(0.0..1.0).contains(&self.unseen_type_fraction) {
            return fail(format!(
                "unseen_type_fraction must be in [0,1), got {}",
                self.unseen_type_fraction
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!(
                "train_fraction must be in (0,1), got {}",
                self.train_fraction
            ));
        }
        if self.num_phones < 2 {
            return fail("num_phones must be >= 2".into());
        }
        let (pmin, pmax) = self.phones_per_word;
        if pmin == 0 || pmin > pmax {
            return fail(format!("invalid phones_per_word {pmin}..={pmax}"));
        }
        let combos: f64 = (pmin..=pmax)
            .map(|k| (self.num_phones as f64).powi(k as i32))
            .sum();
        if combos < self.num_types as f64 * 2.0 {
            return fail("phone inventory too small for the requested number of types".into());
        }
        if self.num_speakers == 0 {
            return fail("num_speakers must be >= 1".into());
        }
        if self.channel_rank > self.dim {
            return fail(format!(
                "channel_rank {} exceeds dim {}",
                self.channel_rank, self.dim
            ));
        }
        let (train, _, _) = self.split_sizes();
        if train > self.seen_types() * self.tokens_per_type {
            return fail("training split larger than the tokens of seen types".into());
        }
        if train < self.seen_types() {
            return fail("training split too small to include every seen type".into());
        }
        Ok(())
    }

    pub fn unseen_types(&self) -> usize {
        (self.unseen_type_fraction * self.num_types as f64).round() as usize
    }

    fn seen_types(&self) -> usize {
        self.num_types - self.unseen_types()
    }

    /// `(train, dev, test)` token counts.
    pub fn split_sizes(&self) -> (usize, usize, usize) {
        let total = self.num_types * self.tokens_per_type;
        let train = (self.train_fraction * total as f64 + 1e-9).floor() as usize;
        let rest = total - train;
        let dev = rest.div_ceil(2);
        (train, dev, rest - dev)
    }
}

/// Train, dev and test archives.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub train: SegmentArchive,
    pub dev: SegmentArchive,
    pub test: SegmentArchive,
}

struct WordType {
    label: String,
    phones: Vec<usize>,
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Template value at normalized time `u`: a Gaussian-weighted blend of the
/// word's phone vectors centred at evenly spaced positions.
fn template_at(word: &WordType, inventory: &[Vec<f64>], u: f64, out: &mut [f64]) {
    let k = word.phones.len() as f64;
    let width = 0.35 / k;
    out.iter_mut().for_each(|v| *v = 0.0);
    let mut total = 0.0;
    for (j, &p) in word.phones.iter().enumerate() {
        let centre = (j as f64 + 0.5) / k;
        let w = (-0.5 * ((u - centre) / width).powi(2)).exp();
        total += w;
        for (o, &v) in out.iter_mut().zip(&inventory[p]) {
            *o += w * v;
        }
    }
    out.iter_mut().for_each(|v| *v /= total);
}

/// Orthonormal basis of a random `rank`-dimensional subspace of `R^dim`.
fn random_subspace<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(rank);
    while basis.len() < rank {
        let mut v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}

pub fn synth_generate(config: &SynthConfig, seed: u64) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = config.dim;

    let inventory: Vec<Vec<f64>> = (0..config.num_phones)
        .map(|_| (0..dim).map(|_| gaussian(&mut rng)).collect())
        .collect();
    let phone_name = |p: usize| -> String {
        PHONE_NAMES
            .get(p)
            .map_or_else(|| format!("x{p}"), |s| s.to_string())
    };

    let mut words: Vec<WordType> = Vec::with_capacity(config.num_types);
    let mut taken = std::collections::HashSet::new();
    let (pmin, pmax) = config.phones_per_word;
    while words.len() < config.num_types {
        let k = rng.random_range(pmin..=pmax);
        let mut phones: Vec<usize> = Vec::with_capacity(k);
        while phones.len() < k {
            let p = rng.random_range(0..config.num_phones);
            // no immediate repeats; they would merge into one longer phone
            if phones.last() != Some(&p) {
                phones.push(p);
            }
        }
        let label: String = phones.iter().map(|&p| phone_name(p)).collect();
        if taken.insert(label.clone()) {
            words.push(WordType { label, phones });
        }
    }

    let channel = random_subspace(dim, config.channel_rank, &mut rng);
    let sigma = config.noise_sigma;
    let speakers: Vec<(Vec<f64>, Vec<f64>)> = (0..config.num_speakers)
        .map(|_| {
            let offset = (0..dim)
                .map(|_| sigma * config.speaker_gain * gaussian(&mut rng))
                .collect();
            let gain = (0..dim)
                .map(|_| (sigma * 0.5 * gaussian(&mut rng)).exp())
                .collect();
            (offset, gain)
        })
        .collect();

    // tokens[type][i]
    let mut tokens: Vec<Vec<Segment>> = Vec::with_capacity(words.len());
    let (dmin, dmax) = config.duration_range;
    let mut frame = vec![0.0; dim];
    for word in &words {
        let mut list = Vec::with_capacity(config.tokens_per_type);
        for _ in 0..config.tokens_per_type {
            let t_len = rng.random_range(dmin..=dmax);
            let a1 = rng.random_range(-0.5..0.5) * config.warp_strength;
            let a2 = rng.random_range(-0.5..0.5) * config.warp_strength;
            let spk = rng.random_range(0..config.num_speakers);
            let (offset, gain) = &speakers[spk];
            // channel trajectory: two sinusoids per basis direction
            let chan: Vec<[f64; 4]> = (0..config.channel_rank)
                .map(|_| {
                    [
                        gaussian(&mut rng),
                        rng.random_range(0.0..std::f64::consts::TAU),
                        gaussian(&mut rng),
                        rng.random_range(0.0..std::f64::consts::TAU),
                    ]
                })
                .collect();
            let mut data = Vec::with_capacity(t_len * dim);
            for t in 0..t_len {
                let u = (t as f64 + 0.5) / t_len as f64;
                let pi = std::f64::consts::PI;
                let warped = u + a1 * (pi * u).sin() / pi + a2 * (2.0 * pi * u).sin() / (2.0 * pi);
                template_at(word, &inventory, warped, &mut frame);
                for (basis, c) in channel.iter().zip(&chan) {
                    let coef = sigma
                        * config.channel_gain
                        * (c[0] * (pi * u + c[1]).sin() + c[2] * (3.0 * pi * u + c[3]).sin())
                        / 2f64.sqrt();
                    frame.iter_mut().zip(basis).for_each(|(f, b)| *f += coef * b);
                }
                for ((f, o), g) in frame.iter_mut().zip(offset).zip(gain) {
                    let noisy = *f + sigma * gaussian(&mut rng);
                    data.push(noisy * g + o);
                }
            }
            list.push(Segment::new(
                word.label.clone(),
                format!("spk{spk:02}"),
                Matrix::from_vec(t_len, dim, data),
            ));
        }
        tokens.push(list);
    }

    // Split: unseen types contribute only to dev/test; seen types fill the
    // training split as evenly as possible.
    let mut type_order: Vec<usize> = (0..words.len()).collect();
    type_order.shuffle(&mut rng);
    let mut unseen: Vec<usize> = type_order[..config.unseen_types()].to_vec();
    unseen.sort_unstable();
    let seen: Vec<usize> = (0..words.len()).filter(|t| !unseen.contains(t)).collect();

    let (n_train, _, _) = config.split_sizes();
    let per_type = n_train / seen.len();
    let extra = n_train % seen.len();
    let mut train = Vec::with_capacity(n_train);
    let mut rest = Vec::new();
    for (rank, &t) in seen.iter().enumerate() {
        let mut idx: Vec<usize> = (0..config.tokens_per_type).collect();
        idx.shuffle(&mut rng);
        let take = per_type + usize::from(rank < extra);
        let (a, b) = idx.split_at(take);
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_unstable();
        b.sort_unstable();
        train.extend(a.into_iter().map(|i| (t, i)));
        rest.extend(b.into_iter().map(|i| (t, i)));
    }
    for &t in &unseen {
        rest.extend((0..config.tokens_per_type).map(|i| (t, i)));
    }
    rest.sort_unstable();
    let mut dev = Vec::new();
    let mut test = Vec::new();
    for (k, item) in rest.into_iter().enumerate() {
        if k % 2 == 0 {
            dev.push(item);
        } else {
            test.push(item);
        }
    }

    let build = |items: &[(usize, usize)]| -> Result<SegmentArchive> {
        SegmentArchive::from_segments(
            dim,
            items.iter().map(|&(t, i)| tokens[t][i].clone()).collect(),
        )
    };
    Ok(SynthCorpus {
        train: build(&train)?,
        dev: build(&dev)?,
        test: build(&test)?,
    })
}
