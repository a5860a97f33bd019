//! Uniform draws with a fixed consumption order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Purpose of a draw. Sources may treat decision draws differently from
/// arrival draws; [`Mirrored`] relies on this.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DrawKind {
    Arrival,
    Exogenous,
    /// Stream(0) branch choice.
    Branch,
    /// Simultaneous-descend tie break.
    Tie,
}

pub trait DrawSource {
    /// Uniform value in [0, 1).
    fn draw(&mut self, kind: DrawKind) -> f64;
}

#[derive(Clone, Debug)]
pub struct ChaChaDraws(ChaCha8Rng);

impl ChaChaDraws {
    pub fn new(seed: u64) -> Self {
        ChaChaDraws(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl DrawSource for ChaChaDraws {
    fn draw(&mut self, _kind: DrawKind) -> f64 {
        self.0.gen::<f64>()
    }
}

/// Reflects decision draws (`u -> 1 - u`) and passes the rest through.
/// With `eta = 0.5` this turns every left choice into a right choice.
#[derive(Clone, Debug)]
pub struct Mirrored<D>(pub D);

impl<D: DrawSource> DrawSource for Mirrored<D> {
    fn draw(&mut self, kind: DrawKind) -> f64 {
        let u = self.0.draw(kind);
        match kind {
            DrawKind::Branch | DrawKind::Tie => 1.0 - u,
            _ => u,
        }
    }
}

/// Replays a fixed sequence, then repeats its last value.
#[derive(Clone, Debug)]
pub struct Scripted {
    values: Vec<f64>,
    pos: usize,
}

impl Scripted {
    pub fn new(values: Vec<f64>) -> Self {
        Scripted { values, pos: 0 }
    }
}

impl DrawSource for Scripted {
    fn draw(&mut self, _kind: DrawKind) -> f64 {
        let v = self.values.get(self.pos).or(self.values.last()).copied().unwrap_or(0.5);
        self.pos += 1;
        v
    }
}

pub fn bernoulli(p: f64, u: f64) -> bool {
    u < p
}

/// One slot of the source process.
pub fn sample_arrival(lambda: f64, src: &mut dyn DrawSource) -> bool {
    bernoulli(lambda, src.draw(DrawKind::Arrival))
}

/// SplitMix64 finalizer; used to derive independent seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for point `index` of a sweep started from `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix64(base ^ splitmix64(index))
}
